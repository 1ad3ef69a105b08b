#pragma once

// Synthetic data: low effective rank Gaussian samples, MCAR / MAR masking
// and cell-wise contamination with recorded ground truth.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cellcov/matrix.hpp"
#include "cellcov/rng.hpp"

namespace cellcov {

enum class ContaminationLaw { none, dirac, gaussian };

std::string to_string(ContaminationLaw law);
// Accepts "none", "dirac", "gauss"/"gaussian". Throws ParameterError.
ContaminationLaw parse_law(const std::string& s);

struct ContaminationModel {
  double delta = 1.0;    // probability a cell is observed clean
  double epsilon = 0.0;  // probability an unobserved cell is contaminated
  ContaminationLaw law = ContaminationLaw::none;
  double sigma = 1.0;    // Dirac: +-sigma; Gaussian: N(0, sigma^2)

  void validate() const;
};

using CellMask = std::vector<std::uint8_t>;

// n x p observations. values holds NaN for missing cells. When has_truth is
// false (data read from disk) clean_mask mirrors the observed cells and
// contam_mask is all zero.
struct MaskedData {
  Matrix values;
  CellMask clean_mask;
  CellMask contam_mask;
  bool has_truth = false;

  std::size_t n() const noexcept { return values.rows(); }
  std::size_t p() const noexcept { return values.cols(); }
  std::size_t index(std::size_t i, std::size_t j) const noexcept { return i * p() + j; }

  // Wraps raw observations without ground truth.
  static MaskedData from_values(Matrix values);

  // Throws DomainError describing the first violated invariant.
  void check_invariants() const;
};

struct GroundTruth {
  SymMatrix sigma_true;
  Matrix samples_clean;
};

// Sigma = H diag(exp(-j/r)) H^T with H Haar orthogonal, scaled so that the
// largest diagonal entry is 1.
SymMatrix make_covariance(std::size_t p, double r, std::uint64_t seed);

// Haar-distributed p x p orthogonal matrix (QR of a Gaussian matrix with
// positive R diagonal).
Matrix haar_orthogonal(std::size_t p, Engine& engine);

// Rows i.i.d. N(0, sigma) through the symmetric square root of sigma
// (negative eigenvalues clamped to 0).
Matrix sample_gaussian(const SymMatrix& sigma, std::size_t n, std::uint64_t seed);

// Same draws as sample_gaussian, with the square root computed once.
class GaussianSampler {
 public:
  explicit GaussianSampler(const SymMatrix& sigma);
  Matrix sample(std::size_t n, std::uint64_t seed) const;
  std::size_t dim() const noexcept { return sqrt_sigma_.rows(); }

 private:
  Matrix sqrt_sigma_;
};

MaskedData apply_mcar(const Matrix& x, double delta, std::uint64_t seed);

struct MarResult {
  MaskedData data;
  std::vector<double> delta;
};
// delta_j = 1 - sigmoid(mean of the first 15 raw entries of column j).
MarResult apply_mar(const Matrix& x, std::uint64_t seed);
inline constexpr std::size_t kMarReferenceRows = 15;

// Fills each missing cell with probability epsilon from the contamination law.
MaskedData contaminate(const MaskedData& md, const ContaminationModel& model, std::uint64_t seed);

}  // namespace cellcov
