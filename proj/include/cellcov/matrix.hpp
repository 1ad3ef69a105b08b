#pragma once

// Dense matrices used throughout the library.
//
// Matrix is a plain row-major n x p array (data sets, eigenvector bases).
// SymMatrix is a p x p symmetric matrix whose symmetry is maintained by
// every mutating call, so entries (i,j) and (j,i) are always bitwise equal.

#include <cstddef>
#include <span>
#include <vector>

namespace cellcov {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::vector<double> column(std::size_t j) const;
  Matrix transpose() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);

class SymMatrix {
 public:
  SymMatrix() = default;
  // Zero matrix of dimension p (p >= 1).
  explicit SymMatrix(std::size_t p);

  static SymMatrix identity(std::size_t p);
  static SymMatrix diagonal(std::span<const double> d);
  // Symmetrizes (a + a^T) / 2 after checking |a_ij - a_ji| <= tol * max(1, max|a|).
  // Throws DimensionError for non-square input and DomainError for non-finite
  // entries or asymmetry beyond tol.
  static SymMatrix from_dense(const Matrix& a, double tol = 1e-9);

  std::size_t dim() const noexcept { return dim_; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
  // Writes both (i,j) and (j,i).
  void set(std::size_t i, std::size_t j, double v) {
    data_[i * dim_ + j] = v;
    data_[j * dim_ + i] = v;
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  double trace() const;
  std::vector<double> diag() const;
  // Diagonal part as a matrix (diag(A) in the estimator formulas).
  SymMatrix diag_part() const;
  Matrix to_dense() const;
  bool all_finite() const;

  SymMatrix& operator+=(const SymMatrix& other);
  SymMatrix& operator-=(const SymMatrix& other);
  SymMatrix& operator*=(double c);

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

SymMatrix operator+(SymMatrix a, const SymMatrix& b);
SymMatrix operator-(SymMatrix a, const SymMatrix& b);
SymMatrix operator*(double c, SymMatrix a);

// Eigen-decomposition of a symmetric matrix. eigenvalues are sorted in
// descending order; column k of eigenvectors pairs with eigenvalues[k].
struct Spectrum {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;
};

// Cyclic Jacobi. Converges when the off-diagonal Frobenius mass drops below
// 1e-12 * ||a||_F; throws ConvergenceError after 100 sweeps.
Spectrum eigh(const SymMatrix& a);

// max |lambda|. Matrices larger than kPowerIterationMinDim try power
// iteration first and fall back to Jacobi if it stalls.
double operator_norm(const SymMatrix& a);
inline constexpr std::size_t kPowerIterationMinDim = 500;

double frobenius_norm(const SymMatrix& a);
double frobenius_norm(const Matrix& a);

// trace(a) / ||a||. Requires a PSD within -1e-9 * ||a|| and a != 0.
double effective_rank(const SymMatrix& a);

Matrix hadamard(const Matrix& a, const Matrix& b);
SymMatrix hadamard(const SymMatrix& a, const SymMatrix& b);
Matrix hadamard(const Matrix& a, const SymMatrix& b);
Matrix outer(std::span<const double> x, std::span<const double> y);
SymMatrix outer(std::span<const double> x);

// V diag(f(lambda)) V^T for a spectrum; used for square roots and clipping.
SymMatrix reconstruct(const Spectrum& s, std::span<const double> eigenvalues);

}  // namespace cellcov
