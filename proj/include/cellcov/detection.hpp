#pragma once

// Cell-wise outlier detection. Both filters return a per-cell flag mask
// (1 = remove this observed value); missing cells are never flagged.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cellcov/datagen.hpp"
#include "cellcov/matrix.hpp"

namespace cellcov {

struct RobustScale {
  double location = 0.0;  // median of the observed entries
  double scale = 0.0;     // Huber proposal-2 scale
  bool degenerate = false;  // MAD == 0; scale reported as 0
  bool converged = true;
  int iterations = 0;
};

inline constexpr double kHuberTuning = 1.345;
inline constexpr double kMadConsistency = 1.4826;

// NaN entries are skipped. Throws ParameterError with fewer than 2 observed
// entries.
RobustScale robust_location_scale(std::span<const double> x);

// Acklam's rational approximation of the standard normal quantile
// (|relative error| < 1.15e-9). Throws ParameterError outside (0, 1).
double normal_quantile(double p);
// q-quantile of the chi-square distribution with one degree of freedom.
double chi2_1_quantile(double q);

struct FilterReport {
  std::size_t n = 0, p = 0;
  CellMask flags;
  // Cell counts behind the fractions below; retained_clean + retained_contam
  // + removed_or_missing == n * p.
  std::size_t retained_clean = 0;
  std::size_t retained_contam = 0;
  std::size_t removed_or_missing = 0;
  // Present only when ground-truth masks were available.
  std::optional<double> delta_hat;
  std::optional<double> eps_hat;

  std::size_t flagged_count() const;
};

struct FilterScore {
  double delta_hat = 0.0;
  double eps_hat = 0.0;
  std::size_t retained_clean = 0;
  std::size_t retained_contam = 0;
  std::size_t removed_or_missing = 0;
};

// delta_hat = #(clean and retained) / (n p), eps_hat = #(contaminated and
// retained) / (n p). Throws DimensionError on shape mismatch.
FilterScore score_filter(std::span<const std::uint8_t> flags, const MaskedData& truth);

// Copy of md.values with flagged cells replaced by NaN.
Matrix apply_flags(const Matrix& values, std::span<const std::uint8_t> flags);

// Flags |x - location_j| > k * scale_j; degenerate columns flag nothing.
FilterReport tail_cut(const MaskedData& md, double k = 3.0);

struct DdcOptions {
  double quantile = 0.99;
  double correlation_threshold = 0.5;
  double clip = 3.0;          // winsorization of scores for the correlations
  double slope_floor = 0.1;   // |denominator| floor in ratio slopes
  std::size_t min_rows = 20;  // observed rows needed for the bivariate stage
};

struct DdcResult {
  CellMask univariate_flags;  // stage-2 cutoff only
  CellMask flags;             // union of stage-2 and residual flags
  std::vector<RobustScale> column_scales;
  std::vector<double> deshrinkage;  // a_j per column (1 when undefined)
};

// Detecting Deviating Cells on raw values (NaN = missing). Throws
// DetectionError if every column has a degenerate scale.
DdcResult ddc_detect(const Matrix& values, const DdcOptions& options = {});
FilterReport ddc(const MaskedData& md, double quantile = 0.99);

}  // namespace cellcov
