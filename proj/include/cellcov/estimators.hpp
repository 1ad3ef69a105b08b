#pragma once

// Covariance estimation from data with missing cells.
//
// The observed second moment of zero-filled data is biased: off-diagonal
// entries shrink by delta^2 and diagonal entries by delta. The debias_*
// functions invert that map in closed form; they do not project the result
// onto the PSD cone (see clip_negative_eigenvalues for that).

#include <span>
#include <string>
#include <vector>

#include "cellcov/datagen.hpp"
#include "cellcov/matrix.hpp"

namespace cellcov {

struct DeltaEstimate {
  double global = 1.0;
  std::vector<double> per_feature;
  std::vector<std::string> warnings;  // one entry per fully-empty column
};

// Observed-cell fractions, clamped below at 1/n.
DeltaEstimate estimate_delta(const Matrix& values);
inline DeltaEstimate estimate_delta(const MaskedData& md) { return estimate_delta(md.values); }

struct ObservedCovariance {
  SymMatrix sigma_y;  // (1/n) sum_i y_i y_i^T with missing cells read as 0
  DeltaEstimate delta_hat;
  std::size_t n_used = 0;
};

// Assumes centered data; no mean is subtracted.
ObservedCovariance empirical_cov_zero_fill(const Matrix& values);
inline ObservedCovariance empirical_cov_zero_fill(const MaskedData& md) {
  return empirical_cov_zero_fill(md.values);
}

// delta^-2 S + (delta^-1 - delta^-2) diag(S)
SymMatrix debias_mcar(const SymMatrix& sigma_y, double delta);
inline SymMatrix debias_mcar(const ObservedCovariance& oc, double delta) {
  return debias_mcar(oc.sigma_y, delta);
}

// Per-feature observation probabilities: entry (j,k) is divided by
// delta_j * delta_k off the diagonal and by delta_j on it.
SymMatrix debias_mar(const SymMatrix& sigma_y, std::span<const double> delta);
inline SymMatrix debias_mar(const ObservedCovariance& oc, std::span<const double> delta) {
  return debias_mar(oc.sigma_y, delta);
}

// MCAR correction that also removes the contamination variance left on the
// diagonal: subtracts (epsilon (1 - delta) / delta) diag(lambda_diag).
SymMatrix debias_contaminated(const SymMatrix& sigma_y, double delta, double epsilon,
                              std::span<const double> lambda_diag);
inline SymMatrix debias_contaminated(const ObservedCovariance& oc, double delta, double epsilon,
                                     std::span<const double> lambda_diag) {
  return debias_contaminated(oc.sigma_y, delta, epsilon, lambda_diag);
}

// Eigenvalue clipping at zero (optional post-step, never applied implicitly).
SymMatrix clip_negative_eigenvalues(const SymMatrix& a);

// Subtracts per-feature means computed over observed cells; NaN stays NaN.
Matrix center_observed(const Matrix& values);

}  // namespace cellcov
