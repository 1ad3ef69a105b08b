#include "cellcov/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cellcov/error.hpp"
#include "cellcov/kernels.hpp"

namespace cellcov {

DeltaEstimate estimate_delta(const Matrix& values) {
  const std::size_t n = values.rows(), p = values.cols();
  DeltaEstimate out;
  out.per_feature.assign(p, 0.0);
  if (n == 0 || p == 0) return out;

  std::vector<std::size_t> counts(p, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = values.row(i);
    for (std::size_t j = 0; j < p; ++j) counts[j] += std::isnan(r[j]) ? 0 : 1;
  }
  const double floor_frac = 1.0 / static_cast<double>(n);
  std::size_t total = 0;
  for (std::size_t j = 0; j < p; ++j) {
    total += counts[j];
    if (counts[j] == 0)
      out.warnings.push_back("column " + std::to_string(j) +
                             " has no observed values; delta clamped to 1/n");
    out.per_feature[j] = std::max(static_cast<double>(counts[j]) / static_cast<double>(n), floor_frac);
  }
  out.global = std::max(static_cast<double>(total) / static_cast<double>(n * p), floor_frac);
  return out;
}

ObservedCovariance empirical_cov_zero_fill(const Matrix& values) {
  const std::size_t n = values.rows(), p = values.cols();
  if (n < 2) throw ParameterError("empirical_cov_zero_fill: need n >= 2 samples, got " + std::to_string(n));
  if (p == 0) throw ParameterError("empirical_cov_zero_fill: no features");

  std::vector<double> acc(p * p, 0.0);
  std::vector<double> y(p);
  const auto isa = kernels::detected_isa();
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = values.row(i);
    for (std::size_t j = 0; j < p; ++j) y[j] = std::isnan(r[j]) ? 0.0 : r[j];
    kernels::rank1_update_upper(acc, y, isa);
  }

  ObservedCovariance oc;
  oc.sigma_y = SymMatrix(p);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j; k < p; ++k) oc.sigma_y.set(j, k, acc[j * p + k] * inv_n);
  oc.delta_hat = estimate_delta(values);
  oc.n_used = n;
  return oc;
}

SymMatrix debias_mcar(const SymMatrix& sigma_y, double delta) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw ParameterError("debias_mcar: delta must lie in (0, 1], got " + std::to_string(delta));
  const std::size_t p = sigma_y.dim();
  const double inv = 1.0 / delta;
  const double inv2 = inv * inv;
  SymMatrix out(p);
  for (std::size_t j = 0; j < p; ++j) {
    // Diagonal: delta^-2 s + (delta^-1 - delta^-2) s = delta^-1 s.
    out.set(j, j, inv * sigma_y(j, j));
    for (std::size_t k = j + 1; k < p; ++k) out.set(j, k, inv2 * sigma_y(j, k));
  }
  return out;
}

SymMatrix debias_mar(const SymMatrix& sigma_y, std::span<const double> delta) {
  const std::size_t p = sigma_y.dim();
  if (delta.size() != p)
    throw DimensionError("debias_mar: delta vector has length " + std::to_string(delta.size()) +
                         ", expected " + std::to_string(p));
  std::vector<double> inv(p);
  for (std::size_t j = 0; j < p; ++j) {
    if (!(delta[j] > 0.0 && delta[j] <= 1.0))
      throw ParameterError("debias_mar: delta[" + std::to_string(j) + "] must lie in (0, 1], got " +
                           std::to_string(delta[j]));
    inv[j] = 1.0 / delta[j];
  }
  SymMatrix out(p);
  for (std::size_t j = 0; j < p; ++j) {
    out.set(j, j, inv[j] * sigma_y(j, j));
    for (std::size_t k = j + 1; k < p; ++k) out.set(j, k, inv[j] * inv[k] * sigma_y(j, k));
  }
  return out;
}

SymMatrix debias_contaminated(const SymMatrix& sigma_y, double delta, double epsilon,
                              std::span<const double> lambda_diag) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw ParameterError("debias_contaminated: epsilon must lie in [0, 1], got " +
                         std::to_string(epsilon));
  if (lambda_diag.size() != sigma_y.dim())
    throw DimensionError("debias_contaminated: lambda_diag has the wrong length");
  for (double l : lambda_diag)
    if (!(l >= 0.0)) throw ParameterError("debias_contaminated: lambda_diag entries must be >= 0");

  SymMatrix out = debias_mcar(sigma_y, delta);
  const double w = epsilon * (1.0 - delta) / delta;
  for (std::size_t j = 0; j < out.dim(); ++j) out.set(j, j, out(j, j) - w * lambda_diag[j]);
  return out;
}

SymMatrix clip_negative_eigenvalues(const SymMatrix& a) {
  const auto s = eigh(a);
  std::vector<double> clipped(s.eigenvalues);
  for (double& v : clipped) v = std::max(v, 0.0);
  return reconstruct(s, clipped);
}

Matrix center_observed(const Matrix& values) {
  Matrix out = values;
  for (std::size_t j = 0; j < values.cols(); ++j) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < values.rows(); ++i) {
      if (std::isnan(values(i, j))) continue;
      sum += values(i, j);
      ++count;
    }
    if (count == 0) continue;
    const double mean = sum / static_cast<double>(count);
    for (std::size_t i = 0; i < values.rows(); ++i)
      if (!std::isnan(values(i, j))) out(i, j) -= mean;
  }
  return out;
}

}  // namespace cellcov
