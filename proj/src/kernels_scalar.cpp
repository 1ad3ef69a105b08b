// Scalar reference kernels. These define the semantics the vector variants
// are tested against.

#include <algorithm>
#include <cmath>

#include "cellcov/kernels.hpp"

namespace cellcov::kernels::detail {

void rotate_pair_scalar(double* x, double* y, std::size_t n, double c, double s) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

void rank1_update_upper_scalar(double* acc, const double* y, std::size_t p) {
  for (std::size_t j = 0; j < p; ++j) {
    const double yj = y[j];
    if (yj == 0.0) continue;
    double* row = acc + j * p;
    for (std::size_t k = j; k < p; ++k) row[k] += yj * y[k];
  }
}

MaskedDistance masked_sq_distance_scalar(const double* a, const double* b, std::size_t n) {
  MaskedDistance out;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    const double d = a[i] - b[i];
    out.sum_sq += d * d;
    ++out.present;
  }
  return out;
}

PairMoments clipped_pair_moments_scalar(const double* a, const double* b, std::size_t n,
                                        double clip) {
  PairMoments m;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    const double u = std::clamp(a[i], -clip, clip);
    const double v = std::clamp(b[i], -clip, clip);
    ++m.count;
    m.sum_a += u;
    m.sum_b += v;
    m.sum_aa += u * u;
    m.sum_bb += v * v;
    m.sum_ab += u * v;
  }
  return m;
}

}  // namespace cellcov::kernels::detail
