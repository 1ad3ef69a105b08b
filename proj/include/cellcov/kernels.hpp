#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference version and,
// on x86-64 builds with CELLCOV_HAVE_AVX2, an AVX2+FMA version. The entry
// points without an Isa argument dispatch to the best variant the running
// CPU supports; the explicit overloads exist for equivalence testing.
//
// Missing values are NaN. Kernels that take masked input treat a coordinate
// as present only when it is non-NaN in every operand.

#include <cstddef>
#include <span>

namespace cellcov::kernels {

enum class Isa { scalar, avx2 };

const char* isa_name(Isa isa) noexcept;
bool isa_supported(Isa isa) noexcept;
// Best supported ISA, detected once per process.
Isa detected_isa() noexcept;

// x' = c*x - s*y ; y' = s*x + c*y
void rotate_pair(std::span<double> x, std::span<double> y, double c, double s, Isa isa);

// acc[j*p + k] += y[j] * y[k] for k >= j (upper triangle of a row-major p x p
// accumulator). y must be zero-filled, not NaN.
void rank1_update_upper(std::span<double> acc, std::span<const double> y, Isa isa);

struct MaskedDistance {
  double sum_sq = 0.0;      // sum of squared differences over co-present coords
  std::size_t present = 0;  // number of co-present coords
};
MaskedDistance masked_sq_distance(std::span<const double> a, std::span<const double> b, Isa isa);

// Sums over rows where both a[i] and b[i] are present, after clipping each
// value to [-clip, clip].
struct PairMoments {
  std::size_t count = 0;
  double sum_a = 0.0, sum_b = 0.0;
  double sum_aa = 0.0, sum_bb = 0.0, sum_ab = 0.0;
};
PairMoments clipped_pair_moments(std::span<const double> a, std::span<const double> b, double clip,
                                 Isa isa);

inline void rotate_pair(std::span<double> x, std::span<double> y, double c, double s) {
  rotate_pair(x, y, c, s, detected_isa());
}
inline void rank1_update_upper(std::span<double> acc, std::span<const double> y) {
  rank1_update_upper(acc, y, detected_isa());
}
inline MaskedDistance masked_sq_distance(std::span<const double> a, std::span<const double> b) {
  return masked_sq_distance(a, b, detected_isa());
}
inline PairMoments clipped_pair_moments(std::span<const double> a, std::span<const double> b,
                                        double clip) {
  return clipped_pair_moments(a, b, clip, detected_isa());
}

namespace detail {
void rotate_pair_scalar(double* x, double* y, std::size_t n, double c, double s);
void rank1_update_upper_scalar(double* acc, const double* y, std::size_t p);
MaskedDistance masked_sq_distance_scalar(const double* a, const double* b, std::size_t n);
PairMoments clipped_pair_moments_scalar(const double* a, const double* b, std::size_t n, double clip);

#if defined(CELLCOV_HAVE_AVX2)
void rotate_pair_avx2(double* x, double* y, std::size_t n, double c, double s);
void rank1_update_upper_avx2(double* acc, const double* y, std::size_t p);
MaskedDistance masked_sq_distance_avx2(const double* a, const double* b, std::size_t n);
PairMoments clipped_pair_moments_avx2(const double* a, const double* b, std::size_t n, double clip);
#endif
}  // namespace detail

}  // namespace cellcov::kernels
