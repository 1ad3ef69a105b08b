#include <string>

#include "cellcov/error.hpp"
#include "cellcov/kernels.hpp"

namespace cellcov::kernels {

namespace {

Isa detect() noexcept {
#if defined(CELLCOV_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::avx2;
#endif
  return Isa::scalar;
}

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DimensionError(std::string(what) + ": operand sizes differ");
}

}  // namespace

const char* isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) noexcept {
  if (isa == Isa::scalar) return true;
  return detected_isa() == Isa::avx2;
}

Isa detected_isa() noexcept {
  static const Isa isa = detect();
  return isa;
}

void rotate_pair(std::span<double> x, std::span<double> y, double c, double s, Isa isa) {
  require_same_size(x.size(), y.size(), "rotate_pair");
#if defined(CELLCOV_HAVE_AVX2)
  if (isa == Isa::avx2 && detected_isa() == Isa::avx2) return detail::rotate_pair_avx2(x.data(), y.data(), x.size(), c, s);
#endif
  (void)isa;
  detail::rotate_pair_scalar(x.data(), y.data(), x.size(), c, s);
}

void rank1_update_upper(std::span<double> acc, std::span<const double> y, Isa isa) {
  require_same_size(acc.size(), y.size() * y.size(), "rank1_update_upper");
#if defined(CELLCOV_HAVE_AVX2)
  if (isa == Isa::avx2 && detected_isa() == Isa::avx2) return detail::rank1_update_upper_avx2(acc.data(), y.data(), y.size());
#endif
  (void)isa;
  detail::rank1_update_upper_scalar(acc.data(), y.data(), y.size());
}

MaskedDistance masked_sq_distance(std::span<const double> a, std::span<const double> b, Isa isa) {
  require_same_size(a.size(), b.size(), "masked_sq_distance");
#if defined(CELLCOV_HAVE_AVX2)
  if (isa == Isa::avx2 && detected_isa() == Isa::avx2) return detail::masked_sq_distance_avx2(a.data(), b.data(), a.size());
#endif
  (void)isa;
  return detail::masked_sq_distance_scalar(a.data(), b.data(), a.size());
}

PairMoments clipped_pair_moments(std::span<const double> a, std::span<const double> b, double clip,
                                 Isa isa) {
  require_same_size(a.size(), b.size(), "clipped_pair_moments");
#if defined(CELLCOV_HAVE_AVX2)
  if (isa == Isa::avx2 && detected_isa() == Isa::avx2) return detail::clipped_pair_moments_avx2(a.data(), b.data(), a.size(), clip);
#endif
  (void)isa;
  return detail::clipped_pair_moments_scalar(a.data(), b.data(), a.size(), clip);
}

}  // namespace cellcov::kernels
