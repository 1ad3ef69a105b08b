// AVX2 + FMA variants. Compiled with -mavx2 -mfma; only reached through the
// dispatcher after a CPUID check.

#include <immintrin.h>

#include <algorithm>
#include <bit>
#include <cmath>

#include "cellcov/kernels.hpp"

namespace cellcov::kernels::detail {

namespace {

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void rotate_pair_avx2(double* x, double* y, std::size_t n, double c, double s) {
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xi = _mm256_loadu_pd(x + i);
    const __m256d yi = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(x + i, _mm256_fmsub_pd(vc, xi, _mm256_mul_pd(vs, yi)));
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(vs, xi, _mm256_mul_pd(vc, yi)));
  }
  for (; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

void rank1_update_upper_avx2(double* acc, const double* y, std::size_t p) {
  for (std::size_t j = 0; j < p; ++j) {
    const double yj = y[j];
    if (yj == 0.0) continue;
    const __m256d vj = _mm256_set1_pd(yj);
    double* row = acc + j * p;
    std::size_t k = j;
    for (; k + 4 <= p; k += 4) {
      const __m256d r = _mm256_loadu_pd(row + k);
      _mm256_storeu_pd(row + k, _mm256_fmadd_pd(vj, _mm256_loadu_pd(y + k), r));
    }
    for (; k < p; ++k) row[k] += yj * y[k];
  }
}

MaskedDistance masked_sq_distance_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t present = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    const __m256d ord = _mm256_cmp_pd(va, vb, _CMP_ORD_Q);
    const __m256d d = _mm256_and_pd(_mm256_sub_pd(va, vb), ord);
    acc = _mm256_fmadd_pd(d, d, acc);
    present += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(_mm256_movemask_pd(ord))));
  }
  MaskedDistance out;
  out.sum_sq = hsum(acc);
  out.present = present;
  for (; i < n; ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    const double d = a[i] - b[i];
    out.sum_sq += d * d;
    ++out.present;
  }
  return out;
}

PairMoments clipped_pair_moments_avx2(const double* a, const double* b, std::size_t n,
                                      double clip) {
  const __m256d hi = _mm256_set1_pd(clip);
  const __m256d lo = _mm256_set1_pd(-clip);
  __m256d sa = _mm256_setzero_pd(), sb = _mm256_setzero_pd();
  __m256d saa = _mm256_setzero_pd(), sbb = _mm256_setzero_pd(), sab = _mm256_setzero_pd();
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    const __m256d ord = _mm256_cmp_pd(va, vb, _CMP_ORD_Q);
    const __m256d u = _mm256_and_pd(_mm256_max_pd(lo, _mm256_min_pd(va, hi)), ord);
    const __m256d v = _mm256_and_pd(_mm256_max_pd(lo, _mm256_min_pd(vb, hi)), ord);
    sa = _mm256_add_pd(sa, u);
    sb = _mm256_add_pd(sb, v);
    saa = _mm256_fmadd_pd(u, u, saa);
    sbb = _mm256_fmadd_pd(v, v, sbb);
    sab = _mm256_fmadd_pd(u, v, sab);
    count += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(_mm256_movemask_pd(ord))));
  }
  PairMoments m;
  m.count = count;
  m.sum_a = hsum(sa);
  m.sum_b = hsum(sb);
  m.sum_aa = hsum(saa);
  m.sum_bb = hsum(sbb);
  m.sum_ab = hsum(sab);
  for (; i < n; ++i) {
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
