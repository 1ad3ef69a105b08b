#include "cellcov/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cellcov/error.hpp"
#include "cellcov/kernels.hpp"

namespace cellcov {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kHuberTol = 1e-8;
constexpr int kHuberMaxIter = 100;

double median_inplace(std::vector<double>& v) {
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
  const double hi = v[m];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m));
  return 0.5 * (lo + hi);
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// E[psi_c(Z)^2] for Z ~ N(0, 1): makes the scale consistent at the normal.
double huber_beta(double c) {
  const double phi = std::exp(-0.5 * c * c) / std::sqrt(2.0 * std::numbers::pi);
  const double tail = 1.0 - std_normal_cdf(c);
  return (1.0 - 2.0 * tail) - 2.0 * c * phi + 2.0 * c * c * tail;
}

}  // namespace

RobustScale robust_location_scale(std::span<const double> x) {
  std::vector<double> obs;
  obs.reserve(x.size());
  for (double v : x)
    if (!std::isnan(v)) obs.push_back(v);
  if (obs.size() < 2)
    throw ParameterError("robust_location_scale: need at least 2 observed entries, got " +
                         std::to_string(obs.size()));

  RobustScale rs;
  std::vector<double> work(obs);
  rs.location = median_inplace(work);
  for (std::size_t i = 0; i < obs.size(); ++i) work[i] = std::abs(obs[i] - rs.location);
  const double mad = median_inplace(work);
  if (mad == 0.0) {
    rs.degenerate = true;
    rs.scale = 0.0;
    return rs;
  }

  static const double beta = huber_beta(kHuberTuning);
  const double c2 = kHuberTuning * kHuberTuning;
  const double inv_n = 1.0 / static_cast<double>(obs.size());
  double s = kMadConsistency * mad;
  rs.converged = false;
  for (int it = 1; it <= kHuberMaxIter; ++it) {
    double acc = 0.0;
    for (double v : obs) {
      const double r = (v - rs.location) / s;
      acc += std::min(r * r, c2);
    }
    const double next = s * std::sqrt(acc * inv_n / beta);
    rs.iterations = it;
    const bool done = std::abs(next - s) <= kHuberTol * next;
    s = next;
    if (done) {
      rs.converged = true;
      break;
    }
  }
  rs.scale = s;
  return rs;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw ParameterError("normal_quantile: probability must lie in (0, 1), got " + std::to_string(p));

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  constexpr double p_high = 1.0 - p_low;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > p_high) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double chi2_1_quantile(double q) {
  if (!(q > 0.0 && q < 1.0))
    throw ParameterError("chi2_1_quantile: quantile must lie in (0, 1), got " + std::to_string(q));
  const double z = normal_quantile(0.5 * (1.0 + q));
  return z * z;
}

std::size_t FilterReport::flagged_count() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), std::uint8_t{1}));
}

FilterScore score_filter(std::span<const std::uint8_t> flags, const MaskedData& truth) {
  const std::size_t cells = truth.n() * truth.p();
  if (flags.size() != cells || truth.clean_mask.size() != cells || truth.contam_mask.size() != cells)
    throw DimensionError("score_filter: flag mask shape does not match the ground truth");
  FilterScore s;
  for (std::size_t c = 0; c < cells; ++c) {
    if (flags[c]) {
      ++s.removed_or_missing;
    } else if (truth.clean_mask[c]) {
      ++s.retained_clean;
    } else if (truth.contam_mask[c]) {
      ++s.retained_contam;
    } else {
      ++s.removed_or_missing;
    }
  }
  const double total = static_cast<double>(cells);
  s.delta_hat = static_cast<double>(s.retained_clean) / total;
  s.eps_hat = static_cast<double>(s.retained_contam) / total;
  return s;
}

Matrix apply_flags(const Matrix& values, std::span<const std::uint8_t> flags) {
  if (flags.size() != values.data().size())
    throw DimensionError("apply_flags: flag mask shape does not match the data");
  Matrix out = values;
  auto cells = out.data();
  for (std::size_t c = 0; c < cells.size(); ++c)
    if (flags[c]) cells[c] = kNaN;
  return out;
}

namespace {

FilterReport make_report(const MaskedData& md, CellMask flags) {
  FilterReport rep;
  rep.n = md.n();
  rep.p = md.p();
  rep.flags = std::move(flags);
  if (md.has_truth) {
    const auto s = score_filter(rep.flags, md);
    rep.retained_clean = s.retained_clean;
    rep.retained_contam = s.retained_contam;
    rep.removed_or_missing = s.removed_or_missing;
    rep.delta_hat = s.delta_hat;
    rep.eps_hat = s.eps_hat;
  } else {
    const auto cells = md.values.data();
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!rep.flags[c] && !std::isnan(cells[c]))
        ++rep.retained_clean;
      else
        ++rep.removed_or_missing;
    }
  }
  return rep;
}

}  // namespace

FilterReport tail_cut(const MaskedData& md, double k) {
  if (!(k > 0.0)) throw ParameterError("tail_cut: k must be positive");
  const std::size_t n = md.n(), p = md.p();
  CellMask flags(n * p, 0);
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = md.values.column(j);
    const auto rs = robust_location_scale(col);
    if (rs.degenerate || rs.scale <= 0.0) continue;
    const double limit = k * rs.scale;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(col[i])) continue;
      if (std::abs(col[i] - rs.location) > limit) flags[md.index(i, j)] = 1;
    }
  }
  return make_report(md, std::move(flags));
}

namespace {

// Median of num[i] / den[i] over rows where both are present and
// |den[i]| > floor. Returns NaN when no row qualifies.
double ratio_slope(std::span<const double> num, std::span<const double> den, double floor,
                   std::vector<double>& scratch) {
  scratch.clear();
  for (std::size_t i = 0; i < num.size(); ++i) {
    if (std::isnan(num[i]) || std::isnan(den[i]) || !(std::abs(den[i]) > floor)) continue;
    scratch.push_back(num[i] / den[i]);
  }
  if (scratch.empty()) return kNaN;
  return median_inplace(scratch);
}

}  // namespace

DdcResult ddc_detect(const Matrix& values, const DdcOptions& opt) {
  const std::size_t n = values.rows(), p = values.cols();
  if (!(opt.quantile > 0.0 && opt.quantile < 1.0))
    throw ParameterError("ddc: quantile must lie in (0, 1), got " + std::to_string(opt.quantile));
  const double chi = chi2_1_quantile(opt.quantile);
  const double cutoff = std::sqrt(chi);

  DdcResult res;
  res.univariate_flags.assign(n * p, 0);
  res.flags.assign(n * p, 0);
  res.column_scales.resize(p);
  res.deshrinkage.assign(p, 1.0);

  // Standardized scores, stored column-major (z[j] is column j).
  std::vector<std::vector<double>> z(p, std::vector<double>(n, kNaN));
  std::vector<bool> usable(p, false);

  // Step 1: robust standardization.
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = values.column(j);
    const auto observed = std::count_if(col.begin(), col.end(), [](double v) { return !std::isnan(v); });
    if (observed < 2) {
      res.column_scales[j].degenerate = true;
      continue;
    }
    const auto rs = robust_location_scale(col);
    res.column_scales[j] = rs;
    if (rs.degenerate || rs.scale <= 0.0) continue;
    usable[j] = true;
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isnan(col[i])) z[j][i] = (col[i] - rs.location) / rs.scale;
  }
  if (std::none_of(usable.begin(), usable.end(), [](bool u) { return u; }))
    throw DetectionError("ddc: every column has a degenerate robust scale");

  // Step 2: univariate cutoff.
  std::vector<std::size_t> present(p, 0);
  for (std::size_t j = 0; j < p; ++j) {
    if (!usable[j]) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(z[j][i])) continue;
      if (std::abs(z[j][i]) >= cutoff) {
        res.univariate_flags[i * p + j] = 1;
        res.flags[i * p + j] = 1;
        z[j][i] = kNaN;
      } else {
        ++present[j];
      }
    }
  }

  // Step 3: robust correlations and slopes between eligible columns.
  std::vector<bool> eligible(p, false);
  for (std::size_t j = 0; j < p; ++j) eligible[j] = usable[j] && present[j] >= opt.min_rows;

  struct Link {
    std::size_t other;
    double weight;  // |rho|
    double slope;   // b_jk: slope of z_j regressed on z_other
  };
  std::vector<std::vector<Link>> links(p);
  std::vector<double> scratch;
  scratch.reserve(n);
  const auto isa = kernels::detected_isa();
  for (std::size_t j = 0; j < p; ++j) {
    if (!eligible[j]) continue;
    for (std::size_t k = j + 1; k < p; ++k) {
      if (!eligible[k]) continue;
      const auto m = kernels::clipped_pair_moments(z[j], z[k], opt.clip, isa);
      if (m.count < opt.min_rows) continue;
      const double cnt = static_cast<double>(m.count);
      const double cov = m.sum_ab / cnt - (m.sum_a / cnt) * (m.sum_b / cnt);
      const double va = m.sum_aa / cnt - (m.sum_a / cnt) * (m.sum_a / cnt);
      const double vb = m.sum_bb / cnt - (m.sum_b / cnt) * (m.sum_b / cnt);
      if (!(va > 0.0 && vb > 0.0)) continue;
      const double rho = cov / std::sqrt(va * vb);
      if (!(std::abs(rho) > opt.correlation_threshold)) continue;
      const double b_jk = ratio_slope(z[j], z[k], opt.slope_floor, scratch);
      const double b_kj = ratio_slope(z[k], z[j], opt.slope_floor, scratch);
      if (!std::isnan(b_jk)) links[j].push_back({k, std::abs(rho), b_jk});
      if (!std::isnan(b_kj)) links[k].push_back({j, std::abs(rho), b_kj});
    }
  }

  // Steps 4-7 per column.
  std::vector<double> pred(n), resid(n);
  for (std::size_t j = 0; j < p; ++j) {
    if (!usable[j]) continue;

    // Step 4: weighted mean of the slope predictions from correlated columns.
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(z[j][i])) {
        pred[i] = kNaN;
        continue;
      }
      double num = 0.0, den = 0.0;
      for (const auto& l : links[j]) {
        const double zk = z[l.other][i];
        if (std::isnan(zk)) continue;
        num += l.weight * l.slope * zk;
        den += l.weight;
      }
      pred[i] = den > 0.0 ? num / den : 0.0;
    }

    // Step 5: deshrinkage.
    const double a = ratio_slope(z[j], pred, opt.slope_floor, scratch);
    const double a_j = std::isnan(a) ? 1.0 : a;
    res.deshrinkage[j] = a_j;

    // Step 6: residuals scaled by their robust scale.
    std::size_t nres = 0;
    for (std::size_t i = 0; i < n; ++i) {
      resid[i] = std::isnan(z[j][i]) ? kNaN : z[j][i] - a_j * pred[i];
      nres += std::isnan(resid[i]) ? 0 : 1;
    }
    if (nres < 2) continue;
    const auto rs = robust_location_scale(resid);
    if (rs.degenerate || rs.scale <= 0.0) continue;

    // Step 7: chi-square test on the standardized residuals.
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(resid[i])) continue;
      const double r = resid[i] / rs.scale;
      if (r * r > chi) res.flags[i * p + j] = 1;
    }
  }
  return res;
}

FilterReport ddc(const MaskedData& md, double quantile) {
  DdcOptions opt;
  opt.quantile = quantile;
  auto res = ddc_detect(md.values, opt);
  return make_report(md, std::move(res.flags));
}

}  // namespace cellcov
