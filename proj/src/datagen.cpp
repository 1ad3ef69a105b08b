#include "cellcov/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cellcov/error.hpp"

namespace cellcov {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_delta(double delta, const char* where) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw ParameterError(std::string(where) + ": delta must lie in (0, 1], got " +
                         std::to_string(delta));
}

}  // namespace

std::string to_string(ContaminationLaw law) {
  switch (law) {
    case ContaminationLaw::none: return "none";
    case ContaminationLaw::dirac: return "dirac";
    case ContaminationLaw::gaussian: return "gauss";
  }
  return "none";
}

ContaminationLaw parse_law(const std::string& s) {
  if (s == "none") return ContaminationLaw::none;
  if (s == "dirac") return ContaminationLaw::dirac;
  if (s == "gauss" || s == "gaussian") return ContaminationLaw::gaussian;
  throw ParameterError("unknown contamination law '" + s + "' (expected dirac, gauss or none)");
}

void ContaminationModel::validate() const {
  check_delta(delta, "ContaminationModel");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw ParameterError("ContaminationModel: epsilon must lie in [0, 1], got " +
                         std::to_string(epsilon));
  if (law != ContaminationLaw::none && !(sigma > 0.0 && std::isfinite(sigma)))
    throw ParameterError("ContaminationModel: sigma must be positive, got " + std::to_string(sigma));
}

MaskedData MaskedData::from_values(Matrix values) {
  MaskedData md;
  const auto cells = values.data();
  md.clean_mask.resize(cells.size());
  md.contam_mask.assign(cells.size(), 0);
  for (std::size_t c = 0; c < cells.size(); ++c) md.clean_mask[c] = std::isnan(cells[c]) ? 0 : 1;
  md.values = std::move(values);
  md.has_truth = false;
  return md;
}

void MaskedData::check_invariants() const {
  const auto cells = values.data();
  if (clean_mask.size() != cells.size() || contam_mask.size() != cells.size())
    throw DomainError("MaskedData: mask shape does not match values");
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::size_t i = c / p(), j = c % p();
    const std::string at = " at (" + std::to_string(i) + ", " + std::to_string(j) + ")";
    if (clean_mask[c] && contam_mask[c]) throw DomainError("MaskedData: masks overlap" + at);
    const bool set = clean_mask[c] || contam_mask[c];
    if (set && !std::isfinite(cells[c])) throw DomainError("MaskedData: non-finite value" + at);
    if (!set && !std::isnan(cells[c]))
      throw DomainError("MaskedData: unmasked cell is not the missing sentinel" + at);
  }
}

Matrix haar_orthogonal(std::size_t p, Engine& engine) {
  std::normal_distribution<double> normal;
  Matrix q(p, p);
  for (double& v : q.data()) v = normal(engine);

  // Modified Gram-Schmidt on columns, applied twice for numerical
  // orthogonality. The implied R has a positive diagonal, which is the sign
  // convention that makes Q Haar distributed.
  for (std::size_t j = 0; j < p; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        double dot = 0.0;
        for (std::size_t i = 0; i < p; ++i) dot += q(i, k) * q(i, j);
        for (std::size_t i = 0; i < p; ++i) q(i, j) -= dot * q(i, k);
      }
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < p; ++i) norm += q(i, j) * q(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < p; ++i) q(i, j) /= norm;
  }
  return q;
}

SymMatrix make_covariance(std::size_t p, double r, std::uint64_t seed) {
  if (p == 0) throw ParameterError("make_covariance: p must be >= 1");
  if (!(r >= 1.0)) throw ParameterError("make_covariance: r must be >= 1");
  if (r >= static_cast<double>(p))
    throw ParameterError("make_covariance: requested effective rank r=" + std::to_string(r) +
                         " must be below p=" + std::to_string(p));

  auto engine = make_engine(derive_seed(seed, {stream::covariance}));
  const Matrix h = haar_orthogonal(p, engine);
  std::vector<double> lambda(p);
  for (std::size_t j = 0; j < p; ++j) lambda[j] = std::exp(-static_cast<double>(j + 1) / r);

  SymMatrix sigma(p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < p; ++k) v += h(i, k) * lambda[k] * h(j, k);
      sigma.set(i, j, v);
    }
  }
  const auto d = sigma.diag();
  const double max_diag = *std::max_element(d.begin(), d.end());
  return (1.0 / max_diag) * std::move(sigma);
}

GaussianSampler::GaussianSampler(const SymMatrix& sigma) {
  const auto spectrum = eigh(sigma);
  std::vector<double> root(sigma.dim());
  for (std::size_t k = 0; k < root.size(); ++k)
    root[k] = std::sqrt(std::max(spectrum.eigenvalues[k], 0.0));
  sqrt_sigma_ = reconstruct(spectrum, root).to_dense();
}

Matrix GaussianSampler::sample(std::size_t n, std::uint64_t seed) const {
  auto engine = make_engine(derive_seed(seed, {stream::samples}));
  std::normal_distribution<double> normal;
  Matrix z(n, dim());
  for (double& v : z.data()) v = normal(engine);
  return z * sqrt_sigma_;
}

Matrix sample_gaussian(const SymMatrix& sigma, std::size_t n, std::uint64_t seed) {
  return GaussianSampler(sigma).sample(n, seed);
}

MaskedData apply_mcar(const Matrix& x, double delta, std::uint64_t seed) {
  check_delta(delta, "apply_mcar");
  auto engine = make_engine(derive_seed(seed, {stream::mask}));
  std::bernoulli_distribution keep(delta);

  MaskedData md;
  md.values = x;
  const auto cells = md.values.data();
  md.clean_mask.assign(cells.size(), 0);
  md.contam_mask.assign(cells.size(), 0);
  md.has_truth = true;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (keep(engine)) {
      md.clean_mask[c] = 1;
    } else {
      cells[c] = kNaN;
    }
  }
  return md;
}

MarResult apply_mar(const Matrix& x, std::uint64_t seed) {
  const std::size_t n = x.rows(), p = x.cols();
  if (n < kMarReferenceRows)
    throw ParameterError("apply_mar: need at least " + std::to_string(kMarReferenceRows) +
                         " rows, got " + std::to_string(n));

  MarResult out;
  out.delta.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < kMarReferenceRows; ++i) mean += x(i, j);
    mean /= static_cast<double>(kMarReferenceRows);
    // 1 - sigmoid(m) == 1 / (1 + e^m)
    out.delta[j] = 1.0 / (1.0 + std::exp(mean));
  }

  auto engine = make_engine(derive_seed(seed, {stream::mask}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto& md = out.data;
  md.values = x;
  md.clean_mask.assign(n * p, 0);
  md.contam_mask.assign(n * p, 0);
  md.has_truth = true;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      if (unif(engine) < out.delta[j]) {
        md.clean_mask[md.index(i, j)] = 1;
      } else {
        md.values(i, j) = kNaN;
      }
    }
  }
  return out;
}

MaskedData contaminate(const MaskedData& md, const ContaminationModel& model, std::uint64_t seed) {
  model.validate();
  if (model.law == ContaminationLaw::none)
    throw ParameterError("contaminate: contamination law must not be none");

  MaskedData out = md;
  if (model.epsilon == 0.0) return out;

  auto engine = make_engine(derive_seed(seed, {stream::contamination}));
  std::bernoulli_distribution hit(model.epsilon);
  std::bernoulli_distribution positive(0.5);
  std::normal_distribution<double> noise(0.0, model.sigma);

  const auto cells = out.values.data();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (out.clean_mask[c] || out.contam_mask[c]) continue;
    if (!hit(engine)) continue;
    cells[c] = model.law == ContaminationLaw::dirac ? (positive(engine) ? model.sigma : -model.sigma)
                                                    : noise(engine);
    out.contam_mask[c] = 1;
  }
  return out;
}

}  // namespace cellcov
