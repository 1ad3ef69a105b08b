#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <set>

#include "cellcov/datagen.hpp"
#include "cellcov/error.hpp"
#include "cellcov/matrix.hpp"
#include "cellcov/rng.hpp"

using namespace cellcov;

TEST(Rng, DeriveSeedIsPureAndTagSensitive) {
  EXPECT_EQ(derive_seed(5, {1, 2}), derive_seed(5, {1, 2}));
  EXPECT_NE(derive_seed(5, {1, 2}), derive_seed(5, {2, 1}));
  EXPECT_NE(derive_seed(5, {1}), derive_seed(6, {1}));
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 50; ++a)
    for (std::uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(0, {a, b}));
  EXPECT_EQ(seen.size(), 2500u);
}

TEST(Covariance, ShapeAndNormalisation) {
  const auto s = make_covariance(30, 4.0, 1);
  const auto d = s.diag();
  double mx = 0.0;
  for (double v : d) mx = std::max(mx, v);
  EXPECT_DOUBLE_EQ(mx, 1.0);
  const auto spec = eigh(s);
  EXPECT_GT(spec.eigenvalues.back(), 0.0);
  // Eigenvalue ratios follow exp(-1/r).
  for (std::size_t k = 0; k + 1 < 10; ++k)
    EXPECT_NEAR(spec.eigenvalues[k + 1] / spec.eigenvalues[k], std::exp(-0.25), 1e-9);
  EXPECT_LT(effective_rank(s), 5.0);
}

TEST(Covariance, DeterministicAndSeedDependent) {
  EXPECT_EQ(make_covariance(10, 2.0, 3), make_covariance(10, 2.0, 3));
  EXPECT_FALSE(make_covariance(10, 2.0, 3) == make_covariance(10, 2.0, 4));
}

TEST(Covariance, RejectsBadRank) {
  EXPECT_THROW(make_covariance(5, 5.0, 1), ParameterError);
  EXPECT_THROW(make_covariance(5, 0.5, 1), ParameterError);
  EXPECT_THROW(make_covariance(0, 1.0, 1), ParameterError);
}

TEST(Haar, Orthogonal) {
  auto eng = make_engine(8);
  const Matrix q = haar_orthogonal(25, eng);
  const Matrix g = q.transpose() * q;
  for (std::size_t i = 0; i < 25; ++i)
    for (std::size_t j = 0; j < 25; ++j) EXPECT_NEAR(g(i, j), i == j ? 1.0 : 0.0, 1e-13);
}

TEST(Haar, FirstEntryIsSymmetric) {
  // For Haar Q, E[q_11] = 0 and E[q_11^2] = 1/p.
  auto eng = make_engine(9);
  const std::size_t p = 4;
  const int reps = 4000;
  double m1 = 0.0, m2 = 0.0;
  for (int t = 0; t < reps; ++t) {
    const Matrix q = haar_orthogonal(p, eng);
    m1 += q(0, 0);
    m2 += q(0, 0) * q(0, 0);
  }
  EXPECT_NEAR(m1 / reps, 0.0, 4.0 * std::sqrt(0.25 / reps));
  EXPECT_NEAR(m2 / reps, 0.25, 0.02);
}

TEST(Sampler, EmpiricalCovarianceConverges) {
  const auto sigma = make_covariance(6, 2.0, 10);
  const Matrix x = sample_gaussian(sigma, 40000, 11);
  double worst = 0.0;
  for (std::size_t j = 0; j < 6; ++j)
    for (std::size_t k = 0; k < 6; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.rows(); ++i) acc += x(i, j) * x(i, k);
      worst = std::max(worst, std::abs(acc / 40000.0 - sigma(j, k)));
    }
  EXPECT_LT(worst, 0.04);
  EXPECT_EQ(GaussianSampler(sigma).sample(50, 11), sample_gaussian(sigma, 50, 11));
}

TEST(Mcar, ObservedFractionMatchesDelta) {
  Matrix x(500, 200, 1.0);
  const auto md = apply_mcar(x, 0.5, 12);
  md.check_invariants();
  std::size_t missing = 0;
  for (double v : md.values.data()) missing += std::isnan(v);
  const double frac = static_cast<double>(missing) / 1e5;
  EXPECT_NEAR(frac, 0.5, 4.0 * std::sqrt(0.25 / 1e5));
  EXPECT_TRUE(md.has_truth);
  EXPECT_THROW(apply_mcar(x, 0.0, 1), ParameterError);
  EXPECT_THROW(apply_mcar(x, 1.5, 1), ParameterError);
}

TEST(Mcar, DeltaOneKeepsEverything) {
  Matrix x(10, 3, 2.5);
  const auto md = apply_mcar(x, 1.0, 1);
  EXPECT_EQ(md.values, x);
}

TEST(Mar, PerFeatureProbabilities) {
  const auto sigma = make_covariance(5, 2.0, 13);
  const Matrix x = sample_gaussian(sigma, 20000, 14);
  const auto res = apply_mar(x, 15);
  res.data.check_invariants();
  for (std::size_t j = 0; j < 5; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < kMarReferenceRows; ++i) m += x(i, j);
    m /= static_cast<double>(kMarReferenceRows);
    EXPECT_NEAR(res.delta[j], 1.0 - 1.0 / (1.0 + std::exp(-m)), 1e-15);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) kept += !std::isnan(res.data.values(i, j));
    const double d = res.delta[j];
    EXPECT_NEAR(static_cast<double>(kept) / 20000.0, d, 4.0 * std::sqrt(d * (1 - d) / 20000.0));
  }
  EXPECT_THROW(apply_mar(Matrix(10, 2), 1), ParameterError);
}

TEST(Contamination, DiracValuesAndRates) {
  Matrix x(400, 50, 0.25);
  const auto md = apply_mcar(x, 0.8, 16);
  const auto c = contaminate(md, {0.8, 0.5, ContaminationLaw::dirac, 7.0}, 17);
  c.check_invariants();
  std::size_t contam = 0;
  for (std::size_t k = 0; k < c.contam_mask.size(); ++k) {
    EXPECT_FALSE(c.contam_mask[k] && md.clean_mask[k] == 1);
    if (c.contam_mask[k]) {
      ++contam;
      EXPECT_EQ(std::abs(c.values.data()[k]), 7.0);
    }
    if (md.clean_mask[k]) EXPECT_EQ(c.values.data()[k], 0.25);
  }
  const double rate = static_cast<double>(contam) / 20000.0;
  EXPECT_NEAR(rate, 0.5 * 0.2, 4.0 * std::sqrt(0.1 * 0.9 / 20000.0));
}

TEST(Contamination, GaussianVariance) {
  Matrix x(400, 50, 0.0);
  const auto md = apply_mcar(x, 0.5, 18);
  const auto c = contaminate(md, {0.5, 1.0, ContaminationLaw::gaussian, 3.0}, 19);
  double ss = 0.0;
  std::size_t cnt = 0;
  for (std::size_t k = 0; k < c.contam_mask.size(); ++k)
    if (c.contam_mask[k]) {
      ss += c.values.data()[k] * c.values.data()[k];
      ++cnt;
    }
  EXPECT_NEAR(ss / static_cast<double>(cnt), 9.0, 0.4);
}

TEST(Contamination, EpsilonZeroAndErrors) {
  Matrix x(20, 4, 1.0);
  const auto md = apply_mcar(x, 0.7, 20);
  const auto same = contaminate(md, {0.7, 0.0, ContaminationLaw::dirac, 5.0}, 1);
  ASSERT_EQ(same.values.data().size(), md.values.data().size());
  EXPECT_EQ(std::memcmp(same.values.data().data(), md.values.data().data(),
                        md.values.data().size_bytes()),
            0);
  EXPECT_EQ(same.contam_mask, md.contam_mask);
  EXPECT_THROW(contaminate(md, {0.7, 0.5, ContaminationLaw::none, 5.0}, 1), ParameterError);
  EXPECT_THROW(contaminate(md, {0.7, 1.5, ContaminationLaw::dirac, 5.0}, 1), ParameterError);
  EXPECT_THROW(contaminate(md, {0.7, 0.5, ContaminationLaw::dirac, -1.0}, 1), ParameterError);
}

TEST(MaskedData, InvariantViolationsAreReported) {
  Matrix x(3, 2, 1.0);
  auto md = apply_mcar(x, 1.0, 1);
  md.contam_mask[0] = 1;
  EXPECT_THROW(md.check_invariants(), DomainError);
  md = MaskedData::from_values(x);
  md.values(1, 1) = std::nan("");
  EXPECT_THROW(md.check_invariants(), DomainError);
}

TEST(Law, ParseAndFormat) {
  EXPECT_EQ(parse_law("gauss"), ContaminationLaw::gaussian);
  EXPECT_EQ(parse_law("gaussian"), ContaminationLaw::gaussian);
  EXPECT_EQ(parse_law(to_string(ContaminationLaw::dirac)), ContaminationLaw::dirac);
  EXPECT_THROW(parse_law("cauchy"), ParameterError);
}
