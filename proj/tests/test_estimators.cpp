#include <gtest/gtest.h>

#include <cmath>

#include "cellcov/datagen.hpp"
#include "cellcov/error.hpp"
#include "cellcov/estimators.hpp"
#include "cellcov/rng.hpp"

using namespace cellcov;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Naive (1/n) sum y y^T with NaN read as 0.
SymMatrix naive_second_moment(const Matrix& x) {
  SymMatrix s(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j)
    for (std::size_t k = j; k < x.cols(); ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        const double a = std::isnan(x(i, j)) ? 0.0 : x(i, j);
        const double b = std::isnan(x(i, k)) ? 0.0 : x(i, k);
        acc += a * b;
      }
      s.set(j, k, acc / static_cast<double>(x.rows()));
    }
  return s;
}

double max_abs(const SymMatrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST(DeltaEstimate, CountsAndClamp) {
  Matrix x(4, 3, 1.0);
  x(0, 0) = kNaN;
  for (std::size_t i = 0; i < 4; ++i) x(i, 2) = kNaN;
  const auto d = estimate_delta(x);
  EXPECT_DOUBLE_EQ(d.per_feature[0], 0.75);
  EXPECT_DOUBLE_EQ(d.per_feature[1], 1.0);
  EXPECT_DOUBLE_EQ(d.per_feature[2], 0.25);  // clamped to 1/n
  EXPECT_DOUBLE_EQ(d.global, 7.0 / 12.0);
  ASSERT_EQ(d.warnings.size(), 1u);
  EXPECT_NE(d.warnings[0].find("column 2"), std::string::npos);
}

TEST(EmpiricalCov, MatchesNaiveOracle) {
  const auto sigma = make_covariance(13, 3.0, 1);
  const auto md = apply_mcar(sample_gaussian(sigma, 257, 2), 0.6, 3);
  const auto oc = empirical_cov_zero_fill(md);
  EXPECT_LT(max_abs(oc.sigma_y - naive_second_moment(md.values)), 1e-13);
  EXPECT_EQ(oc.n_used, 257u);
  EXPECT_THROW(empirical_cov_zero_fill(Matrix(1, 3)), ParameterError);
}

TEST(Debias, DeltaOneIsIdentity) {
  const auto s = make_covariance(6, 2.0, 4);
  EXPECT_EQ(debias_mcar(s, 1.0), s);
  const std::vector<double> ones(6, 1.0);
  EXPECT_EQ(debias_mar(s, ones), s);
  const std::vector<double> lambda(6, 3.0);
  EXPECT_EQ(debias_contaminated(s, 1.0, 0.5, lambda), s);
}

TEST(Debias, MarWithConstantDeltaEqualsMcar) {
  const auto s = make_covariance(8, 2.0, 5);
  const std::vector<double> d(8, 0.37);
  EXPECT_LT(max_abs(debias_mar(s, d) - debias_mcar(s, 0.37)), 1e-14);
}

TEST(Debias, ContaminatedWithZeroEpsilonEqualsMcar) {
  const auto s = make_covariance(8, 2.0, 6);
  const std::vector<double> lambda(8, 100.0);
  EXPECT_EQ(debias_contaminated(s, 0.6, 0.0, lambda), debias_mcar(s, 0.6));
}

TEST(Debias, ParameterErrors) {
  const auto s = make_covariance(3, 1.5, 7);
  EXPECT_THROW(debias_mcar(s, 0.0), ParameterError);
  EXPECT_THROW(debias_mcar(s, 1.2), ParameterError);
  EXPECT_THROW(debias_mar(s, std::vector<double>{0.5, 0.5}), DimensionError);
  EXPECT_THROW(debias_mar(s, std::vector<double>{0.5, 0.0, 0.5}), ParameterError);
  EXPECT_THROW(debias_contaminated(s, 0.5, 2.0, std::vector<double>(3, 1.0)), ParameterError);
  EXPECT_THROW(debias_contaminated(s, 0.5, 0.5, std::vector<double>(2, 1.0)), DimensionError);
}

TEST(Debias, RoundTripProperty) {
  auto eng = make_engine(8);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t p = 2 + static_cast<std::size_t>(t % 9);
    const auto sigma = make_covariance(p, 1.0 + 0.5 * static_cast<double>(p - 2) / 8.0, 100 + t);
    const double d = unif(eng);
    SymMatrix biased(p);
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = j; k < p; ++k) biased.set(j, k, (j == k ? d : d * d) * sigma(j, k));
    EXPECT_LT(max_abs(debias_mcar(biased, d) - sigma), 1e-13);
  }
}

TEST(Debias, MonteCarloContaminatedUnbiased) {
  // Gaussian contamination with known variance: the contaminated estimator
  // should be close to sigma while plain MCAR debiasing is inflated on the
  // diagonal.
  const std::size_t p = 5;
  const double delta = 0.8, eps = 0.5, s = 2.0;
  const auto sigma = make_covariance(p, 2.0, 9);
  const GaussianSampler sampler(sigma);
  SymMatrix mean_fix(p), mean_plain(p);
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    const auto seed = derive_seed(10, {static_cast<std::uint64_t>(r)});
    const auto md = contaminate(apply_mcar(sampler.sample(2000, seed), delta, seed),
                                {delta, eps, ContaminationLaw::gaussian, s}, seed);
    const auto oc = empirical_cov_zero_fill(md);
    mean_fix += debias_contaminated(oc, delta, eps, std::vector<double>(p, s * s));
    mean_plain += debias_mcar(oc, delta);
  }
  mean_fix *= 1.0 / reps;
  mean_plain *= 1.0 / reps;
  EXPECT_LT(operator_norm(mean_fix - sigma), 0.05 * operator_norm(sigma));
  EXPECT_GT(operator_norm(mean_plain - sigma), 0.5);
}

TEST(PostSteps, ClipNegativeEigenvalues) {
  const std::vector<double> d = {2.0, -1.0, 0.5};
  const auto c = clip_negative_eigenvalues(SymMatrix::diagonal(d));
  EXPECT_NEAR(c(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(c(1, 1), 0.0, 1e-15);
  EXPECT_NEAR(c(2, 2), 0.5, 1e-15);
}

TEST(PostSteps, CenterObserved) {
  Matrix x(3, 2);
  x(0, 0) = 1.0;
  x(1, 0) = 2.0;
  x(2, 0) = kNaN;
  x(0, 1) = 4.0;
  x(1, 1) = 6.0;
  x(2, 1) = 8.0;
  const Matrix c = center_observed(x);
  EXPECT_DOUBLE_EQ(c(0, 0), -0.5);
  EXPECT_TRUE(std::isnan(c(2, 0)));
  EXPECT_DOUBLE_EQ(c(2, 1), 2.0);
}
