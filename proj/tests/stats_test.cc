#include <gtest/gtest.h>

#include <cmath>

#include "ctxjudge/error.h"
#include "ctxjudge/random.h"
#include "ctxjudge/stats.h"
#include "stats_oracle.h"

namespace ctxjudge::stats {
namespace {

LogisticProblem intercept_only(const std::vector<double>& y) {
  LogisticProblem p;
  p.design = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(y.size()), 1);
  p.response = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  p.names = {"(intercept)"};
  p.penalized = {false};
  return p;
}

TEST(FitLogistic, InterceptOnlyIsLogOdds) {
  const auto fit = fit_logistic(intercept_only({1, 1, 1, 0}));
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.coefficient("(intercept)"), std::log(3.0), 1e-6);
  EXPECT_LT(fit.max_abs_score, kScoreTolerance * 10);
  EXPECT_NEAR(fit.loglik, 3 * std::log(0.75) + std::log(0.25), 1e-9);
  // SE of a logit proportion: 1 / sqrt(n p (1 - p)).
  EXPECT_NEAR(fit.standard_errors[0], 1.0 / std::sqrt(4 * 0.75 * 0.25), 1e-6);
  EXPECT_THROW(fit.coefficient("nope"), StatsError);
}

TEST(FitLogistic, ConstantResponseFlagsSeparation) {
  for (double v : {0.0, 1.0}) {
    const auto fit = fit_logistic(intercept_only({v, v, v, v, v}));
    EXPECT_TRUE(fit.separation);
    EXPECT_FALSE(fit.converged);
  }
}

TEST(FitLogistic, PerfectPredictorFlagsSeparation) {
  LogisticProblem p;
  p.design.resize(8, 2);
  p.response.resize(8);
  for (int i = 0; i < 8; ++i) {
    p.design(i, 0) = 1;
    p.design(i, 1) = i < 4 ? -1.0 - i : 1.0 + i;
    p.response(i) = i < 4 ? 0 : 1;
  }
  p.names = {"(intercept)", "x"};
  p.penalized = {false, false};
  const auto fit = fit_logistic(p);
  EXPECT_TRUE(fit.separation);
  EXPECT_FALSE(fit.converged);
}

TEST(FitLogistic, SingularDesignThrows) {
  LogisticProblem p;
  p.design.resize(6, 2);
  p.response.resize(6);
  for (int i = 0; i < 6; ++i) {
    p.design(i, 0) = 1;
    p.design(i, 1) = 1;
    p.response(i) = i < 4 ? 1 : 0;
  }
  p.names = {"a", "b"};
  p.penalized = {false, false};
  EXPECT_THROW(fit_logistic(p), StatsError);
  p.penalized = {false, true};
  p.ridge_lambda = 1.0;
  EXPECT_NO_THROW(fit_logistic(p));
}

TEST(FitLogistic, RecoversKnownCoefficients) {
  const auto data = testing::synthetic_regression(5000, 99);
  auto spec = RegressionSpec::full_factorial();
  spec.suite_intercepts = false;
  const auto fit = fit_acceptability(spec, data.rows);
  EXPECT_TRUE(fit.converged);
  ASSERT_EQ(fit.coefficients.size(), data.beta.size());
  EXPECT_EQ(fit.names[0], "(intercept)");
  EXPECT_EQ(fit.names[4], "log_length:polarity");
  EXPECT_EQ(fit.names[7], "log_length:polarity:domain");
  for (std::size_t i = 0; i < data.beta.size(); ++i)
    EXPECT_NEAR(fit.coefficients[i], data.beta[i], 0.15) << fit.names[i];
  for (double p : fit.p_values) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

std::vector<TrialRow> with_suites(std::vector<TrialRow> rows) {
  Rng rng(8);
  for (auto& r : rows) {
    const auto s = rng.below(4);
    r.suite = "s" + std::to_string(s);
    if (rng.uniform() < 0.15 * static_cast<double>(s)) r.correct = 1 - r.correct;
  }
  return rows;
}

TEST(FitLogistic, CenteringShiftsOnlyLowerOrderTerms) {
  const auto rows = with_suites(testing::synthetic_regression(2000, 4).rows);
  const auto spec = RegressionSpec::full_factorial(1.0);
  const double c = 1.7;
  auto shifted = rows;
  for (auto& r : shifted) r.prefix_tokens *= std::exp(c);
  const auto a = fit_acceptability(spec, rows);
  const auto b = fit_acceptability(spec, shifted);
  ASSERT_EQ(a.names, b.names);
  for (std::size_t i = 0; i < a.names.size(); ++i) {
    const auto& name = a.names[i];
    if (name.find("log_length") != std::string::npos || name.starts_with("suite[")) {
      EXPECT_NEAR(a.coefficients[i], b.coefficients[i], 1e-6) << name;
      continue;
    }
    // A term T absorbs c times the coefficient of T crossed with log_length.
    const std::string partner =
        name == "(intercept)" ? "log_length" : "log_length:" + name;
    EXPECT_NEAR(b.coefficients[i], a.coefficients[i] - c * a.coefficient(partner), 1e-6) << name;
  }
}

TEST(FitLogistic, NoInteractionsShiftMovesOnlyTheIntercept) {
  const auto rows = with_suites(testing::synthetic_regression(2000, 6).rows);
  RegressionSpec spec;
  spec.terms = {kLogLength, kPolarity, kDomain};
  auto shifted = rows;
  for (auto& r : shifted) r.prefix_tokens *= std::exp(0.9);
  const auto a = fit_acceptability(spec, rows);
  const auto b = fit_acceptability(spec, shifted);
  for (std::size_t i = 1; i < a.names.size(); ++i)
    EXPECT_NEAR(a.coefficients[i], b.coefficients[i], 1e-6) << a.names[i];
  EXPECT_NEAR(b.coefficients[0], a.coefficients[0] - 0.9 * a.coefficient("log_length"), 1e-6);
}

TEST(FitLogistic, RidgeShrinksSuiteIntercepts) {
  const auto rows = with_suites(testing::synthetic_regression(1500, 12).rows);
  double previous = std::numeric_limits<double>::infinity();
  for (double lambda : {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0}) {
    const auto fit = fit_acceptability(RegressionSpec::full_factorial(lambda), rows);
    double norm = 0;
    for (std::size_t i = 0; i < fit.names.size(); ++i)
      if (fit.names[i].starts_with("suite[")) norm += fit.coefficients[i] * fit.coefficients[i];
    EXPECT_LE(std::sqrt(norm), previous + 1e-9) << lambda;
    previous = std::sqrt(norm);
  }
}

TEST(FitAcceptability, InputValidation) {
  const auto spec = RegressionSpec::full_factorial();
  std::vector<TrialRow> rows{{1, 10, 1, 1, "s"}, {0, 0.5, 1, 1, "s"}};
  EXPECT_THROW(fit_acceptability(spec, rows), StatsError);
  rows[1] = {0, 10, 0, 1, "s"};
  EXPECT_THROW(fit_acceptability(spec, rows), StatsError);
  EXPECT_THROW(fit_acceptability(spec, std::vector<TrialRow>{}), StatsError);
}

TEST(FitReport, CsvAndText) {
  const auto fit = fit_logistic(intercept_only({1, 1, 0, 1, 0, 1}));
  const auto csv = fit_to_csv(fit);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "term,estimate,std_error,z,p_value");
  EXPECT_NE(csv.find("(intercept),"), std::string::npos);
  const auto text = fit_to_text(fit, "correct ~ 1");
  EXPECT_NE(text.find("correct ~ 1"), std::string::npos);
  EXPECT_NE(text.find("converged: yes"), std::string::npos);
}

TEST(PointBiserial, Examples) {
  const std::vector<int> b{1, 1, 0, 0};
  const std::vector<double> c{2, 2, 1, 1};
  EXPECT_NEAR(point_biserial(b, c).rho, 1.0, 1e-12);
  EXPECT_THROW(point_biserial(std::vector<int>{1, 0, 1, 0}, std::vector<double>{5, 5, 5, 5}),
               StatsError);
  EXPECT_THROW(point_biserial(std::vector<int>{1, 1, 1}, std::vector<double>{1, 2, 3}), StatsError);
  EXPECT_THROW(point_biserial(std::vector<int>{1, 0}, std::vector<double>{1, 2}), StatsError);
}

TEST(PointBiserial, ReferenceValue) {
  const auto r = point_biserial(std::vector<int>{1, 1, 0, 0, 1, 0},
                                std::vector<double>{3, 2.5, 1, 2, 4, 0.5});
  EXPECT_NEAR(r.rho, 0.8485281374238571, 1e-12);
  EXPECT_NEAR(r.p_value, 0.032677923336802944, 1e-9);
}

TEST(PointBiserial, EqualsCodedPearson) {
  Rng rng(21);
  for (int d = 0; d < 100; ++d) {
    const std::size_t n = 3 + rng.below(60);
    std::vector<int> b(n);
    std::vector<double> c(n), bd(n);
    for (std::size_t i = 0; i < n; ++i) {
      b[i] = static_cast<int>(rng.below(2));
      c[i] = rng.uniform() * 10 + b[i] * rng.uniform() * 3;
    }
    b[0] = 0;
    b[1] = 1;
    for (std::size_t i = 0; i < n; ++i) bd[i] = b[i];
    EXPECT_NEAR(point_biserial(b, c).rho, testing::oracle_pearson(bd, c), 1e-12);
  }
}

TEST(PointBiserial, AffineInvarianceAndLabelAntisymmetry) {
  Rng rng(5);
  for (int d = 0; d < 50; ++d) {
    const std::size_t n = 5 + rng.below(30);
    std::vector<int> b(n), flipped(n);
    std::vector<double> c(n), affine(n);
    for (std::size_t i = 0; i < n; ++i) {
      b[i] = i < 2 ? static_cast<int>(i) : static_cast<int>(rng.below(2));
      flipped[i] = 1 - b[i];
      c[i] = rng.uniform();
      affine[i] = 3.5 * c[i] - 7.0;
    }
    const double r = point_biserial(b, c).rho;
    EXPECT_NEAR(point_biserial(b, affine).rho, r, 1e-12);
    EXPECT_NEAR(point_biserial(flipped, c).rho, -r, 1e-12);
  }
}

TEST(CorrelationPValue, MatchesStudentT) {
  EXPECT_NEAR(correlation_p_value(0.5, 10), 0.14111328125, 1e-9);
  EXPECT_DOUBLE_EQ(correlation_p_value(1.0, 10), 0.0);
  EXPECT_NEAR(correlation_p_value(0.0, 10), 1.0, 1e-12);
}

TEST(MidRanks, TiesShareTheirAveragePosition) {
  const auto r = mid_ranks(std::vector<double>{10, 20, 10, 30, 20, 10});
  EXPECT_EQ(r, (std::vector<double>{2, 4.5, 2, 6, 4.5, 2}));
}

TEST(MidRanks, MatchesPermutationEnumeration) {
  Rng rng(31);
  for (int d = 0; d < 60; ++d) {
    std::vector<double> v(2 + rng.below(6));
    for (auto& x : v) x = static_cast<double>(rng.below(4));
    EXPECT_EQ(mid_ranks(v), testing::oracle_mid_ranks(v));
  }
}

TEST(Spearman, Examples) {
  const std::vector<double> x{1, 2, 3};
  EXPECT_NEAR(spearman(x, std::vector<double>{10, 20, 30}).rho, 1.0, 1e-15);
  EXPECT_NEAR(spearman(x, std::vector<double>{3, 2, 1}).rho, -1.0, 1e-15);
  const auto tied = spearman(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 3});
  EXPECT_NEAR(tied.rho, testing::oracle_spearman({1, 1, 2}, {1, 2, 3}), 1e-12);
  EXPECT_NEAR(tied.rho, 0.8660254037844387, 1e-12);
  EXPECT_NEAR(tied.p_value, 0.3333333333333332, 1e-9);
  EXPECT_THROW(spearman(std::vector<double>{1, 1, 1}, x), StatsError);
  EXPECT_THROW(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}), StatsError);
}

TEST(Spearman, InvariantUnderMonotoneTransforms) {
  Rng rng(13);
  for (int d = 0; d < 50; ++d) {
    const std::size_t n = 3 + rng.below(40);
    std::vector<double> x(n), y(n), tx(n), ty(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.below(10)) + 1;
      y[i] = rng.uniform() + 0.01;
      tx[i] = std::exp(x[i]);
      ty[i] = -1.0 / y[i];
    }
    x[0] = 0;
    y[0] = 5;
    tx[0] = std::exp(0.0);
    ty[0] = -0.2;
    const double r = spearman(x, y).rho;
    EXPECT_NEAR(spearman(tx, y).rho, r, 1e-12);
    EXPECT_NEAR(spearman(x, ty).rho, r, 1e-12);
  }
}

TEST(Bootstrap, ConstantValues) {
  const std::vector<double> v(25, 2.5);
  const auto ci = bootstrap_ci(v, 500, 0.95, 1);
  EXPECT_EQ(ci.lo, 2.5);
  EXPECT_EQ(ci.hi, 2.5);
}

TEST(Bootstrap, ReproducibleUnderSeed) {
  Rng rng(4);
  std::vector<double> v(100);
  for (auto& x : v) x = rng.uniform();
  const auto a = bootstrap_ci(v, 1000, 0.95, 77);
  const auto b = bootstrap_ci(v, 1000, 0.95, 77);
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_EQ(a.hi, b.hi);
  const auto c = bootstrap_ci(v, 1000, 0.95, 78);
  EXPECT_NE(a.lo, c.lo);
  const auto narrow = bootstrap_ci(v, 1000, 0.5, 77);
  EXPECT_GE(narrow.lo, a.lo);
  EXPECT_LE(narrow.hi, a.hi);
}

TEST(Bootstrap, ContainsSampleMeanOfUnimodalData) {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> v(200);
    for (auto& x : v) x = rng.uniform() + rng.uniform() + rng.uniform();
    const auto ci = bootstrap_ci(v, 1000, 0.95, static_cast<std::uint64_t>(trial));
    const double m = mean(v);
    EXPECT_LT(ci.lo, m);
    EXPECT_GT(ci.hi, m);
  }
}

TEST(Bootstrap, PreconditionErrors) {
  const std::vector<double> v{1, 2, 3};
  EXPECT_THROW(bootstrap_ci({}, 1000, 0.95, 0), StatsError);
  EXPECT_THROW(bootstrap_ci(v, 99, 0.95, 0), StatsError);
  EXPECT_THROW(bootstrap_ci(v, 1000, 1.0, 0), StatsError);
}

}  // namespace
}  // namespace ctxjudge::stats
