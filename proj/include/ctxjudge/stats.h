#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ctxjudge::stats {

// Generic penalized logistic regression by iteratively reweighted least
// squares. Columns flagged in `penalized` receive an L2 penalty of
// `ridge_lambda / 2 * beta_j^2`; the rest are unpenalized.
struct LogisticProblem {
  Eigen::MatrixXd design;            // n x p
  Eigen::VectorXd response;          // n, entries 0/1
  std::vector<std::string> names;    // p
  std::vector<bool> penalized;       // p
  double ridge_lambda = 0.0;
};

struct RegressionFit {
  std::vector<std::string> names;
  std::vector<double> coefficients;
  std::vector<double> standard_errors;
  std::vector<double> z_values;
  std::vector<double> p_values;  // two-sided Wald
  bool converged = false;
  bool separation = false;
  int iterations = 0;
  double loglik = 0.0;          // unpenalized
  double max_abs_score = 0.0;   // penalized gradient at the final estimate

  double coefficient(const std::string& name) const;
};

constexpr double kScoreTolerance = 1e-8;
constexpr double kDevianceTolerance = 1e-10;
constexpr int kMaxIterations = 100;
constexpr double kSeparationBound = 30.0;

// Convergence: max |score| < 1e-8 or relative deviance change < 1e-10, at most
// 100 iterations. A single-class response or any |coefficient| > 30 sets
// `separation` and leaves `converged` false. Throws StatsError when the
// weighted normal equations are singular.
RegressionFit fit_logistic(const LogisticProblem& problem);

// One trial row for the acceptability regression.
struct TrialRow {
  int correct = 0;
  double prefix_tokens = 0;  // actual prefix length, >= 1
  int polarity = 0;          // +1 acceptable, -1 unacceptable
  int domain = 0;            // +1 in-domain, -1 out-of-domain
  std::string suite;
};

enum Term : unsigned {
  kLogLength = 1u << 0,
  kPolarity = 1u << 1,
  kDomain = 1u << 2,
};

struct RegressionSpec {
  bool intercept = true;
  // Each entry is a product of Term bits; {kLogLength, kPolarity,
  // kLogLength | kPolarity} is main effects plus their interaction.
  std::vector<unsigned> terms;
  bool suite_intercepts = true;
  double ridge_lambda = 1.0;

  // log_length, polarity, domain, every two-way and the three-way term.
  static RegressionSpec full_factorial(double ridge_lambda = 1.0);
};

std::string term_name(unsigned term);

// Builds the design (log_length = ln(prefix_tokens); sum codes must be +-1)
// and fits it. Suite intercepts are one indicator column per suite, named
// "suite[<id>]", penalized by ridge_lambda.
RegressionFit fit_acceptability(const RegressionSpec& spec,
                                std::span<const TrialRow> rows);

// Coefficient table (name, estimate, SE, z, p) as CSV and as text.
std::string fit_to_csv(const RegressionFit& fit);
std::string fit_to_text(const RegressionFit& fit, const std::string& title);

struct Correlation {
  double rho = 0.0;
  double p_value = 1.0;
};

// Two-sided p-value of a correlation coefficient with n - 2 degrees of
// freedom (Student t).
double correlation_p_value(double r, std::size_t n);

// (M1 - M0) / s_n * sqrt(n1 n0 / n^2), population standard deviation.
Correlation point_biserial(std::span<const int> binary,
                           std::span<const double> continuous);

double pearson(std::span<const double> x, std::span<const double> y);

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> mid_ranks(std::span<const double> values);

// Pearson correlation of mid-ranks.
Correlation spearman(std::span<const double> x, std::span<const double> y);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile interval of `b` seeded resample means (linear interpolation
// between order statistics).
Interval bootstrap_ci(std::span<const double> values, int b, double level,
                      std::uint64_t seed);

double mean(std::span<const double> values);

}  // namespace ctxjudge::stats
