#include "ctxjudge/stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "ctxjudge/error.h"
#include "ctxjudge/random.h"
#include "ctxjudge/text.h"

namespace ctxjudge::stats {

double RegressionFit::coefficient(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return coefficients[i];
  throw StatsError("no coefficient named '" + name + "'");
}

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct State {
  Eigen::VectorXd eta;
  Eigen::VectorXd mu;
  double loglik = 0.0;
  double penalized_deviance = 0.0;
};

State evaluate(const LogisticProblem& prob, const Eigen::VectorXd& beta,
               const Eigen::VectorXd& penalty) {
  State s;
  s.eta = prob.design * beta;
  s.mu.resize(s.eta.size());
  double ll = 0.0;
  for (Eigen::Index i = 0; i < s.eta.size(); ++i) {
    const double e = s.eta[i];
    s.mu[i] = sigmoid(e);
    ll += prob.response[i] * e - softplus(e);
  }
  s.loglik = ll;
  s.penalized_deviance =
      -2.0 * ll + (penalty.array() * beta.array().square()).sum();
  return s;
}

}  // namespace

RegressionFit fit_logistic(const LogisticProblem& prob) {
  const Eigen::Index n = prob.design.rows();
  const Eigen::Index p = prob.design.cols();
  if (n == 0 || p == 0) throw StatsError("empty regression problem");
  if (prob.response.size() != n) throw StatsError("response length mismatch");
  if (static_cast<Eigen::Index>(prob.names.size()) != p ||
      static_cast<Eigen::Index>(prob.penalized.size()) != p)
    throw StatsError("names/penalized must have one entry per column");
  if (prob.ridge_lambda < 0) throw StatsError("ridge_lambda must be >= 0");

  Eigen::VectorXd penalty = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j)
    if (prob.penalized[j]) penalty[j] = prob.ridge_lambda;

  double positives = prob.response.sum();
  const bool single_class = positives == 0.0 || positives == static_cast<double>(n);

  RegressionFit fit;
  fit.names = prob.names;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  State state = evaluate(prob, beta, penalty);

  auto gradient = [&](const State& s, const Eigen::VectorXd& b) {
    Eigen::VectorXd g = prob.design.transpose() * (prob.response - s.mu);
    g -= (penalty.array() * b.array()).matrix();
    return g;
  };
  auto hessian = [&](const State& s) {
    Eigen::VectorXd w = (s.mu.array() * (1.0 - s.mu.array())).max(1e-300).matrix();
    Eigen::MatrixXd h = prob.design.transpose() * w.asDiagonal() * prob.design;
    h.diagonal() += penalty;
    return h;
  };
  auto solve = [&](const Eigen::MatrixXd& h, const Eigen::VectorXd& rhs) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14))
      throw StatsError("singular weighted normal equations");
    return Eigen::VectorXd(ldlt.solve(rhs));
  };

  // Rank check on the penalized design.
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian(state), Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    if (eig.info() != Eigen::Success || !(ev.minCoeff() > 1e-12 * std::max(ev.maxCoeff(), 1.0)))
      throw StatsError("singular weighted normal equations");
  }

  // With fitted probabilities at 0 or 1, convergence also needs a vanishing step.
  auto saturated = [](const State& s) {
    return (s.mu.array() < 1e-10).any() || (s.mu.array() > 1.0 - 1e-10).any();
  };
  double last_step = std::numeric_limits<double>::infinity();
  auto settled = [&](const State& s) { return !saturated(s) || last_step < 1e-6; };

  bool converged = false;
  bool polish = false;
  int it = 0;
  Eigen::VectorXd g = gradient(state, beta);
  while (it < kMaxIterations) {
    if (g.lpNorm<Eigen::Infinity>() < kScoreTolerance && settled(state)) {
      converged = true;
      break;
    }
    ++it;
    const Eigen::VectorXd step = solve(hessian(state), g);
    Eigen::VectorXd next = beta + step;
    State next_state = evaluate(prob, next, penalty);
    double scale = 1.0;
    for (int halvings = 0;
         halvings < 30 && !(next_state.penalized_deviance <=
                            state.penalized_deviance + 1e-12 * std::abs(state.penalized_deviance));
         ++halvings) {
      scale *= 0.5;
      next = beta + scale * step;
      next_state = evaluate(prob, next, penalty);
    }
    const double rel = std::abs(state.penalized_deviance - next_state.penalized_deviance) /
                       (std::abs(next_state.penalized_deviance) + 0.1);
    last_step = (next - beta).lpNorm<Eigen::Infinity>();
    beta = std::move(next);
    state = std::move(next_state);
    g = gradient(state, beta);
    if (beta.lpNorm<Eigen::Infinity>() > kSeparationBound) {
      fit.separation = true;
      break;
    }
    if (polish) {
      converged = true;
      break;
    }
    // Deviance has stopped moving; one more Newton step before stopping.
    if (rel < kDevianceTolerance && settled(state)) polish = true;
  }
  if (single_class) {
    fit.separation = true;
  }
  if (fit.separation) converged = false;

  fit.converged = converged;
  fit.iterations = it;
  fit.loglik = state.loglik;
  fit.max_abs_score = g.lpNorm<Eigen::Infinity>();
  fit.coefficients.assign(beta.data(), beta.data() + p);

  const Eigen::MatrixXd h = hessian(state);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  Eigen::MatrixXd cov;
  if (ldlt.info() == Eigen::Success && ldlt.rcond() > 1e-14) {
    cov = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  } else {
    cov = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::infinity());
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    const double se = std::sqrt(std::max(cov(j, j), 0.0));
    const double z = beta[j] / se;
    fit.standard_errors.push_back(se);
    fit.z_values.push_back(z);
    fit.p_values.push_back(std::isfinite(z) ? std::erfc(std::abs(z) / std::sqrt(2.0))
                                            : (std::isnan(z) ? 1.0 : 0.0));
  }
  return fit;
}

RegressionSpec RegressionSpec::full_factorial(double ridge_lambda) {
  RegressionSpec spec;
  spec.terms = {kLogLength,
                kPolarity,
                kDomain,
                kLogLength | kPolarity,
                kLogLength | kDomain,
                kPolarity | kDomain,
                kLogLength | kPolarity | kDomain};
  spec.ridge_lambda = ridge_lambda;
  return spec;
}

std::string term_name(unsigned term) {
  std::string out;
  auto add = [&](unsigned bit, const char* name) {
    if (!(term & bit)) return;
    if (!out.empty()) out += ":";
    out += name;
  };
  add(kLogLength, "log_length");
  add(kPolarity, "polarity");
  add(kDomain, "domain");
  return out;
}

RegressionFit fit_acceptability(const RegressionSpec& spec,
                                std::span<const TrialRow> rows) {
  if (rows.empty()) throw StatsError("no trials to fit");
  std::map<std::string, int> suites;
  for (const auto& r : rows) {
    if (r.correct != 0 && r.correct != 1) throw StatsError("response must be 0/1");
    for (unsigned t : spec.terms) {
      if ((t & kLogLength) && !(r.prefix_tokens >= 1))
        throw StatsError("log_length needs prefix_tokens >= 1");
      if ((t & kPolarity) && r.polarity != 1 && r.polarity != -1)
        throw StatsError("polarity must be sum-coded as +1/-1");
      if ((t & kDomain) && r.domain != 1 && r.domain != -1)
        throw StatsError("domain must be sum-coded as +1/-1");
    }
    suites.emplace(r.suite, 0);
  }
  int next = 0;
  for (auto& [id, col] : suites) col = next++;

  LogisticProblem prob;
  if (spec.intercept) {
    prob.names.push_back("(intercept)");
    prob.penalized.push_back(false);
  }
  for (unsigned t : spec.terms) {
    prob.names.push_back(term_name(t));
    prob.penalized.push_back(false);
  }
  if (spec.suite_intercepts) {
    for (const auto& [id, col] : suites) {
      prob.names.push_back("suite[" + id + "]");
      prob.penalized.push_back(true);
    }
  }
  prob.ridge_lambda = spec.ridge_lambda;
  const auto n = static_cast<Eigen::Index>(rows.size());
  prob.design = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(prob.names.size()));
  prob.response.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    Eigen::Index c = 0;
    if (spec.intercept) prob.design(i, c++) = 1.0;
    for (unsigned t : spec.terms) {
      double v = 1.0;
      if (t & kLogLength) v *= std::log(r.prefix_tokens);
      if (t & kPolarity) v *= r.polarity;
      if (t & kDomain) v *= r.domain;
      prob.design(i, c++) = v;
    }
    if (spec.suite_intercepts) prob.design(i, c + suites.at(r.suite)) = 1.0;
    prob.response[i] = r.correct;
  }
  return fit_logistic(prob);
}

std::string fit_to_csv(const RegressionFit& fit) {
  std::string out = "term,estimate,std_error,z,p_value\n";
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    out += fit.names[i] + "," + format_double(fit.coefficients[i]) + "," +
           format_double(fit.standard_errors[i]) + "," + format_double(fit.z_values[i]) +
           "," + format_double(fit.p_values[i]) + "\n";
  }
  return out;
}

std::string fit_to_text(const RegressionFit& fit, const std::string& title) {
  std::string out = title + "\n";
  out += fmt::format("converged: {}  separation: {}  iterations: {}  loglik: {:.6f}\n",
                     fit.converged ? "yes" : "no", fit.separation ? "yes" : "no",
                     fit.iterations, fit.loglik);
  std::size_t width = 36;
  for (const auto& n : fit.names) width = std::max(width, n.size() + 2);
  out += fmt::format("{:<{}} {:>12} {:>12} {:>10} {:>12}\n", "term", width, "estimate",
                     "std.error", "z", "p");
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    out += fmt::format("{:<{}} {:>12.6f} {:>12.6f} {:>10.3f} {:>12.4g}\n",
                       fit.names[i], width, fit.coefficients[i], fit.standard_errors[i],
                       fit.z_values[i], fit.p_values[i]);
  }
  return out;
}

double correlation_p_value(double r, std::size_t n) {
  if (n < 3) throw StatsError("need at least 3 observations");
  if (std::abs(r) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / (1.0 - r * r));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double mean(std::span<const double> values) {
  if (values.empty()) throw StatsError("mean of empty list");
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

Correlation point_biserial(std::span<const int> binary,
                           std::span<const double> continuous) {
  if (binary.size() != continuous.size())
    throw StatsError("point-biserial: length mismatch");
  const std::size_t n = binary.size();
  if (n < 3) throw StatsError("point-biserial: need at least 3 observations");
  double sum1 = 0.0;
  double sum0 = 0.0;
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (binary[i] == 1) {
      sum1 += continuous[i];
      ++n1;
    } else if (binary[i] == 0) {
      sum0 += continuous[i];
    } else {
      throw StatsError("point-biserial: binary variable must be 0/1");
    }
  }
  const std::size_t n0 = n - n1;
  if (n1 == 0 || n0 == 0) throw StatsError("point-biserial: one class absent");
  const double m = mean(continuous);
  double ss = 0.0;
  for (double v : continuous) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0)) throw StatsError("point-biserial: zero variance in continuous variable");
  const double m1 = sum1 / static_cast<double>(n1);
  const double m0 = sum0 / static_cast<double>(n0);
  const double r = (m1 - m0) / sd *
                   std::sqrt(static_cast<double>(n1) * static_cast<double>(n0)) /
                   static_cast<double>(n);
  const double clamped = std::clamp(r, -1.0, 1.0);
  return {clamped, correlation_p_value(clamped, n)};
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StatsError("pearson: length mismatch");
  if (x.size() < 2) throw StatsError("pearson: need at least 2 observations");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw StatsError("pearson: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> mid_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share rank ((i+1) + (j+1)) / 2.
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StatsError("spearman: length mismatch");
  if (x.size() < 3) throw StatsError("spearman: need at least 3 observations");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (constant(x) || constant(y)) throw StatsError("spearman: constant input vector");
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  const double r = pearson(rx, ry);
  return {r, correlation_p_value(r, x.size())};
}

Interval bootstrap_ci(std::span<const double> values, int b, double level,
                      std::uint64_t seed) {
  if (values.empty()) throw StatsError("bootstrap: no values");
  if (b < 100) throw StatsError("bootstrap: need at least 100 resamples");
  if (!(level > 0.0 && level < 1.0)) throw StatsError("bootstrap: level must be in (0, 1)");
  Rng rng(seed);
  const std::size_t n = values.size();
  std::vector<double> means(static_cast<std::size_t>(b));
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += values[rng.below(n)];
    m = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  auto quantile = [&](double q) {
    const double h = (static_cast<double>(b) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, means.size() - 1);
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0) return means[lo];
    return means[lo] + frac * (means[hi] - means[lo]);
  };
  const double tail = (1.0 - level) / 2.0;
  return {quantile(tail), quantile(1.0 - tail)};
}

}  // namespace ctxjudge::stats
