#include "prob.hpp"

#include <algorithm>
#include <cmath>

namespace rumboost {

namespace {

constexpr double kProbFloor = 1e-15;

void check_finite(const Matrix& v) {
  for (double x : v.data)
    if (std::isnan(x)) throw NumericError("utility matrix contains NaN");
}

}  // namespace

Matrix softmax_probs(const Matrix& utilities) {
  check_finite(utilities);
  Matrix p(utilities.rows, utilities.cols);
  for (size_t r = 0; r < utilities.rows; ++r) {
    auto v = utilities.row(r);
    double vmax = v[0];
    for (double x : v) vmax = std::max(vmax, x);
    double sum = 0.0;
    for (size_t c = 0; c < v.size(); ++c) {
      double e = std::exp(v[c] - vmax);
      p(r, c) = e;
      sum += e;
    }
    for (size_t c = 0; c < v.size(); ++c) p(r, c) /= sum;
  }
  return p;
}

ProbSet mnl_probset(const Matrix& utilities) {
  ProbSet ps;
  ps.head = Head::Mnl;
  ps.probs = softmax_probs(utilities);
  return ps;
}

ProbSet nested_probset(const Matrix& utilities, const NestSpec& nest) {
  check_finite(utilities);
  nest.check(static_cast<int>(utilities.cols));

  const size_t n = utilities.rows;
  const size_t j = utilities.cols;
  const size_t m_count = nest.n_nests();

  ProbSet ps;
  ps.head = Head::Nested;
  ps.nest = nest;
  ps.probs = Matrix(n, j);
  ps.cond = Matrix(n, j);
  ps.nest_probs = Matrix(n, m_count);

  std::vector<double> logsum(m_count);
  for (size_t r = 0; r < n; ++r) {
    // Within-nest conditionals and the scaled log-sum V~_m, both with
    // max-subtraction for overflow safety.
    for (size_t m = 0; m < m_count; ++m) {
      const auto& members = nest.nests[m];
      const double mu = nest.mu[m];
      double vmax = utilities(r, members[0]);
      for (int a : members) vmax = std::max(vmax, utilities(r, a));
      double s = 0.0;
      for (int a : members) s += std::exp(mu * (utilities(r, a) - vmax));
      for (int a : members) ps.cond(r, a) = std::exp(mu * (utilities(r, a) - vmax)) / s;
      logsum[m] = vmax + std::log(s) / mu;
    }
    double lmax = logsum[0];
    for (size_t m = 0; m < m_count; ++m) lmax = std::max(lmax, logsum[m]);
    double denom = 0.0;
    for (size_t m = 0; m < m_count; ++m) denom += std::exp(logsum[m] - lmax);
    for (size_t m = 0; m < m_count; ++m) {
      const double pm = std::exp(logsum[m] - lmax) / denom;
      ps.nest_probs(r, m) = pm;
      for (int a : nest.nests[m]) ps.probs(r, a) = ps.cond(r, a) * pm;
    }
  }
  return ps;
}

Matrix nested_probs(const Matrix& utilities, const NestSpec& nest) {
  return nested_probset(utilities, nest).probs;
}

double cross_entropy(const Matrix& probs, std::span<const int> choice) {
  if (probs.rows != choice.size()) throw DataError("cross_entropy: choice length mismatch");
  double total = 0.0;
  for (size_t r = 0; r < probs.rows; ++r)
    total += -std::log(std::max(probs(r, static_cast<size_t>(choice[r])), kProbFloor));
  return total / static_cast<double>(probs.rows);
}

GradHess grad_hess(const ProbSet& ps, std::span<const int> choice, Head expected_head) {
  if (ps.head != expected_head)
    throw ConfigError("grad_hess: probabilities were produced by a different head");
  if (ps.probs.rows != choice.size()) throw DataError("grad_hess: choice length mismatch");

  const size_t n = ps.probs.rows;
  const size_t j = ps.probs.cols;
  GradHess gh;
  gh.g = Matrix(n, j);
  gh.h = Matrix(n, j);

  if (ps.head == Head::Mnl) {
    for (size_t r = 0; r < n; ++r) {
      const int c = choice[r];
      for (size_t i = 0; i < j; ++i) {
        const double p = ps.probs(r, i);
        gh.g(r, i) = p - (static_cast<int>(i) == c ? 1.0 : 0.0);
        gh.h(r, i) = p * (1.0 - p);
      }
    }
    return gh;
  }

  // Nested head. With S_m = sum_{j in m} e^{mu_m V_j} and
  // V~_m = ln(S_m)/mu_m, the loss for chosen c in nest mc is
  //   l = -mu_mc V_c + ln S_mc - V~_mc + ln(sum_p e^{V~_p}).
  // Differentiating for i in nest m:
  //   dl/dV_i  = P(i) + [m == mc] (mu_m - 1) P(i|m) - mu_m [i == c]
  //   d2l/dV_i2 = mu_m P(i)(1 - P(i|m)) + P(i|m) P(i)(1 - P(m))
  //               + [m == mc] (mu_m - 1) mu_m P(i|m)(1 - P(i|m))
  // At mu = 1 both collapse to the MNL expressions.
  const NestSpec& nest = ps.nest;
  std::vector<int> nest_of(j);
  for (size_t i = 0; i < j; ++i) nest_of[i] = nest.nest_of(static_cast<int>(i));

  for (size_t r = 0; r < n; ++r) {
    const int c = choice[r];
    const int mc = nest_of[c];
    for (size_t i = 0; i < j; ++i) {
      const int m = nest_of[i];
      const double mu = nest.mu[m];
      const double p = ps.probs(r, i);
      const double pc = ps.cond(r, i);
      const double pm = ps.nest_probs(r, m);
      double g = p;
      double h = mu * p * (1.0 - pc) + pc * p * (1.0 - pm);
      if (m == mc) {
        g += (mu - 1.0) * pc;
        h += (mu - 1.0) * mu * pc * (1.0 - pc);
        if (static_cast<int>(i) == c) g -= mu;
      }
      gh.g(r, i) = g;
      gh.h(r, i) = h;
    }
  }
  return gh;
}

double bic(double mean_loss, double df, size_t n) {
  if (n < 1) throw ConfigError("bic: n must be >= 1");
  if (df < 0) throw ConfigError("bic: df must be >= 0");
  return 2.0 * static_cast<double>(n) * mean_loss + df * std::log(static_cast<double>(n));
}

}  // namespace rumboost
