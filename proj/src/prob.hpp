#pragma once

#include <span>

#include "common.hpp"
#include "model_spec.hpp"

namespace rumboost {

enum class Head { Mnl, Nested };

/// Probabilities produced by one head. The nested head also carries the
/// within-nest conditionals and nest probabilities its derivatives need.
struct ProbSet {
  Head head = Head::Mnl;
  Matrix probs;       // N x J, P(i)
  Matrix cond;        // N x J, P(i | nest of i)     (nested only)
  Matrix nest_probs;  // N x M, P(m)                 (nested only)
  NestSpec nest;      // nested only
};

/// Row-wise softmax with max-subtraction. Throws NumericError on NaN input.
Matrix softmax_probs(const Matrix& utilities);

ProbSet mnl_probset(const Matrix& utilities);
ProbSet nested_probset(const Matrix& utilities, const NestSpec& nest);
Matrix nested_probs(const Matrix& utilities, const NestSpec& nest);

/// Mean negative log-likelihood per observation; chosen-alternative
/// probabilities are clamped below at 1e-15 before the log.
double cross_entropy(const Matrix& probs, std::span<const int> choice);

struct GradHess {
  Matrix g;  // N x J
  Matrix h;  // N x J, diagonal second derivatives
};

/// Analytic first and diagonal second derivatives of the per-observation
/// negative log-likelihood with respect to each utility. `expected_head`
/// must match the head that produced `ps`.
GradHess grad_hess(const ProbSet& ps, std::span<const int> choice, Head expected_head);

/// 2 * N * mean_loss + df * ln(N), with mean_loss a mean negative
/// log-likelihood.
double bic(double mean_loss, double df, size_t n);

}  // namespace rumboost
