#pragma once

#include "trainer.hpp"

namespace rumboost {

/// Monotone piecewise-cubic Hermite curve. Outside [knots.front(),
/// knots.back()] the value clamps to the boundary knot and the derivative
/// is zero.
struct SplineCurve {
  std::string variable;
  std::vector<double> knots;
  std::vector<double> values;
  std::vector<double> derivs;

  double domain_min() const { return knots.front(); }
  double domain_max() const { return knots.back(); }
  double eval(double x) const;
  double deriv(double x) const;
  /// Index of the Hermite segment containing x (clamped to the ends).
  int segment_of(double x) const;
};

/// Knot derivatives for a monotonicity-preserving cubic Hermite interpolant
/// (Fritsch-Carlson, with the Butland weighted harmonic mean at interior
/// knots). Wherever consecutive values are monotone the segment between them
/// is monotone; equal consecutive values force zero derivatives at both ends
/// of that segment.
std::vector<double> fritsch_carlson(std::span<const double> knots, std::span<const double> values);

/// Builds a curve from knot positions, sampling values from the step
/// function (left-continuous at exact breakpoints).
SplineCurve spline_from_step(const StepFunction& step, std::span<const double> knots);

struct SplineOverride {
  int ensemble_index = 0;
  SplineCurve curve;
};

struct SmoothedModel {
  RUMBoostModel base;
  std::vector<SplineOverride> overrides;
  int df = 0;
  double bic_value = 0.0;

  const SplineCurve& curve_for(int alt, const std::string& variable) const;
  const SplineCurve* try_curve_for(int alt, const std::string& variable) const;
};

enum class DfMode {
  KnotValues,             // df per curve = Q + 1 (knot values free)
  KnotValuesAndPositions  // df per curve = 2 (Q + 1)
};

struct SmoothParams {
  int knots_min = 3;  // knot counts (Q + 1), at least 3
  int knots_max = 8;
  int n_searches = 25;
  uint64_t seed = 0;
  DfMode df_mode = DfMode::KnotValues;
  int opt_passes = 8;        // pattern-search sweeps per curve fit
  int round_robin_passes = 2;
};

struct KnotSearchTrace {
  int search = 0;
  std::vector<int> knot_counts;  // per target
  double init_bic = 0.0;         // quantile-initialised BIC for these counts
  double bic = 0.0;              // after position optimisation
  bool accepted = false;         // true when this search improved the incumbent
};

struct SmoothReport {
  std::vector<std::string> target_names;  // "alt:variable"
  std::vector<int> best_knot_counts;
  std::vector<KnotSearchTrace> trace;
  std::vector<std::string> warnings;
  double init_bic = 0.0;  // quantile-initialised BIC of the winning counts
  double best_bic = 0.0;
};

/// Shared state for spline fitting: base utilities with the target step
/// contributions removed, plus per-target columns. BIC is always the
/// full-model criterion on this dataset.
///
/// Trial curves that differ from the current one only around a single moved
/// knot are evaluated incrementally: only rows whose x falls in the affected
/// spline segments have their loss contribution recomputed.
class SmoothingContext {
 public:
  SmoothingContext(const RUMBoostModel& model, const ChoiceDataset& ds,
                   std::vector<int> target_ensembles, DfMode df_mode);

  size_t n_targets() const { return targets_.size(); }
  const StepFunction& step(size_t target) const { return steps_[target]; }
  int ensemble_index(size_t target) const { return targets_[target]; }
  /// Sorted copy of the target's data column, for quantile-placed knots.
  const std::vector<double>& sorted_x(size_t target) const { return sorted_x_[target]; }

  /// Full-model BIC with one target's curve replaced; the stored state is
  /// unchanged.
  double bic_with(size_t target, const SplineCurve& curve);
  double current_bic();
  const std::vector<SplineCurve>& curves() const { return curves_; }
  void set_curve(size_t target, SplineCurve curve);
  double df_total() const;

 private:
  double row_loss(size_t row, int trial_target, double trial_value) const;
  void rebuild_loss_cache();

  const RUMBoostModel& model_;
  const ChoiceDataset& ds_;
  std::vector<int> targets_;
  DfMode df_mode_;
  std::vector<StepFunction> steps_;
  std::vector<const std::vector<double>*> x_cols_;
  std::vector<std::vector<double>> sorted_x_;
  std::vector<std::vector<int32_t>> rows_by_x_;  // per target, rows ascending in x
  std::vector<int> alt_of_target_;
  Matrix residual_;  // utilities minus every target's step contribution
  std::vector<SplineCurve> curves_;
  std::vector<std::vector<double>> spline_vals_;  // per target, per row
  std::vector<double> row_ce_;                    // per-row -log p(chosen)
  double ce_sum_ = 0.0;
};

/// Quantile-initialised knots for Q intervals (Q + 1 knots): endpoints pinned
/// to the observed range, interior knot q at the q/Q-th quantile of the data.
std::vector<double> initial_knots(std::span<const double> sorted_values, double lo, double hi,
                                  int q_intervals);

/// Fits one curve with a fixed interval count: quantile-initialised interior
/// knots, then a derivative-free pattern search over their positions against
/// the full-model BIC, endpoints pinned and strict ordering enforced with a
/// minimum gap of 1e-9 times the domain width. Never returns a curve with a
/// worse BIC than the initial one.
SplineCurve fit_fixed_count(SmoothingContext& ctx, size_t target, int q_intervals,
                            const SmoothParams& params);

/// Algorithm: draw n_searches knot-count vectors, fit all targets jointly for
/// each, and keep the BIC-minimising assignment. Knot counts are knot totals
/// (Q + 1) in [knots_min, knots_max]. Targets whose ensembles hold no trees
/// are skipped with a warning.
SmoothedModel optimize_knot_counts(const RUMBoostModel& model, const ChoiceDataset& ds,
                                   std::span<const std::pair<int, std::string>> targets,
                                   const SmoothParams& params, SmoothReport* report = nullptr);

Matrix smoothed_utilities(const SmoothedModel& sm, const ChoiceDataset& ds);
Matrix smoothed_predict(const SmoothedModel& sm, const ChoiceDataset& ds);
double smoothed_evaluate_ce(const SmoothedModel& sm, const ChoiceDataset& ds);

}  // namespace rumboost
