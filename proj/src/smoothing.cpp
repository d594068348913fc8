#include "smoothing.hpp"

#include <algorithm>
#include <cmath>

namespace rumboost {

namespace {
constexpr double kGapScale = 1e-9;  // minimum knot gap as a fraction of the domain
}

int SplineCurve::segment_of(double x) const {
  const int q = static_cast<int>(knots.size()) - 1;
  if (x <= knots.front()) return 0;
  if (x >= knots.back()) return q - 1;
  int seg = static_cast<int>(std::upper_bound(knots.begin(), knots.end(), x) - knots.begin()) - 1;
  return std::min(std::max(seg, 0), q - 1);
}

double SplineCurve::eval(double x) const {
  if (x <= knots.front()) return values.front();
  if (x >= knots.back()) return values.back();
  const int s = segment_of(x);
  const double h = knots[s + 1] - knots[s];
  const double t = (x - knots[s]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  return values[s] * h00 + h * derivs[s] * h10 + values[s + 1] * h01 + h * derivs[s + 1] * h11;
}

double SplineCurve::deriv(double x) const {
  if (x < knots.front() || x > knots.back()) return 0.0;
  const int s = segment_of(x);
  const double h = knots[s + 1] - knots[s];
  const double t = (x - knots[s]) / h;
  const double t2 = t * t;
  const double d00 = (6 * t2 - 6 * t) / h;
  const double d10 = 3 * t2 - 4 * t + 1;
  const double d01 = (-6 * t2 + 6 * t) / h;
  const double d11 = 3 * t2 - 2 * t;
  return values[s] * d00 + derivs[s] * d10 + values[s + 1] * d01 + derivs[s + 1] * d11;
}

std::vector<double> fritsch_carlson(std::span<const double> knots, std::span<const double> values) {
  const size_t n = knots.size();
  if (n < 2 || values.size() != n) throw ConfigError("fritsch_carlson: need matching knots/values");
  for (size_t i = 0; i + 1 < n; ++i)
    if (!(knots[i] < knots[i + 1])) throw ConfigError("fritsch_carlson: knots must strictly increase");

  std::vector<double> h(n - 1), delta(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    h[i] = knots[i + 1] - knots[i];
    delta[i] = (values[i + 1] - values[i]) / h[i];
  }

  std::vector<double> d(n, 0.0);
  if (n == 2) {
    d[0] = d[1] = delta[0];
    return d;
  }

  // Interior: Butland weighted harmonic mean when the neighbouring secants
  // share a sign, zero otherwise (flat or local extremum).
  for (size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      d[i] = 0.0;
    } else {
      const double w1 = 2 * h[i] + h[i - 1];
      const double w2 = h[i] + 2 * h[i - 1];
      d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }

  // Endpoints: one-sided three-point estimate, clipped into the monotone
  // region [0, 3 delta].
  auto edge = [](double h0, double h1, double d0, double d1) {
    double v = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (v * d0 <= 0.0)
      v = 0.0;
    else if (d0 * d1 < 0.0 && std::abs(v) > 3.0 * std::abs(d0))
      v = 3.0 * d0;
    return v;
  };
  d[0] = delta[0] == 0.0 ? 0.0 : edge(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = delta[n - 2] == 0.0 ? 0.0 : edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  if (std::abs(d[0]) > 3.0 * std::abs(delta[0])) d[0] = 3.0 * delta[0];
  if (std::abs(d[n - 1]) > 3.0 * std::abs(delta[n - 2])) d[n - 1] = 3.0 * delta[n - 2];
  return d;
}

SplineCurve spline_from_step(const StepFunction& step, std::span<const double> knots) {
  SplineCurve curve;
  curve.variable = step.variable;
  curve.knots.assign(knots.begin(), knots.end());
  curve.values.reserve(knots.size());
  for (double t : knots) curve.values.push_back(step.eval(t));
  curve.derivs = fritsch_carlson(curve.knots, curve.values);
  return curve;
}

const SplineCurve* SmoothedModel::try_curve_for(int alt, const std::string& variable) const {
  for (const auto& ov : overrides) {
    const auto& ens = base.ensembles[ov.ensemble_index];
    if (ens.alt == alt && ens.variables.size() == 1 && ens.variables[0] == variable)
      return &ov.curve;
  }
  return nullptr;
}

const SplineCurve& SmoothedModel::curve_for(int alt, const std::string& variable) const {
  const SplineCurve* c = try_curve_for(alt, variable);
  if (!c)
    throw ConfigError("parameter '" + variable + "' on alternative " + std::to_string(alt) +
                      " is not smoothed; run the smoothing step first");
  return *c;
}

SmoothingContext::SmoothingContext(const RUMBoostModel& model, const ChoiceDataset& ds,
                                   std::vector<int> target_ensembles, DfMode df_mode)
    : model_(model), ds_(ds), targets_(std::move(target_ensembles)), df_mode_(df_mode) {
  if (model.spec.n_alts() > 64 || (model.spec.nest && model.spec.nest->n_nests() > 64))
    throw ConfigError("smoothing supports at most 64 alternatives/nests");
  residual_ = predict_utilities(model, ds);
  for (int e : targets_) {
    const auto& ens = model.ensembles[e];
    if (ens.variables.size() != 1)
      throw ConfigError("smoothing targets must be single-variable parameters");
    steps_.push_back(utility_curve(model, ens.alt, ens.variables[0]));
    x_cols_.push_back(&ds.columns[ds.require_column(ens.variables[0])]);
    alt_of_target_.push_back(ens.alt);
    std::vector<double> sorted(*x_cols_.back());
    std::sort(sorted.begin(), sorted.end());
    sorted_x_.push_back(std::move(sorted));
    std::vector<int32_t> order(ds.n_rows);
    for (size_t r = 0; r < ds.n_rows; ++r) order[r] = static_cast<int32_t>(r);
    const auto& xs = *x_cols_.back();
    std::sort(order.begin(), order.end(),
              [&](int32_t a, int32_t b) { return xs[a] < xs[b]; });
    rows_by_x_.push_back(std::move(order));
  }
  // Remove each target's step contribution once; candidate curves are added
  // back on top of this residual.
  for (size_t t = 0; t < targets_.size(); ++t) {
    const auto& ens = model_.ensembles[targets_[t]];
    const auto& xs = *x_cols_[t];
    for (size_t r = 0; r < ds.n_rows; ++r) residual_(r, ens.alt) -= steps_[t].eval(xs[r]);
  }
  curves_.resize(targets_.size());
  spline_vals_.resize(targets_.size());
  for (size_t t = 0; t < targets_.size(); ++t) {
    // Start from a 2-knot curve spanning the domain so the context is usable
    // before the first fit.
    std::vector<double> knots{steps_[t].domain_min, steps_[t].domain_max};
    curves_[t] = spline_from_step(steps_[t], knots);
    spline_vals_[t].resize(ds.n_rows);
    const auto& xs = *x_cols_[t];
    for (size_t r = 0; r < ds.n_rows; ++r) spline_vals_[t][r] = curves_[t].eval(xs[r]);
  }
  row_ce_.resize(ds.n_rows);
  rebuild_loss_cache();
}

double SmoothingContext::df_total() const {
  double df = 0.0;
  for (const auto& c : curves_) {
    const double per = static_cast<double>(c.knots.size());
    df += df_mode_ == DfMode::KnotValues ? per : 2.0 * per;
  }
  return df;
}

// -log p(chosen) for one row, optionally substituting one target's spline
// value. Matches the head formulas used everywhere else.
double SmoothingContext::row_loss(size_t row, int trial_target, double trial_value) const {
  const size_t j = static_cast<size_t>(model_.spec.n_alts());
  double v[64];
  for (size_t a = 0; a < j; ++a) v[a] = residual_(row, a);
  for (size_t t = 0; t < targets_.size(); ++t)
    v[alt_of_target_[t]] +=
        static_cast<int>(t) == trial_target ? trial_value : spline_vals_[t][row];
  const int chosen = ds_.choice[row];

  if (!model_.spec.nest) {
    double vmax = v[0];
    for (size_t a = 1; a < j; ++a) vmax = std::max(vmax, v[a]);
    double denom = 0.0;
    for (size_t a = 0; a < j; ++a) denom += std::exp(v[a] - vmax);
    return -std::max(v[chosen] - vmax - std::log(denom), std::log(1e-15));
  }
  const NestSpec& nest = *model_.spec.nest;
  const int chosen_nest = nest.nest_of(chosen);
  double denom = 0.0;
  double chosen_within = 0.0;
  double chosen_logsum = 0.0;
  double lmax = -std::numeric_limits<double>::infinity();
  double logsums[64];
  for (size_t m = 0; m < nest.n_nests(); ++m) {
    const double mu = nest.mu[m];
    double vmax = v[nest.nests[m][0]];
    for (int a : nest.nests[m]) vmax = std::max(vmax, v[a]);
    double s = 0.0;
    for (int a : nest.nests[m]) s += std::exp(mu * (v[a] - vmax));
    logsums[m] = vmax + std::log(s) / mu;
    lmax = std::max(lmax, logsums[m]);
    if (static_cast<int>(m) == chosen_nest)
      chosen_within = mu * (v[chosen] - vmax) - std::log(s);
  }
  for (size_t m = 0; m < nest.n_nests(); ++m) denom += std::exp(logsums[m] - lmax);
  chosen_logsum = logsums[chosen_nest] - lmax - std::log(denom);
  const double log_p = chosen_within + chosen_logsum;
  return -std::max(log_p, std::log(1e-15));
}

void SmoothingContext::rebuild_loss_cache() {
  ce_sum_ = 0.0;
  for (size_t r = 0; r < ds_.n_rows; ++r) {
    row_ce_[r] = row_loss(r, -1, 0.0);
    ce_sum_ += row_ce_[r];
  }
}

double SmoothingContext::current_bic() {
  // Full rebuild at reporting points so incremental drift never accumulates.
  rebuild_loss_cache();
  return bic(ce_sum_ / static_cast<double>(ds_.n_rows), df_total(), ds_.n_rows);
}

namespace {

// x-span over which two equally-sized curves disagree; empty optional when
// the change is not local (different knot count). The per-knot diff already
// covers Fritsch-Carlson derivative propagation, so padding by one knot on
// each side bounds the affected Hermite segments.
struct DiffSpan {
  bool identical = false;
  bool local = false;
  double lo = 0.0, hi = 0.0;
};

DiffSpan diff_span(const SplineCurve& a, const SplineCurve& b) {
  DiffSpan span;
  if (a.knots.size() != b.knots.size() || a.knots.size() < 2) return span;
  int first = -1, last = -1;
  for (size_t q = 0; q < a.knots.size(); ++q) {
    const bool differs =
        a.knots[q] != b.knots[q] || a.values[q] != b.values[q] || a.derivs[q] != b.derivs[q];
    if (differs) {
      if (first < 0) first = static_cast<int>(q);
      last = static_cast<int>(q);
    }
  }
  if (first < 0) {
    span.identical = true;
    return span;
  }
  span.local = true;
  const int lo_idx = std::max(0, first - 1);
  const int hi_idx = std::min(static_cast<int>(a.knots.size()) - 1, last + 1);
  span.lo = std::min(a.knots[lo_idx], b.knots[lo_idx]);
  span.hi = std::max(a.knots[hi_idx], b.knots[hi_idx]);
  if (lo_idx == 0) span.lo = -std::numeric_limits<double>::infinity();
  if (hi_idx == static_cast<int>(a.knots.size()) - 1)
    span.hi = std::numeric_limits<double>::infinity();
  return span;
}

}  // namespace

void SmoothingContext::set_curve(size_t target, SplineCurve curve) {
  const DiffSpan span = diff_span(curve, curves_[target]);
  const auto& xs = *x_cols_[target];
  if (span.identical) {
    curves_[target] = std::move(curve);
    return;
  }
  if (!span.local) {
    curves_[target] = std::move(curve);
    for (size_t r = 0; r < ds_.n_rows; ++r) spline_vals_[target][r] = curves_[target].eval(xs[r]);
    rebuild_loss_cache();
    return;
  }
  curves_[target] = std::move(curve);
  const auto& order = rows_by_x_[target];
  auto begin = std::lower_bound(order.begin(), order.end(), span.lo,
                                [&](int32_t r, double v) { return xs[r] < v; });
  auto end = std::upper_bound(begin, order.end(), span.hi,
                              [&](double v, int32_t r) { return v < xs[r]; });
  for (auto it = begin; it != end; ++it) {
    const int32_t r = *it;
    const double value = curves_[target].eval(xs[r]);
    if (value == spline_vals_[target][r]) continue;
    spline_vals_[target][r] = value;
    const double updated = row_loss(r, -1, 0.0);
    ce_sum_ += updated - row_ce_[r];
    row_ce_[r] = updated;
  }
}

double SmoothingContext::bic_with(size_t target, const SplineCurve& curve) {
  const DiffSpan span = diff_span(curve, curves_[target]);
  if (span.identical)
    return bic(ce_sum_ / static_cast<double>(ds_.n_rows), df_total(), ds_.n_rows);

  if (!span.local) {
    // Shape changed: evaluate by temporary substitution.
    SplineCurve saved_curve = curves_[target];
    std::vector<double> saved_vals = spline_vals_[target];
    std::vector<double> saved_ce = row_ce_;
    const double saved_sum = ce_sum_;
    set_curve(target, curve);
    const double result = bic(ce_sum_ / static_cast<double>(ds_.n_rows), df_total(), ds_.n_rows);
    curves_[target] = std::move(saved_curve);
    spline_vals_[target] = std::move(saved_vals);
    row_ce_ = std::move(saved_ce);
    ce_sum_ = saved_sum;
    return result;
  }

  // Incremental: recompute the loss only for rows inside the affected span.
  const auto& xs = *x_cols_[target];
  const auto& order = rows_by_x_[target];
  auto begin = std::lower_bound(order.begin(), order.end(), span.lo,
                                [&](int32_t r, double v) { return xs[r] < v; });
  auto end = std::upper_bound(begin, order.end(), span.hi,
                              [&](double v, int32_t r) { return v < xs[r]; });
  double delta = 0.0;
  for (auto it = begin; it != end; ++it) {
    const int32_t r = *it;
    const double trial_value = curve.eval(xs[r]);
    if (trial_value == spline_vals_[target][r]) continue;
    delta += row_loss(r, static_cast<int>(target), trial_value) - row_ce_[r];
  }
  return bic((ce_sum_ + delta) / static_cast<double>(ds_.n_rows), df_total(), ds_.n_rows);
}

std::vector<double> initial_knots(std::span<const double> sorted_values, double lo, double hi,
                                  int q_intervals) {
  std::vector<double> knots;
  knots.push_back(lo);
  const size_t n = sorted_values.size();
  for (int q = 1; q < q_intervals; ++q) {
    const double frac = static_cast<double>(q) / q_intervals;
    size_t idx = static_cast<size_t>(frac * (n - 1));
    knots.push_back(sorted_values[idx]);
  }
  knots.push_back(hi);
  // Collapse duplicates from heavy ties; the caller treats a shorter vector
  // as a reduced interval count.
  std::vector<double> unique_knots;
  for (double k : knots)
    if (unique_knots.empty() || k > unique_knots.back()) unique_knots.push_back(k);
  if (unique_knots.back() < hi) unique_knots.push_back(hi);
  return unique_knots;
}

SplineCurve fit_fixed_count(SmoothingContext& ctx, size_t target, int q_intervals,
                            const SmoothParams& params) {
  if (q_intervals < 2) throw ConfigError("fit_fixed_count: need at least 2 intervals (3 knots)");
  const StepFunction& step = ctx.step(target);
  const double lo = step.domain_min;
  const double hi = step.domain_max;
  if (!(lo < hi)) {
    // Degenerate domain: constant curve on a token interval.
    SplineCurve flat;
    flat.variable = step.variable;
    flat.knots = {lo, lo + 1.0};
    flat.values = {step.eval(lo), step.eval(lo)};
    flat.derivs = {0.0, 0.0};
    return flat;
  }

  std::vector<double> knots = initial_knots(ctx.sorted_x(target), lo, hi, q_intervals);
  const double gap = kGapScale * (hi - lo);

  // Enforce strict ordering with the minimum gap on the initial layout.
  for (size_t i = 1; i < knots.size(); ++i)
    if (knots[i] - knots[i - 1] < gap) knots[i] = knots[i - 1] + gap;
  knots.back() = hi;
  std::vector<double> cleaned;
  for (double k : knots)
    if (cleaned.empty() || k - cleaned.back() >= gap || k == hi) cleaned.push_back(k);
  knots = cleaned;

  SplineCurve best = spline_from_step(step, knots);
  double best_bic = ctx.bic_with(target, best);

  // In round-robin passes the context may already hold an optimised curve
  // for this target; keep it when it beats the fresh quantile layout.
  const SplineCurve& current = ctx.curves()[target];
  if (current.knots.size() == best.knots.size() && current.knots.front() == lo &&
      current.knots.back() == hi) {
    const double current_bic = ctx.current_bic();
    if (current_bic < best_bic) {
      best = current;
      best_bic = current_bic;
    }
  }
  // The context tracks the incumbent so trial evaluations stay local to the
  // knot being moved.
  ctx.set_curve(target, best);

  // Coordinate pattern search over interior knots: try +/- step, project
  // into the order-preserving slab, keep strict improvements, halve the
  // step when a full sweep stalls.
  const int interior = static_cast<int>(best.knots.size()) - 2;
  if (interior > 0) {
    double step_size = (hi - lo) / (4.0 * (interior + 1));
    std::vector<double> pos = best.knots;
    for (int pass = 0; pass < params.opt_passes; ++pass) {
      bool improved = false;
      for (int qi = 1; qi <= interior; ++qi) {
        for (double dir : {+1.0, -1.0}) {
          double candidate = pos[qi] + dir * step_size;
          candidate = std::min(std::max(candidate, pos[qi - 1] + gap), pos[qi + 1] - gap);
          if (candidate == pos[qi]) continue;
          std::vector<double> trial = pos;
          trial[qi] = candidate;
          SplineCurve trial_curve = spline_from_step(step, trial);
          const double trial_bic = ctx.bic_with(target, trial_curve);
          if (trial_bic < best_bic) {
            best_bic = trial_bic;
            best = trial_curve;
            ctx.set_curve(target, std::move(trial_curve));
            pos = trial;
            improved = true;
            break;  // re-evaluate the other direction from the new spot
          }
        }
      }
      if (!improved) step_size /= 2.0;
      if (step_size < gap) break;
    }
  }
  return best;
}

SmoothedModel optimize_knot_counts(const RUMBoostModel& model, const ChoiceDataset& ds,
                                   std::span<const std::pair<int, std::string>> targets,
                                   const SmoothParams& params, SmoothReport* report) {
  if (targets.empty()) throw ConfigError("optimize_knot_counts: no targets");
  if (params.knots_min < 3) throw ConfigError("optimize_knot_counts: knots_min must be >= 3");
  if (params.knots_max < params.knots_min)
    throw ConfigError("optimize_knot_counts: knot bounds out of order");
  if (params.n_searches < 1) throw ConfigError("optimize_knot_counts: n_searches must be >= 1");

  std::vector<int> usable;
  std::vector<std::string> names;
  for (const auto& [alt, var] : targets) {
    const int e = model.find_ensemble(alt, var);
    if (model.ensembles[e].trees.empty()) {
      if (report)
        report->warnings.push_back("skipping " + model.spec.alt_names[alt] + ":" + var +
                                   " (no regression trees in the parameter ensemble)");
      continue;
    }
    usable.push_back(e);
    names.push_back(model.spec.alt_names[alt] + ":" + var);
  }
  if (usable.empty()) throw ConfigError("optimize_knot_counts: every target has an empty ensemble");

  SmoothingContext ctx(model, ds, usable, params.df_mode);
  Rng rng(params.seed);

  double best_bic = std::numeric_limits<double>::infinity();
  double best_init_bic = 0.0;
  std::vector<SplineCurve> best_curves;
  std::vector<int> best_counts;

  for (int s = 0; s < params.n_searches; ++s) {
    std::vector<int> counts(usable.size());
    for (auto& c : counts) c = static_cast<int>(rng.range(params.knots_min, params.knots_max));

    // Quantile-initialised curves for every target, then per-curve position
    // optimisation in round-robin passes against the full-model BIC.
    for (size_t t = 0; t < usable.size(); ++t) {
      const StepFunction& step = ctx.step(t);
      std::vector<double> init =
          initial_knots(ctx.sorted_x(t), step.domain_min, step.domain_max, counts[t] - 1);
      if (report && static_cast<int>(init.size()) < counts[t])
        report->warnings.push_back(names[t] + ": knot count reduced to " +
                                   std::to_string(init.size()) + " (duplicate quantiles)");
      ctx.set_curve(t, spline_from_step(step, init));
    }
    const double init_bic = ctx.current_bic();

    double search_bic = init_bic;
    std::vector<SplineCurve> init_curves = ctx.curves();
    for (int pass = 0; pass < params.round_robin_passes; ++pass) {
      for (size_t t = 0; t < usable.size(); ++t) {
        SplineCurve fitted = fit_fixed_count(ctx, t, counts[t] - 1, params);
        ctx.set_curve(t, std::move(fitted));
      }
      search_bic = ctx.current_bic();
    }
    // The incremental trial accounting can differ from a full evaluation by
    // machine noise; never report a search as worse than its initialisation.
    if (search_bic > init_bic) {
      for (size_t t = 0; t < usable.size(); ++t) ctx.set_curve(t, init_curves[t]);
      search_bic = init_bic;
    }

    const bool accepted = search_bic < best_bic;
    if (accepted) {
      best_bic = search_bic;
      best_init_bic = init_bic;
      best_curves = ctx.curves();
      best_counts = counts;
    }
    if (report) report->trace.push_back({s, counts, init_bic, search_bic, accepted});
  }

  SmoothedModel sm;
  sm.base = model;
  for (size_t t = 0; t < usable.size(); ++t)
    sm.overrides.push_back({usable[t], best_curves[t]});
  double df = 0.0;
  for (const auto& c : best_curves)
    df += params.df_mode == DfMode::KnotValues ? c.knots.size() : 2.0 * c.knots.size();
  sm.df = static_cast<int>(df);
  sm.bic_value = best_bic;

  if (report) {
    report->target_names = names;
    for (const auto& c : best_curves) report->best_knot_counts.push_back(static_cast<int>(c.knots.size()));
    report->init_bic = best_init_bic;
    report->best_bic = best_bic;
  }
  return sm;
}

Matrix smoothed_utilities(const SmoothedModel& sm, const ChoiceDataset& ds) {
  Matrix v = predict_utilities(sm.base, ds);
  for (const auto& ov : sm.overrides) {
    const auto& ens = sm.base.ensembles[ov.ensemble_index];
    StepFunction step = utility_curve(sm.base, ens.alt, ens.variables[0]);
    const auto& xs = ds.columns[ds.require_column(ens.variables[0])];
    for (size_t r = 0; r < ds.n_rows; ++r)
      v(r, ens.alt) += ov.curve.eval(xs[r]) - step.eval(xs[r]);
  }
  return v;
}

Matrix smoothed_predict(const SmoothedModel& sm, const ChoiceDataset& ds) {
  Matrix v = smoothed_utilities(sm, ds);
  ProbSet ps = sm.base.spec.nest ? nested_probset(v, *sm.base.spec.nest) : mnl_probset(v);
  return std::move(ps.probs);
}

double smoothed_evaluate_ce(const SmoothedModel& sm, const ChoiceDataset& ds) {
  return cross_entropy(smoothed_predict(sm, ds), ds.choice);
}

}  // namespace rumboost
