#include "indicators.hpp"

#include <algorithm>
#include <cmath>

namespace rumboost {

namespace {

constexpr double kDerivThreshold = 1e-9;

// Flat-extreme rule: the cell sits in the curve's first or last Hermite
// segment and the derivative there is effectively zero.
bool flat_extreme(const SplineCurve& curve, double x) {
  const int seg = curve.segment_of(x);
  const int last = static_cast<int>(curve.knots.size()) - 2;
  if (seg != 0 && seg != last) return false;
  return std::abs(curve.deriv(x)) < kDerivThreshold;
}

double vot_cell(const SplineCurve& time_curve, const SplineCurve& cost_curve, double t, double c,
                double vot_min, double vot_max, bool* masked) {
  *masked = true;
  if (t < time_curve.domain_min() || t > time_curve.domain_max()) return 0.0;
  if (c < cost_curve.domain_min() || c > cost_curve.domain_max()) return 0.0;
  const double dc = cost_curve.deriv(c);
  if (std::abs(dc) < kDerivThreshold) return 0.0;
  if (flat_extreme(time_curve, t) || flat_extreme(cost_curve, c)) return 0.0;
  *masked = false;
  // Both derivatives are negative under the usual constraints; the ratio is
  // reported as a positive currency-per-hour value and clamped to the caps.
  const double ratio = time_curve.deriv(t) / dc;
  return std::min(std::max(ratio, vot_min), vot_max);
}

}  // namespace

double marginal_utility(const SplineCurve& curve, double x) {
  return curve.deriv(x);
}

VoTSurface vot_surface(const SmoothedModel& sm, int alt, const std::string& time_var,
                       const std::string& cost_var, std::span<const double> time_grid,
                       std::span<const double> cost_grid, double vot_min, double vot_max) {
  const SplineCurve& time_curve = sm.curve_for(alt, time_var);
  const SplineCurve& cost_curve = sm.curve_for(alt, cost_var);

  VoTSurface surface;
  surface.time_grid.assign(time_grid.begin(), time_grid.end());
  surface.cost_grid.assign(cost_grid.begin(), cost_grid.end());
  surface.vot = Matrix(time_grid.size(), cost_grid.size());
  surface.mask.assign(time_grid.size() * cost_grid.size(), 0);
  surface.vot_min = vot_min;
  surface.vot_max = vot_max;

  for (size_t t = 0; t < time_grid.size(); ++t) {
    for (size_t c = 0; c < cost_grid.size(); ++c) {
      bool masked;
      surface.vot(t, c) =
          vot_cell(time_curve, cost_curve, time_grid[t], cost_grid[c], vot_min, vot_max, &masked);
      surface.mask[t * cost_grid.size() + c] = masked ? 1 : 0;
    }
  }
  return surface;
}

Histogram make_histogram(std::span<const double> values, int n_bins) {
  Histogram hist;
  if (values.empty() || n_bins < 1) return hist;
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) {
    hist.edges = {lo, hi};
    hist.counts = {values.size()};
    return hist;
  }
  hist.edges.resize(n_bins + 1);
  for (int b = 0; b <= n_bins; ++b)
    hist.edges[b] = lo + (hi - lo) * static_cast<double>(b) / n_bins;
  hist.counts.assign(n_bins, 0);
  for (double v : values) {
    int b = static_cast<int>((v - lo) / (hi - lo) * n_bins);
    b = std::min(std::max(b, 0), n_bins - 1);
    ++hist.counts[b];
  }
  return hist;
}

PopulationVot population_vot(const SmoothedModel& sm, const ChoiceDataset& ds, int alt,
                             const std::string& time_var, const std::string& cost_var,
                             double vot_min, double vot_max, int hist_bins) {
  const SplineCurve& time_curve = sm.curve_for(alt, time_var);
  const SplineCurve& cost_curve = sm.curve_for(alt, cost_var);
  const auto& times = ds.columns[ds.require_column(time_var)];
  const auto& costs = ds.columns[ds.require_column(cost_var)];

  PopulationVot out;
  for (size_t r = 0; r < ds.n_rows; ++r) {
    if (times[r] <= 0.0) {
      ++out.excluded_zero_time;
      continue;
    }
    bool masked;
    const double v = vot_cell(time_curve, cost_curve, times[r], costs[r], vot_min, vot_max, &masked);
    if (masked) {
      ++out.excluded_masked;
      continue;
    }
    out.values.push_back(v);
  }

  // Trim the highest 0.1% of values.
  const size_t trim = out.values.size() / 1000;
  if (trim > 0) {
    std::sort(out.values.begin(), out.values.end());
    out.values.resize(out.values.size() - trim);
    out.excluded_top = trim;
  }
  out.hist = make_histogram(out.values, hist_bins);
  return out;
}

Matrix contour_table(const RUMBoostModel& model, int alt, const std::string& var1,
                     const std::string& var2, std::span<const double> grid1,
                     std::span<const double> grid2) {
  const ParameterEnsemble* target = nullptr;
  for (const auto& ens : model.ensembles) {
    if (ens.is_fe || ens.alt != alt || ens.variables.size() != 2) continue;
    if (ens.variables[0] == var1 && ens.variables[1] == var2) target = &ens;
  }
  if (!target)
    throw ConfigError("no 2-variable parameter (" + var1 + ", " + var2 + ") on alternative " +
                      std::to_string(alt));

  Matrix grid(grid1.size(), grid2.size());
  double buffer[2];
  for (size_t i = 0; i < grid1.size(); ++i)
    for (size_t j = 0; j < grid2.size(); ++j) {
      buffer[0] = grid1[i];
      buffer[1] = grid2[j];
      grid(i, j) = target->predict_row(std::span<const double>(buffer, 2));
    }
  return grid;
}

}  // namespace rumboost
