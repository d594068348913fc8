#pragma once

#include "smoothing.hpp"

namespace rumboost {

/// Spline derivative at x, zero outside the curve's domain.
double marginal_utility(const SplineCurve& curve, double x);

struct VoTSurface {
  std::vector<double> time_grid;  // hours
  std::vector<double> cost_grid;
  Matrix vot;                 // time x cost, currency per hour
  std::vector<uint8_t> mask;  // row-major, 1 = undefined
  double vot_min = 0.1;
  double vot_max = 100.0;

  bool masked(size_t t, size_t c) const { return mask[t * cost_grid.size() + c] != 0; }
};

/// VoT(t, c) = dV/dtime at t divided by dV/dcost at c, clamped into
/// [vot_min, vot_max]. Cells are masked where the cost derivative is within
/// 1e-9 of zero, where either coordinate leaves its curve's domain, or in a
/// flat first/last spline segment of the time curve.
VoTSurface vot_surface(const SmoothedModel& sm, int alt, const std::string& time_var,
                       const std::string& cost_var, std::span<const double> time_grid,
                       std::span<const double> cost_grid, double vot_min = 0.1,
                       double vot_max = 100.0);

struct Histogram {
  std::vector<double> edges;   // size counts + 1
  std::vector<size_t> counts;
};

Histogram make_histogram(std::span<const double> values, int n_bins);

struct PopulationVot {
  std::vector<double> values;  // surviving rows, one VoT each
  size_t excluded_zero_time = 0;
  size_t excluded_masked = 0;
  size_t excluded_top = 0;     // highest 0.1% trimmed
  Histogram hist;
};

/// Per-row VoT at each observation's (time, cost). Rows with zero travel
/// time are removed, masked cells are skipped, and the top 0.1% of values
/// are excluded before the histogram is built.
PopulationVot population_vot(const SmoothedModel& sm, const ChoiceDataset& ds, int alt,
                             const std::string& time_var, const std::string& cost_var,
                             double vot_min = 0.1, double vot_max = 100.0, int hist_bins = 50);

/// Utility contribution of a 2-variable interaction ensemble on the grid
/// cross-product; result(i, j) pairs grid1[i] with grid2[j].
Matrix contour_table(const RUMBoostModel& model, int alt, const std::string& var1,
                     const std::string& var2, std::span<const double> grid1,
                     std::span<const double> grid2);

}  // namespace rumboost
