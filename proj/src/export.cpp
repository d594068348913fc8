#include "export.hpp"

#include <cmath>
#include <fstream>

namespace rumboost {

namespace {

std::ofstream open_table(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write table: " + path);
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i)
    xs[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return xs;
}

}  // namespace

std::string artifact_header(const std::string& table_kind, uint64_t seed,
                            const std::string& config_hash) {
  return "# rumboost-table v1 kind=" + table_kind + " seed=" + std::to_string(seed) +
         " config=" + config_hash + "\n";
}

void write_training_log(const std::vector<TrainingLogRow>& log, uint64_t seed,
                        const std::string& config_hash, const std::string& path) {
  auto out = open_table(path);
  out << artifact_header("training_log", seed, config_hash);
  out << "round,train_ce,valid_ce,taylor_delta\n";
  for (const auto& row : log) {
    out << row.round << "," << format_double(row.train_ce) << ",";
    if (!std::isnan(row.valid_ce)) out << format_double(row.valid_ce);
    out << "," << format_double(row.taylor_delta) << "\n";
  }
}

void write_cv_table(const CVResult& cv, uint64_t seed, const std::string& config_hash,
                    const std::string& path) {
  auto out = open_table(path);
  out << artifact_header("cv", seed, config_hash);
  out << "fold,valid_ce,best_round\n";
  for (size_t f = 0; f < cv.fold_ce.size(); ++f)
    out << f << "," << format_double(cv.fold_ce[f]) << "," << cv.fold_best_round[f] << "\n";
  out << "mean," << format_double(cv.mean_ce) << "," << cv.mean_best_round << "\n";
}

void write_ascs(const RUMBoostModel& model, const std::string& path) {
  auto out = open_table(path);
  out << artifact_header("ascs", model.seed, model.config_hash);
  out << "alternative,asc\n";
  for (int a = 0; a < model.spec.n_alts(); ++a)
    out << model.spec.alt_names[a] << "," << format_double(model.ascs[a]) << "\n";
}

void write_step_curve(const StepFunction& step, uint64_t seed, const std::string& config_hash,
                      const std::string& path, int n_points) {
  auto out = open_table(path);
  out << artifact_header("curve_step", seed, config_hash);
  out << "x,value,derivative\n";
  for (double x : linspace(step.domain_min, step.domain_max, n_points))
    out << format_double(x) << "," << format_double(step.eval(x)) << ",\n";
}

void write_spline_curve(const SplineCurve& curve, uint64_t seed, const std::string& config_hash,
                        const std::string& path, int n_points) {
  auto out = open_table(path);
  out << artifact_header("curve_spline", seed, config_hash);
  out << "x,value,derivative\n";
  for (double x : linspace(curve.domain_min(), curve.domain_max(), n_points))
    out << format_double(x) << "," << format_double(curve.eval(x)) << ","
        << format_double(curve.deriv(x)) << "\n";
}

void write_vot_surface(const VoTSurface& surface, uint64_t seed, const std::string& config_hash,
                       bool log10_values, const std::string& path) {
  auto out = open_table(path);
  out << artifact_header("vot_surface", seed, config_hash);
  out << "time,cost,vot,masked\n";
  for (size_t t = 0; t < surface.time_grid.size(); ++t)
    for (size_t c = 0; c < surface.cost_grid.size(); ++c) {
      const bool masked = surface.masked(t, c);
      out << format_double(surface.time_grid[t]) << "," << format_double(surface.cost_grid[c])
          << ",";
      if (!masked)
        out << format_double(log10_values ? std::log10(surface.vot(t, c)) : surface.vot(t, c));
      out << "," << (masked ? 1 : 0) << "\n";
    }
}

void write_histogram(const Histogram& hist, uint64_t seed, const std::string& config_hash,
                     const std::string& path) {
  auto out = open_table(path);
  out << artifact_header("histogram", seed, config_hash);
  out << "bin_low,bin_high,count\n";
  for (size_t b = 0; b < hist.counts.size(); ++b)
    out << format_double(hist.edges[b]) << "," << format_double(hist.edges[b + 1]) << ","
        << hist.counts[b] << "\n";
}

void write_population_vot(const PopulationVot& pop, uint64_t seed, const std::string& config_hash,
                          const std::string& values_path, const std::string& hist_path) {
  {
    auto out = open_table(values_path);
    out << artifact_header("population_vot", seed, config_hash);
    out << "# excluded_zero_time=" << pop.excluded_zero_time
        << " excluded_masked=" << pop.excluded_masked << " excluded_top=" << pop.excluded_top
        << "\n";
    out << "vot\n";
    for (double v : pop.values) out << format_double(v) << "\n";
  }
  write_histogram(pop.hist, seed, config_hash, hist_path);
}

void write_contour(const Matrix& grid, std::span<const double> grid1, std::span<const double> grid2,
                   uint64_t seed, const std::string& config_hash, const std::string& path) {
  auto out = open_table(path);
  out << artifact_header("contour", seed, config_hash);
  out << "x1,x2,value\n";
  for (size_t i = 0; i < grid1.size(); ++i)
    for (size_t j = 0; j < grid2.size(); ++j)
      out << format_double(grid1[i]) << "," << format_double(grid2[j]) << ","
          << format_double(grid(i, j)) << "\n";
}

void write_bootstrap_curves(const BootstrapCurves& curves, uint64_t seed,
                            const std::string& config_hash, const std::string& path) {
  auto out = open_table(path);
  out << artifact_header("bootstrap_curves", seed, config_hash);
  out << "x,mean";
  for (size_t t = 0; t < curves.values.rows; ++t) out << ",iter" << t;
  out << "\n";
  for (size_t p = 0; p < curves.grid.size(); ++p) {
    out << format_double(curves.grid[p]) << "," << format_double(curves.mean[p]);
    for (size_t t = 0; t < curves.values.rows; ++t) out << "," << format_double(curves.values(t, p));
    out << "\n";
  }
}

void write_knot_report(const SmoothReport& report, uint64_t seed, const std::string& config_hash,
                       const std::string& path) {
  auto out = open_table(path);
  out << artifact_header("knot_report", seed, config_hash);
  out << "# init_bic=" << format_double(report.init_bic)
      << " best_bic=" << format_double(report.best_bic) << "\n";
  out << "target,knots\n";
  for (size_t t = 0; t < report.target_names.size(); ++t)
    out << report.target_names[t] << "," << report.best_knot_counts[t] << "\n";
  out << "\n";
  out << "search,init_bic,bic,accepted,counts\n";
  for (const auto& row : report.trace) {
    out << row.search << "," << format_double(row.init_bic) << "," << format_double(row.bic) << ","
        << (row.accepted ? 1 : 0) << ",";
    for (size_t i = 0; i < row.knot_counts.size(); ++i) {
      if (i) out << ";";
      out << row.knot_counts[i];
    }
    out << "\n";
  }
  for (const auto& w : report.warnings) out << "# warning: " << w << "\n";
}

}  // namespace rumboost
