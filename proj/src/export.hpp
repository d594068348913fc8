#pragma once

#include "indicators.hpp"
#include "trainer.hpp"

namespace rumboost {

/// Every emitted table starts with a comment line carrying the format
/// version, the seed, and the config hash of the producing run.
std::string artifact_header(const std::string& table_kind, uint64_t seed,
                            const std::string& config_hash);

void write_training_log(const std::vector<TrainingLogRow>& log, uint64_t seed,
                        const std::string& config_hash, const std::string& path);
void write_cv_table(const CVResult& cv, uint64_t seed, const std::string& config_hash,
                    const std::string& path);
void write_ascs(const RUMBoostModel& model, const std::string& path);

/// Curve table: x, value, derivative. For an unsmoothed (step) curve the
/// derivative column is empty.
void write_step_curve(const StepFunction& step, uint64_t seed, const std::string& config_hash,
                      const std::string& path, int n_points = 512);
void write_spline_curve(const SplineCurve& curve, uint64_t seed, const std::string& config_hash,
                        const std::string& path, int n_points = 512);

void write_vot_surface(const VoTSurface& surface, uint64_t seed, const std::string& config_hash,
                       bool log10_values, const std::string& path);
void write_population_vot(const PopulationVot& pop, uint64_t seed, const std::string& config_hash,
                          const std::string& values_path, const std::string& hist_path);
void write_histogram(const Histogram& hist, uint64_t seed, const std::string& config_hash,
                     const std::string& path);
void write_contour(const Matrix& grid, std::span<const double> grid1, std::span<const double> grid2,
                   uint64_t seed, const std::string& config_hash, const std::string& path);
void write_bootstrap_curves(const BootstrapCurves& curves, uint64_t seed,
                            const std::string& config_hash, const std::string& path);
void write_knot_report(const SmoothReport& report, uint64_t seed, const std::string& config_hash,
                       const std::string& path);

}  // namespace rumboost
