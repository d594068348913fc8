#include "rumboost.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <string>

#include "export.hpp"
#include "model_io.hpp"

namespace {

using namespace rumboost;

thread_local std::string g_last_error = "";

rumb_status fail(rumb_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <class Fn>
rumb_status guarded(Fn&& fn) {
  try {
    fn();
    return RUMB_OK;
  } catch (const ConfigError& e) {
    return fail(RUMB_ERR_CONFIG, e.what());
  } catch (const DataError& e) {
    return fail(RUMB_ERR_DATA, e.what());
  } catch (const NumericError& e) {
    return fail(RUMB_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(RUMB_ERR_NUMERIC, e.what());
  }
}

TrainParams to_params(const rumb_train_options* opts) {
  TrainParams p;
  if (!opts) return p;
  if (opts->learning_rate > 0) p.learning_rate = opts->learning_rate;
  if (opts->num_rounds > 0) p.num_rounds = opts->num_rounds;
  if (opts->early_stopping_rounds >= 0) p.early_stopping_rounds = opts->early_stopping_rounds;
  if (opts->max_bins > 0) p.max_bins = opts->max_bins;
  if (opts->min_data_in_bin > 0) p.min_data_in_bin = opts->min_data_in_bin;
  if (opts->min_data_in_leaf > 0) p.min_data_in_leaf = opts->min_data_in_leaf;
  if (opts->min_sum_hessian_in_leaf > 0) p.min_sum_hessian_in_leaf = opts->min_sum_hessian_in_leaf;
  if (opts->min_gain_to_split >= 0) p.min_gain_to_split = opts->min_gain_to_split;
  if (opts->valid_fraction > 0 && opts->valid_fraction < 1) p.valid_fraction = opts->valid_fraction;
  if (opts->bagging_fraction > 0 && opts->bagging_fraction < 1) {
    p.bagging_fraction = opts->bagging_fraction;
    p.bagging_freq = opts->bagging_freq > 0 ? opts->bagging_freq : 1;
  }
  if (opts->feature_fraction > 0 && opts->feature_fraction < 1)
    p.feature_fraction = opts->feature_fraction;
  p.nested_leaf_factor = opts->nested_leaf_factor != 0;
  p.seed = opts->seed;
  p.threads = opts->threads;
  return p;
}

ModelSpec spec_with_overrides(const ModelSpec& base, const rumb_train_options* opts) {
  ModelSpec spec = base;
  if (opts && opts->nests && opts->nests[0] != '\0') {
    const double mu = opts->mu >= 1.0 ? opts->mu : 1.0;
    spec.nest = parse_nest_string(opts->nests, spec.alt_names, mu);
  } else if (opts && opts->mu >= 1.0 && spec.nest) {
    for (size_t m = 0; m < spec.nest->nests.size(); ++m)
      if (spec.nest->nests[m].size() > 1) spec.nest->mu[m] = opts->mu;
  }
  return spec;
}

std::vector<std::pair<int, std::string>> parse_targets(const rumb_model* handle,
                                                       const char* targets);

}  // namespace

struct rumb_dataset {
  ChoiceDataset ds;
};

struct rumb_spec {
  ModelSpec spec;
};

struct rumb_model {
  ModelFile file;

  bool smoothed() const { return !file.overrides.empty(); }
  SmoothedModel view() const {
    SmoothedModel sm;
    sm.base = file.model;
    sm.overrides = file.overrides;
    sm.df = file.spline_df;
    return sm;
  }
};

namespace {

std::vector<std::pair<int, std::string>> parse_targets(const rumb_model* handle,
                                                       const char* targets) {
  const RUMBoostModel& model = handle->file.model;
  std::vector<std::pair<int, std::string>> out;
  if (!targets || targets[0] == '\0') {
    for (const auto& ens : model.ensembles)
      if (!ens.is_fe && ens.variables.size() == 1 && !ens.trees.empty())
        out.emplace_back(ens.alt, ens.variables[0]);
    return out;
  }
  for (const std::string& item : split_string(targets, ',')) {
    auto parts = split_string(item, ':');
    if (parts.size() != 2) throw ConfigError("target '" + item + "' must be alt:variable");
    out.emplace_back(model.spec.alt_index(parts[0]), parts[1]);
  }
  return out;
}

}  // namespace

extern "C" {

const char* rumb_last_error(void) { return g_last_error.c_str(); }

const char* rumb_version(void) { return "rumboost 1.0.0"; }

rumb_status rumb_dataset_load(const char* data_path, const char* schema_path, rumb_dataset** out) {
  return rumb_dataset_load_grouped(data_path, schema_path, nullptr, out);
}

rumb_status rumb_dataset_load_grouped(const char* data_path, const char* schema_path,
                                      const char* group_column, rumb_dataset** out) {
  if (!data_path || !schema_path || !out)
    return fail(RUMB_ERR_CONFIG, "rumb_dataset_load: null argument");
  return guarded([&] {
    DatasetSchema schema = DatasetSchema::parse_file(schema_path);
    if (group_column) schema.group_column = group_column;
    auto handle = std::make_unique<rumb_dataset>();
    handle->ds = load_dataset(data_path, schema);
    *out = handle.release();
  });
}

void rumb_dataset_free(rumb_dataset* ds) { delete ds; }

size_t rumb_dataset_rows(const rumb_dataset* ds) { return ds ? ds->ds.n_rows : 0; }

size_t rumb_dataset_alts(const rumb_dataset* ds) { return ds ? ds->ds.n_alts() : 0; }

rumb_status rumb_spec_load(const char* spec_path, rumb_spec** out) {
  if (!spec_path || !out) return fail(RUMB_ERR_CONFIG, "rumb_spec_load: null argument");
  return guarded([&] {
    auto handle = std::make_unique<rumb_spec>();
    handle->spec = parse_spec_file(spec_path);
    *out = handle.release();
  });
}

rumb_status rumb_spec_parse(const char* json_text, rumb_spec** out) {
  if (!json_text || !out) return fail(RUMB_ERR_CONFIG, "rumb_spec_parse: null argument");
  return guarded([&] {
    auto handle = std::make_unique<rumb_spec>();
    handle->spec = parse_spec(json_text);
    *out = handle.release();
  });
}

rumb_status rumb_spec_validate(const rumb_spec* spec, const rumb_dataset* ds,
                               char* warnings_buffer, size_t buffer_len) {
  if (!spec || !ds) return fail(RUMB_ERR_CONFIG, "rumb_spec_validate: null argument");
  return guarded([&] {
    std::vector<std::string> warnings;
    validate_spec(spec->spec, ds->ds, &warnings);
    if (warnings_buffer && buffer_len > 0) {
      std::string joined;
      for (const auto& w : warnings) {
        if (!joined.empty()) joined += "\n";
        joined += w;
      }
      std::strncpy(warnings_buffer, joined.c_str(), buffer_len - 1);
      warnings_buffer[buffer_len - 1] = '\0';
    }
  });
}

rumb_status rumb_spec_serialize(const rumb_spec* spec, char** out_text) {
  if (!spec || !out_text) return fail(RUMB_ERR_CONFIG, "rumb_spec_serialize: null argument");
  return guarded([&] {
    std::string text = serialize_spec(spec->spec);
    *out_text = static_cast<char*>(std::malloc(text.size() + 1));
    if (!*out_text) throw NumericError("out of memory");
    std::memcpy(*out_text, text.c_str(), text.size() + 1);
  });
}

void rumb_spec_free(rumb_spec* spec) { delete spec; }

void rumb_train_options_init(rumb_train_options* opts) {
  if (!opts) return;
  std::memset(opts, 0, sizeof(*opts));
  opts->learning_rate = -1;
  opts->num_rounds = -1;
  opts->early_stopping_rounds = -1;
  opts->max_bins = -1;
  opts->min_data_in_bin = -1;
  opts->min_data_in_leaf = -1;
  opts->min_sum_hessian_in_leaf = -1;
  opts->min_gain_to_split = -1;
  opts->valid_fraction = -1;
  opts->bagging_fraction = -1;
  opts->bagging_freq = 0;
  opts->feature_fraction = -1;
  opts->nested_leaf_factor = 1;
  opts->seed = 0;
  opts->threads = 0;
  opts->nests = nullptr;
  opts->mu = -1;
}

rumb_status rumb_train(const rumb_dataset* train_ds, const rumb_dataset* valid_ds,
                       const rumb_spec* spec, const rumb_train_options* opts,
                       const char* log_path, rumb_model** out) {
  if (!train_ds || !spec || !out) return fail(RUMB_ERR_CONFIG, "rumb_train: null argument");
  return guarded([&] {
    TrainParams params = to_params(opts);
    ModelSpec run_spec = spec_with_overrides(spec->spec, opts);
    std::vector<TrainingLogRow> log;
    auto handle = std::make_unique<rumb_model>();
    handle->file.model = train(train_ds->ds, run_spec, params,
                               valid_ds ? &valid_ds->ds : nullptr, &log);
    if (log_path)
      write_training_log(log, params.seed, handle->file.model.config_hash, log_path);
    *out = handle.release();
  });
}

rumb_status rumb_cross_validate(const rumb_dataset* ds, const rumb_spec* spec,
                                const rumb_train_options* opts, int k, const char* table_path,
                                double* mean_ce, int* mean_best_round) {
  if (!ds || !spec) return fail(RUMB_ERR_CONFIG, "rumb_cross_validate: null argument");
  return guarded([&] {
    TrainParams params = to_params(opts);
    ModelSpec run_spec = spec_with_overrides(spec->spec, opts);
    FoldAssignment folds = grouped_kfold(ds->ds, k, params.seed);
    CVResult cv = cross_validate(ds->ds, run_spec, params, folds);
    if (table_path) {
      const std::string hash = fnv1a_hex(serialize_spec(run_spec));
      write_cv_table(cv, params.seed, hash, table_path);
    }
    if (mean_ce) *mean_ce = cv.mean_ce;
    if (mean_best_round) *mean_best_round = cv.mean_best_round;
  });
}

rumb_status rumb_model_save(const rumb_model* model, const char* path) {
  if (!model || !path) return fail(RUMB_ERR_CONFIG, "rumb_model_save: null argument");
  return guarded([&] { save_model(model->file, path); });
}

rumb_status rumb_model_load(const char* path, rumb_model** out) {
  if (!path || !out) return fail(RUMB_ERR_CONFIG, "rumb_model_load: null argument");
  return guarded([&] {
    auto handle = std::make_unique<rumb_model>();
    handle->file = load_model(path);
    *out = handle.release();
  });
}

void rumb_model_free(rumb_model* model) { delete model; }

rumb_status rumb_evaluate(const rumb_model* model, const rumb_dataset* ds, double* out_ce) {
  if (!model || !ds || !out_ce) return fail(RUMB_ERR_CONFIG, "rumb_evaluate: null argument");
  return guarded([&] {
    *out_ce = model->smoothed() ? smoothed_evaluate_ce(model->view(), ds->ds)
                                : evaluate_ce(model->file.model, ds->ds);
  });
}

rumb_status rumb_predict_probs(const rumb_model* model, const rumb_dataset* ds, double* out,
                               size_t out_len) {
  if (!model || !ds || !out) return fail(RUMB_ERR_CONFIG, "rumb_predict_probs: null argument");
  return guarded([&] {
    Matrix probs = model->smoothed() ? smoothed_predict(model->view(), ds->ds)
                                     : predict_probs(model->file.model, ds->ds);
    if (out_len < probs.data.size())
      throw ConfigError("rumb_predict_probs: output buffer too small");
    std::memcpy(out, probs.data.data(), probs.data.size() * sizeof(double));
  });
}

rumb_status rumb_model_ascs(const rumb_model* model, double* out, size_t out_len) {
  if (!model || !out) return fail(RUMB_ERR_CONFIG, "rumb_model_ascs: null argument");
  return guarded([&] {
    const auto& ascs = model->file.model.ascs;
    if (out_len < ascs.size()) throw ConfigError("rumb_model_ascs: output buffer too small");
    std::memcpy(out, ascs.data(), ascs.size() * sizeof(double));
  });
}

rumb_status rumb_export_ascs(const rumb_model* model, const char* path) {
  if (!model || !path) return fail(RUMB_ERR_CONFIG, "rumb_export_ascs: null argument");
  return guarded([&] { write_ascs(model->file.model, path); });
}

rumb_status rumb_model_rounds(const rumb_model* model, int* out_rounds) {
  if (!model || !out_rounds) return fail(RUMB_ERR_CONFIG, "rumb_model_rounds: null argument");
  *out_rounds = model->file.model.trained_rounds;
  return RUMB_OK;
}

rumb_status rumb_smooth(rumb_model* model, const rumb_dataset* ds, const char* targets,
                        int knots_min, int knots_max, int n_searches, uint64_t seed,
                        const char* report_path, double* out_bic) {
  if (!model || !ds) return fail(RUMB_ERR_CONFIG, "rumb_smooth: null argument");
  return guarded([&] {
    SmoothParams params;
    if (knots_min > 0) params.knots_min = knots_min;
    if (knots_max > 0) params.knots_max = knots_max;
    if (n_searches > 0) params.n_searches = n_searches;
    params.seed = seed;
    auto target_list = parse_targets(model, targets);
    if (target_list.empty()) {
      // Nothing to smooth: leave the model untouched and record why.
      SmoothReport empty;
      empty.warnings.push_back("no smoothable single-variable parameters with trees");
      if (report_path)
        write_knot_report(empty, seed, model->file.model.config_hash, report_path);
      if (out_bic) *out_bic = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    SmoothReport report;
    SmoothedModel sm = optimize_knot_counts(model->file.model, ds->ds, target_list, params, &report);
    model->file.overrides = std::move(sm.overrides);
    model->file.spline_df = sm.df;
    if (report_path)
      write_knot_report(report, seed, model->file.model.config_hash, report_path);
    if (out_bic) *out_bic = sm.bic_value;
  });
}

rumb_status rumb_export_curve(const rumb_model* model, const char* alt, const char* variable,
                              int n_points, const char* path) {
  if (!model || !alt || !variable || !path)
    return fail(RUMB_ERR_CONFIG, "rumb_export_curve: null argument");
  return guarded([&] {
    const RUMBoostModel& m = model->file.model;
    const int alt_idx = m.spec.alt_index(alt);
    const int points = n_points > 1 ? n_points : 512;
    for (const auto& ov : model->file.overrides) {
      const auto& ens = m.ensembles[ov.ensemble_index];
      if (ens.alt == alt_idx && ens.variables.size() == 1 && ens.variables[0] == variable) {
        write_spline_curve(ov.curve, m.seed, m.config_hash, path, points);
        return;
      }
    }
    StepFunction step = utility_curve(m, alt_idx, variable);
    write_step_curve(step, m.seed, m.config_hash, path, points);
  });
}

rumb_status rumb_export_vot_surface(const rumb_model* model, const char* alt,
                                    const char* time_var, const char* cost_var, int n_time,
                                    int n_cost, double vot_min, double vot_max, int log10_values,
                                    const char* path) {
  if (!model || !alt || !time_var || !cost_var || !path)
    return fail(RUMB_ERR_CONFIG, "rumb_export_vot_surface: null argument");
  return guarded([&] {
    SmoothedModel sm = model->view();
    const int alt_idx = sm.base.spec.alt_index(alt);
    const SplineCurve& tc = sm.curve_for(alt_idx, time_var);
    const SplineCurve& cc = sm.curve_for(alt_idx, cost_var);
    const int nt = n_time > 1 ? n_time : 100;
    const int nc = n_cost > 1 ? n_cost : 100;
    std::vector<double> tg(nt), cg(nc);
    for (int i = 0; i < nt; ++i)
      tg[i] = tc.domain_min() + (tc.domain_max() - tc.domain_min()) * i / (nt - 1);
    for (int i = 0; i < nc; ++i)
      cg[i] = cc.domain_min() + (cc.domain_max() - cc.domain_min()) * i / (nc - 1);
    const double lo = vot_min > 0 ? vot_min : 0.1;
    const double hi = vot_max > lo ? vot_max : 100.0;
    VoTSurface surface = vot_surface(sm, alt_idx, time_var, cost_var, tg, cg, lo, hi);
    write_vot_surface(surface, sm.base.seed, sm.base.config_hash, log10_values != 0, path);
  });
}

rumb_status rumb_export_population_vot(const rumb_model* model, const rumb_dataset* ds,
                                       const char* alt, const char* time_var,
                                       const char* cost_var, double vot_min, double vot_max,
                                       int hist_bins, const char* values_path,
                                       const char* hist_path) {
  if (!model || !ds || !alt || !time_var || !cost_var || !values_path || !hist_path)
    return fail(RUMB_ERR_CONFIG, "rumb_export_population_vot: null argument");
  return guarded([&] {
    SmoothedModel sm = model->view();
    const int alt_idx = sm.base.spec.alt_index(alt);
    const double lo = vot_min > 0 ? vot_min : 0.1;
    const double hi = vot_max > lo ? vot_max : 100.0;
    PopulationVot pop = population_vot(sm, ds->ds, alt_idx, time_var, cost_var, lo, hi,
                                       hist_bins > 0 ? hist_bins : 50);
    write_population_vot(pop, sm.base.seed, sm.base.config_hash, values_path, hist_path);
  });
}

rumb_status rumb_export_contour(const rumb_model* model, const char* alt, const char* var1,
                                const char* var2, int n1, int n2, const char* path) {
  if (!model || !alt || !var1 || !var2 || !path)
    return fail(RUMB_ERR_CONFIG, "rumb_export_contour: null argument");
  return guarded([&] {
    const RUMBoostModel& m = model->file.model;
    const int alt_idx = m.spec.alt_index(alt);
    const ParameterEnsemble* target = nullptr;
    for (const auto& ens : m.ensembles)
      if (!ens.is_fe && ens.alt == alt_idx && ens.variables.size() == 2 &&
          ens.variables[0] == var1 && ens.variables[1] == var2)
        target = &ens;
    if (!target)
      throw ConfigError("no 2-variable parameter (" + std::string(var1) + ", " + var2 +
                        ") on alternative " + alt);
    const int g1 = n1 > 1 ? n1 : 50;
    const int g2 = n2 > 1 ? n2 : 50;
    std::vector<double> grid1(g1), grid2(g2);
    for (int i = 0; i < g1; ++i)
      grid1[i] = target->var_min[0] + (target->var_max[0] - target->var_min[0]) * i / (g1 - 1);
    for (int i = 0; i < g2; ++i)
      grid2[i] = target->var_min[1] + (target->var_max[1] - target->var_min[1]) * i / (g2 - 1);
    Matrix grid = contour_table(m, alt_idx, var1, var2, grid1, grid2);
    write_contour(grid, grid1, grid2, m.seed, m.config_hash, path);
  });
}

rumb_status rumb_export_fe_constants(const rumb_model* model, const rumb_dataset* ds,
                                     int hist_bins, const char* values_path,
                                     const char* hist_prefix) {
  if (!model || !ds || !values_path || !hist_prefix)
    return fail(RUMB_ERR_CONFIG, "rumb_export_fe_constants: null argument");
  return guarded([&] {
    const RUMBoostModel& m = model->file.model;
    Matrix constants = individual_constants(m, ds->ds);
    {
      std::ofstream out(values_path, std::ios::binary);
      if (!out) throw DataError("cannot write table: " + std::string(values_path));
      out << artifact_header("fe_constants", m.seed, m.config_hash);
      for (int a = 0; a < m.spec.n_alts(); ++a)
        out << (a ? "," : "") << m.spec.alt_names[a];
      out << "\n";
      for (size_t r = 0; r < constants.rows; ++r) {
        for (size_t c = 0; c < constants.cols; ++c)
          out << (c ? "," : "") << format_double(constants(r, c));
        out << "\n";
      }
    }
    for (int a = 0; a < m.spec.n_alts(); ++a) {
      std::vector<double> col(constants.rows);
      for (size_t r = 0; r < constants.rows; ++r) col[r] = constants(r, a);
      Histogram hist = make_histogram(col, hist_bins > 0 ? hist_bins : 40);
      write_histogram(hist, m.seed, m.config_hash,
                      std::string(hist_prefix) + m.spec.alt_names[a] + ".csv");
    }
  });
}

rumb_status rumb_bootstrap(const rumb_dataset* ds, const rumb_spec* spec,
                           const rumb_train_options* opts, int iterations, const char* out_dir) {
  if (!ds || !spec || !out_dir) return fail(RUMB_ERR_CONFIG, "rumb_bootstrap: null argument");
  return guarded([&] {
    TrainParams params = to_params(opts);
    ModelSpec run_spec = spec_with_overrides(spec->spec, opts);
    BootstrapResult result = bootstrap_utilities(ds->ds, run_spec, params, iterations, params.seed);
    const std::string hash = fnv1a_hex(serialize_spec(run_spec));
    std::filesystem::create_directories(out_dir);
    for (const auto& curves : result.curves) {
      const std::string path = std::string(out_dir) + "/bootstrap_" +
                               run_spec.alt_names[curves.alt] + "_" + curves.variable + ".csv";
      write_bootstrap_curves(curves, params.seed, hash, path);
    }
  });
}

}  // extern "C"
