// Command-line front end over the rumboost shared library.
//
// Subcommands: train, evaluate, smooth, indicators, bootstrap. Exit codes:
// 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rumboost.h"

namespace {

struct DatasetDeleter {
  void operator()(rumb_dataset* p) const { rumb_dataset_free(p); }
};
struct SpecDeleter {
  void operator()(rumb_spec* p) const { rumb_spec_free(p); }
};
struct ModelDeleter {
  void operator()(rumb_model* p) const { rumb_model_free(p); }
};

using DatasetPtr = std::unique_ptr<rumb_dataset, DatasetDeleter>;
using SpecPtr = std::unique_ptr<rumb_spec, SpecDeleter>;
using ModelPtr = std::unique_ptr<rumb_model, ModelDeleter>;

int die(rumb_status status) {
  std::fprintf(stderr, "error: %s\n", rumb_last_error());
  return static_cast<int>(status);
}

#define CHECK_STATUS(call)                   \
  do {                                       \
    rumb_status status_ = (call);            \
    if (status_ != RUMB_OK) return die(status_); \
  } while (0)

struct CommonOpts {
  std::string data_path, schema_path, spec_path, model_path, out_dir;
  std::string group_col, nested, mu_grid, smooth_targets, vot, contour, knot_bounds = "3:8";
  double lr = -1, mu = -1, min_gain = -1;
  int rounds = -1, early_stop = -1, cv = 0, searches = 25, bootstrap_n = 0, grid_n = 100;
  int threads = 0;
  uint64_t seed = 0;
};

rumb_train_options make_options(const CommonOpts& o) {
  rumb_train_options opts;
  rumb_train_options_init(&opts);
  opts.learning_rate = o.lr;
  opts.num_rounds = o.rounds;
  opts.early_stopping_rounds = o.early_stop;
  opts.min_gain_to_split = o.min_gain;
  opts.seed = o.seed;
  opts.threads = o.threads;
  if (!o.nested.empty()) opts.nests = o.nested.c_str();
  opts.mu = o.mu;
  return opts;
}

DatasetPtr load_data(const CommonOpts& o, rumb_status* status) {
  rumb_dataset* ds = nullptr;
  *status = o.group_col.empty()
                ? rumb_dataset_load(o.data_path.c_str(), o.schema_path.c_str(), &ds)
                : rumb_dataset_load_grouped(o.data_path.c_str(), o.schema_path.c_str(),
                                            o.group_col.c_str(), &ds);
  return DatasetPtr(ds);
}

bool parse_pair(const std::string& text, char sep, int* lo, int* hi) {
  const auto pos = text.find(sep);
  if (pos == std::string::npos) return false;
  try {
    *lo = std::stoi(text.substr(0, pos));
    *hi = std::stoi(text.substr(pos + 1));
  } catch (...) {
    return false;
  }
  return true;
}

int cmd_train(const CommonOpts& o) {
  rumb_status status;
  DatasetPtr ds = load_data(o, &status);
  if (!ds) return die(status);
  rumb_spec* spec_raw = nullptr;
  CHECK_STATUS(rumb_spec_load(o.spec_path.c_str(), &spec_raw));
  SpecPtr spec(spec_raw);

  char warnings[4096] = {0};
  CHECK_STATUS(rumb_spec_validate(spec.get(), ds.get(), warnings, sizeof(warnings)));
  if (warnings[0]) std::fprintf(stderr, "warning: %s\n", warnings);

  std::filesystem::create_directories(o.out_dir);
  rumb_train_options opts = make_options(o);

  // A mu grid runs cross-validation per value and keeps the best.
  if (!o.mu_grid.empty()) {
    double lo, hi, step;
    if (std::sscanf(o.mu_grid.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0) {
      std::fprintf(stderr, "error: --mu-grid expects LO:HI:STEP\n");
      return 2;
    }
    const int k = o.cv > 0 ? o.cv : 5;
    double best_ce = 1e300, best_mu = lo;
    for (double mu = lo; mu <= hi + 1e-12; mu += step) {
      opts.mu = mu;
      double ce;
      int best_round;
      CHECK_STATUS(rumb_cross_validate(ds.get(), spec.get(), &opts, k, nullptr, &ce, &best_round));
      std::printf("mu=%.6g cv_ce=%.6f mean_best_round=%d\n", mu, ce, best_round);
      if (ce < best_ce) {
        best_ce = ce;
        best_mu = mu;
      }
    }
    std::printf("best mu=%.6g cv_ce=%.6f\n", best_mu, best_ce);
    opts.mu = best_mu;
  }

  if (o.cv > 0) {
    const std::string table = o.out_dir + "/cv_results.csv";
    double mean_ce;
    int mean_best_round;
    CHECK_STATUS(rumb_cross_validate(ds.get(), spec.get(), &opts, o.cv, table.c_str(), &mean_ce,
                                     &mean_best_round));
    std::printf("cv_ce=%.6f mean_best_round=%d\n", mean_ce, mean_best_round);
    // Refit on the full data with the averaged round count.
    opts.num_rounds = mean_best_round > 0 ? mean_best_round : opts.num_rounds;
    opts.early_stopping_rounds = 0;
  }

  const std::string log_path = o.out_dir + "/training_log.csv";
  rumb_model* model_raw = nullptr;
  CHECK_STATUS(rumb_train(ds.get(), nullptr, spec.get(), &opts, log_path.c_str(), &model_raw));
  ModelPtr model(model_raw);

  const std::string model_path = o.out_dir + "/model.json";
  CHECK_STATUS(rumb_model_save(model.get(), model_path.c_str()));

  size_t n_alts = rumb_dataset_alts(ds.get());
  std::vector<double> ascs(n_alts);
  CHECK_STATUS(rumb_model_ascs(model.get(), ascs.data(), ascs.size()));
  CHECK_STATUS(rumb_export_ascs(model.get(), (o.out_dir + "/ascs.csv").c_str()));
  std::printf("model written to %s\n", model_path.c_str());
  std::printf("ascs:");
  for (double a : ascs) std::printf(" %.6f", a);
  std::printf("\n");

  double train_ce;
  CHECK_STATUS(rumb_evaluate(model.get(), ds.get(), &train_ce));
  std::printf("train_ce=%.6f\n", train_ce);
  return 0;
}

int cmd_evaluate(const CommonOpts& o) {
  rumb_status status;
  DatasetPtr ds = load_data(o, &status);
  if (!ds) return die(status);
  rumb_model* model_raw = nullptr;
  CHECK_STATUS(rumb_model_load(o.model_path.c_str(), &model_raw));
  ModelPtr model(model_raw);
  double ce;
  CHECK_STATUS(rumb_evaluate(model.get(), ds.get(), &ce));
  std::printf("ce=%.10f\n", ce);
  return 0;
}

int cmd_smooth(const CommonOpts& o) {
  rumb_status status;
  DatasetPtr ds = load_data(o, &status);
  if (!ds) return die(status);
  rumb_model* model_raw = nullptr;
  CHECK_STATUS(rumb_model_load(o.model_path.c_str(), &model_raw));
  ModelPtr model(model_raw);

  int lo = 3, hi = 8;
  if (!o.knot_bounds.empty() && !parse_pair(o.knot_bounds, ':', &lo, &hi)) {
    std::fprintf(stderr, "error: --knot-bounds expects LO:HI\n");
    return 2;
  }
  std::filesystem::create_directories(o.out_dir);
  const std::string report = o.out_dir + "/knot_report.csv";
  double bic;
  CHECK_STATUS(rumb_smooth(model.get(), ds.get(),
                           o.smooth_targets.empty() ? nullptr : o.smooth_targets.c_str(), lo, hi,
                           o.searches, o.seed, report.c_str(), &bic));
  const std::string out_model = o.out_dir + "/model_smoothed.json";
  CHECK_STATUS(rumb_model_save(model.get(), out_model.c_str()));
  if (std::isnan(bic)) {
    std::fprintf(stderr, "warning: no smoothable targets; model copied unchanged\n");
  } else {
    std::printf("bic=%.6f\n", bic);
  }
  std::printf("smoothed model written to %s\n", out_model.c_str());
  return 0;
}

int cmd_indicators(const CommonOpts& o) {
  rumb_model* model_raw = nullptr;
  CHECK_STATUS(rumb_model_load(o.model_path.c_str(), &model_raw));
  ModelPtr model(model_raw);
  std::filesystem::create_directories(o.out_dir);

  DatasetPtr ds;
  if (!o.data_path.empty()) {
    rumb_status status;
    ds = load_data(o, &status);
    if (!ds) return die(status);
  }

  if (!o.smooth_targets.empty()) {
    // Reuse the target syntax for curve exports: alt:variable,...
    size_t start = 0;
    const std::string& targets = o.smooth_targets;
    while (start < targets.size()) {
      size_t end = targets.find(',', start);
      if (end == std::string::npos) end = targets.size();
      const std::string item = targets.substr(start, end - start);
      const size_t colon = item.find(':');
      if (colon == std::string::npos) {
        std::fprintf(stderr, "error: curve target '%s' must be alt:variable\n", item.c_str());
        return 2;
      }
      const std::string alt = item.substr(0, colon);
      const std::string var = item.substr(colon + 1);
      const std::string path = o.out_dir + "/curve_" + alt + "_" + var + ".csv";
      CHECK_STATUS(rumb_export_curve(model.get(), alt.c_str(), var.c_str(), o.grid_n, path.c_str()));
      start = end + 1;
    }
  }

  if (!o.vot.empty()) {
    std::string alt, time_var, cost_var;
    {
      auto first = o.vot.find(':');
      auto second = first == std::string::npos ? std::string::npos : o.vot.find(':', first + 1);
      if (second == std::string::npos) {
        std::fprintf(stderr, "error: --vot expects ALT:TIME:COST\n");
        return 2;
      }
      alt = o.vot.substr(0, first);
      time_var = o.vot.substr(first + 1, second - first - 1);
      cost_var = o.vot.substr(second + 1);
    }
    const std::string surface_path = o.out_dir + "/vot_surface_" + alt + ".csv";
    CHECK_STATUS(rumb_export_vot_surface(model.get(), alt.c_str(), time_var.c_str(),
                                         cost_var.c_str(), o.grid_n, o.grid_n, 0.1, 100.0, 0,
                                         surface_path.c_str()));
    if (ds) {
      const std::string values_path = o.out_dir + "/population_vot_" + alt + ".csv";
      const std::string hist_path = o.out_dir + "/population_vot_hist_" + alt + ".csv";
      CHECK_STATUS(rumb_export_population_vot(model.get(), ds.get(), alt.c_str(),
                                              time_var.c_str(), cost_var.c_str(), 0.1, 100.0, 50,
                                              values_path.c_str(), hist_path.c_str()));
    }
  }

  if (!o.contour.empty()) {
    auto first = o.contour.find(':');
    auto second = first == std::string::npos ? std::string::npos : o.contour.find(':', first + 1);
    if (second == std::string::npos) {
      std::fprintf(stderr, "error: --contour expects ALT:VAR1:VAR2\n");
      return 2;
    }
    const std::string alt = o.contour.substr(0, first);
    const std::string v1 = o.contour.substr(first + 1, second - first - 1);
    const std::string v2 = o.contour.substr(second + 1);
    const std::string path = o.out_dir + "/contour_" + alt + "_" + v1 + "_" + v2 + ".csv";
    CHECK_STATUS(
        rumb_export_contour(model.get(), alt.c_str(), v1.c_str(), v2.c_str(), o.grid_n, o.grid_n,
                            path.c_str()));
  }

  if (ds) {
    const std::string fe_values = o.out_dir + "/fe_constants.csv";
    const std::string fe_prefix = o.out_dir + "/fe_hist_";
    // Only meaningful for functional-effect models; ignore the config error
    // for models without FE blocks.
    rumb_status st = rumb_export_fe_constants(model.get(), ds.get(), 40, fe_values.c_str(),
                                              fe_prefix.c_str());
    if (st != RUMB_OK && st != RUMB_ERR_CONFIG) return die(st);
  }
  std::printf("indicator tables written to %s\n", o.out_dir.c_str());
  return 0;
}

int cmd_bootstrap(const CommonOpts& o) {
  rumb_status status;
  DatasetPtr ds = load_data(o, &status);
  if (!ds) return die(status);
  rumb_spec* spec_raw = nullptr;
  CHECK_STATUS(rumb_spec_load(o.spec_path.c_str(), &spec_raw));
  SpecPtr spec(spec_raw);
  rumb_train_options opts = make_options(o);
  std::filesystem::create_directories(o.out_dir);
  CHECK_STATUS(rumb_bootstrap(ds.get(), spec.get(), &opts,
                              o.bootstrap_n > 0 ? o.bootstrap_n : 100, o.out_dir.c_str()));
  std::printf("bootstrap tables written to %s\n", o.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rumboost: gradient boosted random utility models"};
  app.require_subcommand(1);

  CommonOpts o;

  auto add_data_flags = [&](CLI::App* cmd, bool required) {
    cmd->add_option("--data", o.data_path, "delimited data file")->required(required);
    cmd->add_option("--schema", o.schema_path, "dataset schema (JSON)")->required(required);
    cmd->add_option("--group", o.group_col, "group column override for folds");
  };
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", o.out_dir, "output directory")->required();
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--threads", o.threads, "worker threads (env RUMBOOST_THREADS caps)");
  };

  CLI::App* train = app.add_subcommand("train", "fit a model");
  add_data_flags(train, true);
  add_common(train);
  train->add_option("--spec", o.spec_path, "model specification (JSON)")->required();
  train->add_option("--rounds", o.rounds, "boosting rounds cap");
  train->add_option("--lr", o.lr, "learning rate");
  train->add_option("--early-stop", o.early_stop, "early stopping patience (0 disables)");
  train->add_option("--min-gain", o.min_gain, "minimum split gain");
  train->add_option("--cv", o.cv, "grouped k-fold cross-validation before the final fit");
  train->add_option("--nested", o.nested, "nest structure, e.g. \"walk;cycle;pt,drive\"");
  train->add_option("--mu", o.mu, "nest scale parameter");
  train->add_option("--mu-grid", o.mu_grid, "LO:HI:STEP grid search for mu (uses CV)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "loss on a dataset");
  add_data_flags(evaluate, true);
  evaluate->add_option("--model", o.model_path, "model file")->required();

  CLI::App* smooth = app.add_subcommand("smooth", "fit monotone cubic splines");
  add_data_flags(smooth, true);
  add_common(smooth);
  smooth->add_option("--model", o.model_path, "model file")->required();
  smooth->add_option("--smooth-targets", o.smooth_targets,
                     "alt:variable list (default: all 1-variable parameters)");
  smooth->add_option("--knot-bounds", o.knot_bounds, "knot count bounds LO:HI");
  smooth->add_option("--searches", o.searches, "knot-count search iterations");

  CLI::App* indicators = app.add_subcommand("indicators", "export behavioural tables");
  add_data_flags(indicators, false);
  add_common(indicators);
  indicators->add_option("--model", o.model_path, "model file")->required();
  indicators->add_option("--curves", o.smooth_targets, "alt:variable curve exports");
  indicators->add_option("--vot", o.vot, "VoT surface/population: ALT:TIME:COST");
  indicators->add_option("--contour", o.contour, "interaction contour: ALT:VAR1:VAR2");
  indicators->add_option("--grid", o.grid_n, "grid points per axis");

  CLI::App* bootstrap = app.add_subcommand("bootstrap", "utility curve bands");
  add_data_flags(bootstrap, true);
  add_common(bootstrap);
  bootstrap->add_option("--spec", o.spec_path, "model specification (JSON)")->required();
  bootstrap->add_option("--bootstrap", o.bootstrap_n, "bootstrap iterations")->required();
  bootstrap->add_option("--rounds", o.rounds, "boosting rounds cap");
  bootstrap->add_option("--lr", o.lr, "learning rate");
  bootstrap->add_option("--early-stop", o.early_stop, "early stopping patience");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // flag/usage problems are config errors
  }

  if (train->parsed()) return cmd_train(o);
  if (evaluate->parsed()) return cmd_evaluate(o);
  if (smooth->parsed()) return cmd_smooth(o);
  if (indicators->parsed()) return cmd_indicators(o);
  if (bootstrap->parsed()) return cmd_bootstrap(o);
  return 2;
}
