#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <thread>

namespace rumboost {

namespace {

int resolve_threads(int requested) {
  int cap = std::numeric_limits<int>::max();
  if (const char* env = std::getenv("RUMBOOST_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) cap = v;
  }
  int n = requested > 0 ? requested
                        : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  return std::max(1, std::min(n, cap));
}

std::string params_fingerprint(const TrainParams& p) {
  std::string s;
  s += format_double(p.learning_rate) + "|" + std::to_string(p.num_rounds) + "|" +
       std::to_string(p.early_stopping_rounds) + "|" + std::to_string(p.max_bins) + "|" +
       std::to_string(p.min_data_in_bin) + "|" + std::to_string(p.min_data_in_leaf) + "|" +
       format_double(p.min_sum_hessian_in_leaf) + "|" + format_double(p.min_gain_to_split) + "|" +
       format_double(p.valid_fraction) + "|" + format_double(p.bagging_fraction) + "|" +
       std::to_string(p.bagging_freq) + "|" + format_double(p.feature_fraction) + "|" +
       std::to_string(p.nested_leaf_factor) + "|" + std::to_string(p.seed);
  return s;
}

}  // namespace

double ParameterEnsemble::predict_row(std::span<const double> var_values) const {
  double sum = 0.0;
  for (const Tree& tree : trees) sum += tree.predict_row(var_values);
  return sum;
}

double ParameterEnsemble::value_at_zero() const {
  std::vector<double> zeros(variables.size(), 0.0);
  return predict_row(zeros);
}

int RUMBoostModel::find_ensemble(int alt, const std::string& variable) const {
  for (size_t e = 0; e < ensembles.size(); ++e) {
    const auto& ens = ensembles[e];
    if (ens.alt == alt && !ens.is_fe && ens.variables.size() == 1 && ens.variables[0] == variable)
      return static_cast<int>(e);
  }
  throw ConfigError("no single-variable parameter '" + variable + "' on alternative " +
                    std::to_string(alt));
}

size_t RUMBoostModel::total_trees() const {
  size_t n = 0;
  for (const auto& e : ensembles) n += e.trees.size();
  return n;
}

double StepFunction::eval(double x) const {
  // Pieces are (bp[p-1], bp[p]]; left-continuous at breakpoints.
  size_t p = std::lower_bound(breakpoints.begin(), breakpoints.end(), x) - breakpoints.begin();
  return values[p];
}

namespace {

std::vector<ParameterEnsemble> make_ensembles(const ModelSpec& spec, const ChoiceDataset& ds) {
  std::vector<ParameterEnsemble> out;
  auto observed_range = [&](const std::string& var, double* lo, double* hi) {
    const auto& col = ds.columns[ds.require_column(var)];
    *lo = *std::min_element(col.begin(), col.end());
    *hi = *std::max_element(col.begin(), col.end());
  };
  for (size_t i = 0; i < spec.parameters.size(); ++i) {
    const ParameterSpec& p = spec.parameters[i];
    ParameterEnsemble e;
    e.alt = p.alt;
    e.is_fe = false;
    e.spec_index = static_cast<int>(i);
    e.variables = p.variables;
    e.monotone = p.monotone;
    for (const auto& v : p.variables) {
      double lo, hi;
      observed_range(v, &lo, &hi);
      e.var_min.push_back(lo);
      e.var_max.push_back(hi);
    }
    out.push_back(std::move(e));
  }
  for (size_t i = 0; i < spec.fe_blocks.size(); ++i) {
    const FEBlockSpec& f = spec.fe_blocks[i];
    ParameterEnsemble e;
    e.alt = f.alt;
    e.is_fe = true;
    e.spec_index = static_cast<int>(i);
    e.variables = f.variables;
    e.monotone.assign(f.variables.size(), Monotone::None);
    for (const auto& v : f.variables) {
      double lo, hi;
      observed_range(v, &lo, &hi);
      e.var_min.push_back(lo);
      e.var_max.push_back(hi);
    }
    out.push_back(std::move(e));
  }
  return out;
}

ProbSet head_probset(const Matrix& v, const ModelSpec& spec) {
  return spec.nest ? nested_probset(v, *spec.nest) : mnl_probset(v);
}

struct EnsembleRuntime {
  std::vector<int> train_cols;  // dataset column indices during this run
  TreeParams tree_params;
};

RUMBoostModel train_impl(const ChoiceDataset& ds, const ModelSpec& spec, const TrainParams& params,
                         const ChoiceDataset* valid, std::vector<TrainingLogRow>* log) {
  std::vector<std::string> warnings;
  validate_spec(spec, ds, &warnings);
  const size_t n = ds.n_rows;
  const int j_alts = spec.n_alts();
  const double leaf_factor = static_cast<double>(j_alts - 1) / static_cast<double>(j_alts);
  const double leaf_scale = (spec.nest && !params.nested_leaf_factor) ? 1.0 : leaf_factor;

  RUMBoostModel model;
  model.spec = spec;
  model.seed = params.seed;
  model.config_hash = fnv1a_hex(serialize_spec(spec) + params_fingerprint(params));
  model.ensembles = make_ensembles(spec, ds);
  model.ascs.assign(j_alts, 0.0);

  BinnedDataset binned = bin_features(ds, params.max_bins, params.min_data_in_bin);

  std::vector<EnsembleRuntime> runtime(model.ensembles.size());
  for (size_t e = 0; e < model.ensembles.size(); ++e) {
    auto& ens = model.ensembles[e];
    auto& rt = runtime[e];
    for (const auto& v : ens.variables) rt.train_cols.push_back(ds.require_column(v));
    TreeParams& tp = rt.tree_params;
    tp.columns = rt.train_cols;
    tp.monotone = ens.monotone;
    tp.min_data_in_leaf = params.min_data_in_leaf;
    tp.min_sum_hessian_in_leaf = params.min_sum_hessian_in_leaf;
    tp.min_gain_to_split = params.min_gain_to_split;
    tp.leaf_scale = leaf_scale;
    if (ens.is_fe) {
      const FEBlockSpec& f = spec.fe_blocks[ens.spec_index];
      tp.max_depth = f.max_depth;
      tp.num_leaves = f.num_leaves;
    } else {
      tp.max_depth = spec.parameters[ens.spec_index].max_depth;
      tp.num_leaves = 0;
    }
  }

  // Valid column lookup: train column index -> valid column index.
  std::vector<int> valid_col_of;
  if (valid) {
    valid_col_of.resize(ds.columns.size());
    for (size_t c = 0; c < ds.column_names.size(); ++c)
      valid_col_of[c] = valid->require_column(ds.column_names[c]);
  }

  Matrix v_train(n, j_alts);
  Matrix v_valid(valid ? valid->n_rows : 0, valid ? j_alts : 0);

  std::vector<int32_t> all_rows(n);
  for (size_t r = 0; r < n; ++r) all_rows[r] = static_cast<int32_t>(r);

  Rng rng(params.seed);
  const int n_threads = resolve_threads(params.threads);

  ProbSet probset = head_probset(v_train, spec);
  double best_valid = std::numeric_limits<double>::infinity();
  int best_round = 0;
  int last_round = 0;

  std::vector<int32_t> bag_rows;
  std::vector<BuildResult> candidates(model.ensembles.size());
  std::vector<char> candidate_ok(model.ensembles.size());
  std::vector<TreeParams> fe_round_params(model.ensembles.size());

  for (int round = 1; round <= params.num_rounds; ++round) {
    GradHess gh = grad_hess(probset, ds.choice, model.head());

    // Functional-effect bagging: redraw the row subset every bagging_freq
    // rounds. Parameter ensembles always see every row.
    const bool use_bag = params.bagging_fraction < 1.0 && params.bagging_freq > 0;
    if (use_bag && (round - 1) % params.bagging_freq == 0) {
      const size_t bag_n =
          std::max<size_t>(1, static_cast<size_t>(params.bagging_fraction * static_cast<double>(n)));
      std::vector<int32_t> pool(all_rows);
      rng.shuffle(pool);
      bag_rows.assign(pool.begin(), pool.begin() + bag_n);
      std::sort(bag_rows.begin(), bag_rows.end());
    }

    // Feature sampling for FE candidates is drawn up front on one thread so
    // the run stays deterministic under any thread count.
    for (size_t e = 0; e < model.ensembles.size(); ++e) {
      if (!model.ensembles[e].is_fe) continue;
      fe_round_params[e] = runtime[e].tree_params;
      if (params.feature_fraction < 1.0 && runtime[e].train_cols.size() > 1) {
        const size_t keep = std::max<size_t>(
            1, static_cast<size_t>(std::ceil(params.feature_fraction *
                                             static_cast<double>(runtime[e].train_cols.size()))));
        std::vector<size_t> order(runtime[e].train_cols.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        order.resize(keep);
        std::sort(order.begin(), order.end());
        fe_round_params[e].columns.clear();
        fe_round_params[e].monotone.clear();
        for (size_t i : order) {
          fe_round_params[e].columns.push_back(runtime[e].tree_params.columns[i]);
          fe_round_params[e].monotone.push_back(runtime[e].tree_params.monotone[i]);
        }
      }
    }

    // One candidate tree per ensemble against this round's derivatives.
    std::vector<std::vector<double>> g_by_alt(j_alts), h_by_alt(j_alts);
    for (int a = 0; a < j_alts; ++a) {
      g_by_alt[a].resize(n);
      h_by_alt[a].resize(n);
      for (size_t r = 0; r < n; ++r) {
        g_by_alt[a][r] = gh.g(r, a);
        h_by_alt[a][r] = gh.h(r, a);
      }
    }

    auto build_range = [&](size_t begin, size_t end) {
      for (size_t e = begin; e < end; ++e) {
        const auto& ens = model.ensembles[e];
        const TreeParams& tp = ens.is_fe ? fe_round_params[e] : runtime[e].tree_params;
        std::span<const int32_t> rows =
            (ens.is_fe && use_bag) ? std::span<const int32_t>(bag_rows)
                                   : std::span<const int32_t>(all_rows);
        candidates[e] = build_tree(binned, g_by_alt[ens.alt], h_by_alt[ens.alt], rows, tp);
        candidate_ok[e] = candidates[e].tree.n_splits() > 0 ? 1 : 0;
      }
    };
    if (n_threads <= 1 || model.ensembles.size() <= 1) {
      build_range(0, model.ensembles.size());
    } else {
      const size_t total = model.ensembles.size();
      const size_t per = (total + n_threads - 1) / n_threads;
      std::vector<std::thread> pool;
      for (int t = 0; t < n_threads; ++t) {
        const size_t begin = std::min(total, static_cast<size_t>(t) * per);
        const size_t end = std::min(total, begin + per);
        if (begin < end) pool.emplace_back(build_range, begin, end);
      }
      for (auto& th : pool) th.join();
    }

    // Keep the best candidate per alternative; ties go to the earlier
    // ensemble. An alternative with no splittable candidate adds nothing.
    std::vector<int> chosen(j_alts, -1);
    for (size_t e = 0; e < model.ensembles.size(); ++e) {
      if (!candidate_ok[e]) continue;
      const int a = model.ensembles[e].alt;
      if (chosen[a] < 0 || candidates[e].total_gain > candidates[chosen[a]].total_gain)
        chosen[a] = static_cast<int>(e);
    }

    bool any_accepted = false;
    double round_taylor_delta = 0.0;
    for (int a = 0; a < j_alts; ++a) {
      if (chosen[a] < 0) continue;
      any_accepted = true;
      const size_t e = static_cast<size_t>(chosen[a]);
      Tree tree = std::move(candidates[e].tree);
      tree.scale_values(params.learning_rate);

      // Utility updates before detaching the tree from dataset columns,
      // accumulating per-leaf derivative sums for the objective diagnostic.
      std::vector<GradHessSum> leaf_sums(tree.nodes.size());
      for (size_t r = 0; r < n; ++r) {
        int idx = 0;
        while (!tree.nodes[idx].is_leaf()) {
          const auto& node = tree.nodes[idx];
          idx = binned.bins[node.column][r] <= node.bin_threshold ? node.left : node.right;
        }
        v_train(r, a) += tree.nodes[idx].value;
        leaf_sums[idx].g += gh.g(r, a);
        leaf_sums[idx].h += gh.h(r, a);
      }
      for (size_t i = 0; i < tree.nodes.size(); ++i)
        if (tree.nodes[i].is_leaf()) {
          const double value = tree.nodes[i].value;
          round_taylor_delta += leaf_sums[i].g * value + 0.5 * leaf_sums[i].h * value * value;
        }
      if (valid) {
        for (size_t r = 0; r < valid->n_rows; ++r) {
          int idx = 0;
          while (!tree.nodes[idx].is_leaf()) {
            const auto& node = tree.nodes[idx];
            idx = valid->columns[valid_col_of[node.column]][r] <= node.threshold ? node.left
                                                                                 : node.right;
          }
          v_valid(r, a) += tree.nodes[idx].value;
        }
      }

      // Store with columns rebased onto the ensemble's variable slots.
      std::vector<int> slot_of(ds.columns.size(), -1);
      for (size_t s = 0; s < runtime[e].train_cols.size(); ++s)
        slot_of[runtime[e].train_cols[s]] = static_cast<int>(s);
      tree.remap_columns(slot_of);
      model.ensembles[e].trees.push_back(std::move(tree));
      model.ensembles[e].tree_round.push_back(round);
    }

    if (!any_accepted) break;
    last_round = round;

    probset = head_probset(v_train, spec);
    const double train_ce = cross_entropy(probset.probs, ds.choice);
    double valid_ce = std::numeric_limits<double>::quiet_NaN();
    if (valid) {
      ProbSet vps = head_probset(v_valid, spec);
      valid_ce = cross_entropy(vps.probs, valid->choice);
      if (valid_ce < best_valid) {
        best_valid = valid_ce;
        best_round = round;
      }
    }
    if (log) log->push_back({round, train_ce, valid_ce, round_taylor_delta});

    if (valid && params.early_stopping_rounds > 0 &&
        round - best_round >= params.early_stopping_rounds)
      break;
  }

  if (valid && params.early_stopping_rounds > 0 && best_round > 0) {
    // Roll back to the best validation round.
    for (auto& ens : model.ensembles) {
      size_t keep = 0;
      while (keep < ens.trees.size() && ens.tree_round[keep] <= best_round) ++keep;
      ens.trees.resize(keep);
      ens.tree_round.resize(keep);
    }
    model.trained_rounds = best_round;
  } else {
    model.trained_rounds = last_round;
  }

  extract_asc(model);
  return model;
}

}  // namespace

RUMBoostModel train(const ChoiceDataset& ds, const ModelSpec& spec, const TrainParams& params,
                    const ChoiceDataset* valid, std::vector<TrainingLogRow>* log) {
  if (params.learning_rate <= 0.0) throw ConfigError("train: learning_rate must be positive");
  if (params.num_rounds < 1) throw ConfigError("train: num_rounds must be positive");
  if (params.early_stopping_rounds > 0 && valid == nullptr) {
    auto [train_part, valid_part] = split_train_valid(ds, params.valid_fraction, params.seed);
    return train_impl(train_part, spec, params, &valid_part, log);
  }
  return train_impl(ds, spec, params, valid, log);
}

Matrix predict_utilities(const RUMBoostModel& model, const ChoiceDataset& ds) {
  Matrix v(ds.n_rows, model.spec.n_alts());
  std::vector<double> buffer;
  for (const auto& ens : model.ensembles) {
    if (ens.trees.empty()) continue;
    std::vector<int> cols;
    for (const auto& name : ens.variables) cols.push_back(ds.require_column(name));
    buffer.resize(cols.size());
    for (size_t r = 0; r < ds.n_rows; ++r) {
      for (size_t s = 0; s < cols.size(); ++s) buffer[s] = ds.columns[cols[s]][r];
      v(r, ens.alt) += ens.predict_row(buffer);
    }
  }
  return v;
}

ProbSet predict_probset(const RUMBoostModel& model, const ChoiceDataset& ds) {
  Matrix v = predict_utilities(model, ds);
  return model.spec.nest ? nested_probset(v, *model.spec.nest) : mnl_probset(v);
}

Matrix predict_probs(const RUMBoostModel& model, const ChoiceDataset& ds) {
  return predict_probset(model, ds).probs;
}

double evaluate_ce(const RUMBoostModel& model, const ChoiceDataset& ds) {
  return cross_entropy(predict_probs(model, ds), ds.choice);
}

std::vector<double> extract_asc(RUMBoostModel& model) {
  const int j_alts = model.spec.n_alts();
  std::vector<double> raw(j_alts, 0.0);
  for (const auto& ens : model.ensembles) raw[ens.alt] += ens.value_at_zero();
  model.ascs.assign(j_alts, 0.0);
  for (int a = 0; a < j_alts; ++a) model.ascs[a] = raw[a] - raw[model.spec.reference_alt];
  model.ascs[model.spec.reference_alt] = 0.0;
  return model.ascs;
}

StepFunction utility_curve(const RUMBoostModel& model, int alt, const std::string& variable) {
  for (const auto& ens : model.ensembles)
    if (!ens.is_fe && ens.alt == alt && ens.variables.size() == 2)
      for (const auto& v : ens.variables)
        if (v == variable)
          throw ConfigError("'" + variable + "' belongs to a 2-variable interaction on alternative " +
                            std::to_string(alt) + "; use the contour export instead");
  const int e = model.find_ensemble(alt, variable);
  const ParameterEnsemble& ens = model.ensembles[e];

  StepFunction step;
  step.variable = variable;
  step.domain_min = ens.var_min[0];
  step.domain_max = ens.var_max[0];

  std::set<double> thresholds;
  for (const Tree& tree : ens.trees)
    for (const auto& node : tree.nodes)
      if (!node.is_leaf()) thresholds.insert(node.threshold);
  step.breakpoints.assign(thresholds.begin(), thresholds.end());

  // Piece p covers (bp[p-1], bp[p]]; evaluating the ensemble at the right
  // endpoint (and past the last breakpoint) reproduces predictions exactly.
  for (size_t p = 0; p <= step.breakpoints.size(); ++p) {
    const double x = p < step.breakpoints.size() ? step.breakpoints[p]
                                                 : std::numeric_limits<double>::infinity();
    step.values.push_back(ens.predict_row(std::span<const double>(&x, 1)));
  }
  return step;
}

CVResult cross_validate(const ChoiceDataset& ds, const ModelSpec& spec, const TrainParams& params,
                        const FoldAssignment& folds) {
  if (folds.k < 2) throw ConfigError("cross_validate: need k >= 2");
  if (folds.fold.size() != ds.n_rows) throw DataError("cross_validate: fold assignment mismatch");

  CVResult result;
  for (int f = 0; f < folds.k; ++f) {
    std::vector<size_t> train_rows, valid_rows;
    for (size_t r = 0; r < ds.n_rows; ++r)
      (folds.fold[r] == f ? valid_rows : train_rows).push_back(r);
    if (valid_rows.empty() || train_rows.empty())
      throw DataError("cross_validate: empty fold " + std::to_string(f));

    ChoiceDataset train_ds = subset_rows(ds, train_rows);
    ChoiceDataset valid_ds = subset_rows(ds, valid_rows);
    for (const ChoiceDataset* part : {&train_ds, &valid_ds}) {
      std::set<int> classes(part->choice.begin(), part->choice.end());
      if (classes.size() != ds.n_alts())
        result.warnings.push_back("fold " + std::to_string(f) + ": a class is missing from the " +
                                  (part == &train_ds ? "training" : "validation") + " side");
    }

    RUMBoostModel model = train_impl(train_ds, spec, params, &valid_ds, nullptr);
    result.fold_ce.push_back(evaluate_ce(model, valid_ds));
    result.fold_best_round.push_back(model.trained_rounds);
  }

  double ce = 0.0, rounds = 0.0;
  for (double x : result.fold_ce) ce += x;
  for (int r : result.fold_best_round) rounds += r;
  result.mean_ce = ce / result.fold_ce.size();
  result.mean_best_round = static_cast<int>(std::lround(rounds / result.fold_best_round.size()));
  return result;
}

BootstrapResult bootstrap_utilities(const ChoiceDataset& ds, const ModelSpec& spec,
                                    const TrainParams& params, int iterations, uint64_t seed) {
  if (iterations < 1) throw ConfigError("bootstrap_utilities: iterations must be >= 1");

  std::vector<std::pair<int, std::string>> targets;
  for (const auto& p : spec.parameters)
    if (p.variables.size() == 1) targets.emplace_back(p.alt, p.variables[0]);

  std::vector<std::vector<StepFunction>> all_curves(targets.size());
  for (int t = 0; t < iterations; ++t) {
    ChoiceDataset sample = bootstrap_sample(ds, seed + static_cast<uint64_t>(t));
    TrainParams p = params;
    p.seed = seed + static_cast<uint64_t>(t);
    RUMBoostModel model = train(sample, spec, p, nullptr, nullptr);
    for (size_t i = 0; i < targets.size(); ++i)
      all_curves[i].push_back(utility_curve(model, targets[i].first, targets[i].second));
  }

  BootstrapResult result;
  for (size_t i = 0; i < targets.size(); ++i) {
    BootstrapCurves bc;
    bc.alt = targets[i].first;
    bc.variable = targets[i].second;
    std::set<double> grid;
    for (const auto& step : all_curves[i])
      grid.insert(step.breakpoints.begin(), step.breakpoints.end());
    if (grid.empty()) grid.insert(0.0);
    bc.grid.assign(grid.begin(), grid.end());
    bc.values = Matrix(iterations, bc.grid.size());
    bc.mean.assign(bc.grid.size(), 0.0);
    for (int t = 0; t < iterations; ++t)
      for (size_t p = 0; p < bc.grid.size(); ++p) {
        const double v = all_curves[i][t].eval(bc.grid[p]);
        bc.values(t, p) = v;
        bc.mean[p] += v / iterations;
      }
    result.curves.push_back(std::move(bc));
  }
  return result;
}

Matrix individual_constants(const RUMBoostModel& model, const ChoiceDataset& ds) {
  bool has_fe = false;
  for (const auto& ens : model.ensembles)
    if (ens.is_fe) has_fe = true;
  if (!has_fe) throw ConfigError("individual_constants: model has no functional-effect blocks");

  Matrix constants(ds.n_rows, model.spec.n_alts());
  std::vector<double> buffer;
  for (const auto& ens : model.ensembles) {
    if (!ens.is_fe || ens.trees.empty()) continue;
    std::vector<int> cols;
    for (const auto& name : ens.variables) cols.push_back(ds.require_column(name));
    buffer.resize(cols.size());
    for (size_t r = 0; r < ds.n_rows; ++r) {
      for (size_t s = 0; s < cols.size(); ++s) buffer[s] = ds.columns[cols[s]][r];
      constants(r, ens.alt) += ens.predict_row(buffer);
    }
  }
  return constants;
}

}  // namespace rumboost
