// Acceptance suite: each criterion prints one PASS/FAIL line (SKIP for the
// dataset-gated benchmark reproduction) and the process exits nonzero if any
// criterion fails. Tolerances are fixed here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "export.hpp"
#include "indicators.hpp"
#include "model_io.hpp"
#include "oracle_tree.hpp"
#include "synthetic.hpp"

using namespace rumboost;
using namespace rumboost::testing;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  if (!pass) ++g_failures;
}

void report_skip(int criterion, const std::string& detail) {
  std::printf("SKIP criterion %d: %s\n", criterion, detail.c_str());
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic gradients/hessians vs high-order finite differences.
// The loss is re-implemented here in extended precision, independent of the
// library's probability code.

long double fd_loss(const std::vector<long double>& v, int chosen, const NestSpec* nest) {
  if (!nest) {
    long double vmax = v[0];
    for (long double x : v) vmax = std::max(vmax, x);
    long double denom = 0.0L;
    for (long double x : v) denom += expl(x - vmax);
    return -(v[chosen] - vmax - logl(denom));
  }
  // Two-level formula: P(i) = P(i|m) P(m).
  const size_t m_count = nest->n_nests();
  std::vector<long double> logsum(m_count);
  long double within = 0.0L;
  int chosen_nest = nest->nest_of(chosen);
  for (size_t m = 0; m < m_count; ++m) {
    const long double mu = nest->mu[m];
    long double s = 0.0L;
    for (int a : nest->nests[m]) s += expl(mu * v[a]);
    logsum[m] = logl(s) / mu;
    if (static_cast<int>(m) == chosen_nest)
      within = mu * v[chosen] - logl(s);
  }
  long double denom = 0.0L;
  for (size_t m = 0; m < m_count; ++m) denom += expl(logsum[m]);
  const long double log_pm = logsum[chosen_nest] - logl(denom);
  return -(within + log_pm);
}

bool criterion_grad_hess() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(1001);
  double worst_g = 0.0, worst_h = 0.0;
  const double mus[4] = {1.0, 1.2, 1.5, 2.0};

  for (int instance = 0; instance < 200; ++instance) {
    const int j = 2 + static_cast<int>(rng.below(4));
    const size_t n = 50;
    Matrix v(n, j);
    for (auto& x : v.data) x = rng.real() * 3.0 - 1.5;
    std::vector<int> choice(n);
    for (auto& c : choice) c = static_cast<int>(rng.below(j));

    const bool use_nest = instance % 2 == 1 && j >= 3;
    NestSpec nest;
    if (use_nest) {
      const int n_nests = 2 + static_cast<int>(rng.below(std::min(2, j - 1)));
      nest.nests.assign(n_nests, {});
      for (int a = 0; a < j; ++a)
        nest.nests[a < n_nests ? a : rng.below(n_nests)].push_back(a);
      for (int m = 0; m < n_nests; ++m) nest.mu.push_back(mus[rng.below(4)]);
    }

    ProbSet ps = use_nest ? nested_probset(v, nest) : mnl_probset(v);
    GradHess gh = grad_hess(ps, choice, use_nest ? Head::Nested : Head::Mnl);

    for (size_t r = 0; r < n; ++r) {
      std::vector<long double> row(j);
      for (int a = 0; a < j; ++a) row[a] = v(r, a);
      const NestSpec* np = use_nest ? &nest : nullptr;
      for (int a = 0; a < j; ++a) {
        auto at = [&](long double dx) {
          std::vector<long double> shifted(row);
          shifted[a] += dx;
          return fd_loss(shifted, choice[r], np);
        };
        // 4th-order central stencils in long double.
        const long double eg = 1e-4L;
        const long double fd_g =
            (-at(2 * eg) + 8 * at(eg) - 8 * at(-eg) + at(-2 * eg)) / (12 * eg);
        const long double eh = 1e-3L;
        const long double fd_h =
            (-at(2 * eh) + 16 * at(eh) - 30 * at(0) + 16 * at(-eh) - at(-2 * eh)) /
            (12 * eh * eh);
        const double rg = std::abs(gh.g(r, a) - static_cast<double>(fd_g)) /
                          std::max({std::abs(gh.g(r, a)), std::abs(static_cast<double>(fd_g)),
                                    1e-9});
        const double rh = std::abs(gh.h(r, a) - static_cast<double>(fd_h)) /
                          std::max({std::abs(gh.h(r, a)), std::abs(static_cast<double>(fd_h)),
                                    1e-9});
        worst_g = std::max(worst_g, rg);
        worst_h = std::max(worst_h, rh);
      }
    }
  }
  const double elapsed = seconds_since(start);
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "gradient/hessian oracle: worst rel err g=%.3g h=%.3g (tol 1e-5), %.1fs",
                worst_g, worst_h, elapsed);
  report(1, worst_g <= 1e-5 && worst_h <= 1e-5 && elapsed < 10.0, detail);
  return true;
}

// ---------------------------------------------------------------------------
// Criterion 2: split decisions vs exhaustive enumeration.

bool criterion_split_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(2002);
  int verified_splits = 0;
  bool all_ok = true;

  for (int instance = 0; instance < 500; ++instance) {
    const size_t n = 20 + rng.below(181);
    const int n_cols = 1 + static_cast<int>(rng.below(3));
    ChoiceDataset ds;
    ds.alt_names = {"a", "b"};
    ds.n_rows = n;
    for (int c = 0; c < n_cols; ++c) {
      ds.column_names.push_back("c" + std::to_string(c));
      std::vector<double> col(n);
      for (auto& x : col) x = std::floor(rng.real() * 16);
      ds.columns.push_back(std::move(col));
    }
    ds.choice.assign(n, 0);
    ds.choice[0] = 1;
    BinnedDataset binned = bin_features(ds, 16, 1);

    std::vector<double> g(n), h(n);
    for (size_t r = 0; r < n; ++r) {
      g[r] = rng.real() * 2 - 1;
      h[r] = rng.real() * 0.5 + 0.02;
    }

    TreeParams params;
    params.max_depth = 1 + static_cast<int>(rng.below(2));
    params.min_data_in_leaf = 1 + static_cast<int>(rng.below(8));
    params.min_sum_hessian_in_leaf = 1e-3;
    params.leaf_scale = 0.75;
    for (int c = 0; c < n_cols; ++c) {
      params.columns.push_back(c);
      const uint64_t dir = rng.below(3);
      params.monotone.push_back(dir == 0 ? Monotone::None
                                         : (dir == 1 ? Monotone::Increasing
                                                     : Monotone::Decreasing));
    }
    std::vector<int32_t> rows(n);
    for (size_t r = 0; r < n; ++r) rows[r] = static_cast<int32_t>(r);
    BuildResult result = build_tree(binned, g, h, rows, params);

    OracleParams oracle;
    oracle.columns = params.columns;
    oracle.monotone = params.monotone;
    oracle.max_depth = params.max_depth;
    oracle.min_data_in_leaf = params.min_data_in_leaf;
    oracle.min_sum_hessian_in_leaf = params.min_sum_hessian_in_leaf;
    oracle.leaf_scale = params.leaf_scale;

    // Inline oracle walk (no doctest in this binary): verify every split and
    // every leaf decision exactly.
    struct Frame {
      int node;
      std::vector<int32_t> rows;
      int depth;
      double lo, hi;
      GradHessSum sum;  // propagated exactly as the learner does
    };
    GradHessSum root_sum;
    for (int32_t r : rows) {
      root_sum.g += g[r];
      root_sum.h += h[r];
    }
    std::vector<Frame> stack;
    stack.push_back({0, rows, 0, -std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::infinity(), root_sum});
    while (!stack.empty() && all_ok) {
      Frame frame = std::move(stack.back());
      stack.pop_back();
      const GradHessSum parent = frame.sum;
      const Tree::Node& node = result.tree.nodes[frame.node];
      OracleSplit best;
      if (frame.depth < oracle.max_depth)
        best = oracle_best_split(binned, g, h, frame.rows, oracle, parent, frame.lo, frame.hi);
      if (node.is_leaf()) {
        if (best.found) all_ok = false;
        if (node.value != oracle_output(parent, oracle.leaf_scale, frame.lo, frame.hi))
          all_ok = false;
        continue;
      }
      ++verified_splits;
      if (!best.found || node.column != best.column || node.bin_threshold != best.boundary) {
        all_ok = false;
        break;
      }
      const double learner_gain =
          0.5 * (best.left.g * best.left.g / best.left.h +
                 best.right.g * best.right.g / best.right.h - parent.g * parent.g / parent.h);
      if (learner_gain != best.gain) {
        all_ok = false;
        break;
      }
      std::vector<int32_t> left_rows, right_rows;
      for (int32_t r : frame.rows)
        (binned.bins[best.column][r] <= best.boundary ? left_rows : right_rows).push_back(r);
      double llo = frame.lo, lhi = frame.hi, rlo = frame.lo, rhi = frame.hi;
      Monotone dir = Monotone::None;
      for (size_t ci = 0; ci < oracle.columns.size(); ++ci)
        if (oracle.columns[ci] == best.column) dir = oracle.monotone[ci];
      if (dir != Monotone::None) {
        const double mid = (best.left_value + best.right_value) / 2.0;
        if (dir == Monotone::Increasing) {
          lhi = std::min(lhi, mid);
          rlo = std::max(rlo, mid);
        } else {
          llo = std::max(llo, mid);
          rhi = std::min(rhi, mid);
        }
      }
      stack.push_back({node.left, std::move(left_rows), frame.depth + 1, llo, lhi, best.left});
      stack.push_back({node.right, std::move(right_rows), frame.depth + 1, rlo, rhi, best.right});
    }
    if (!all_ok) break;
  }
  const double elapsed = seconds_since(start);
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "split oracle: 500 instances, %d splits verified exactly, %.1fs",
                verified_splits, elapsed);
  report(2, all_ok && verified_splits > 100 && elapsed < 30.0, detail);
  return true;
}

// ---------------------------------------------------------------------------
// Shared training runs for criteria 3, 4, 6, 7, 10.

struct TrainedSynthetic {
  SyntheticData data;
  RUMBoostModel model;
  double holdout_ce = 0.0;
};

TrainedSynthetic train_synthetic() {
  TrainedSynthetic ts;
  ts.data = make_step_mnl(10000, 4000, 4001);
  TrainParams params;  // defaults: lr 0.1, depth 1, 1300 rounds, stop 100
  params.seed = 4001;
  // Early stopping on an internal group-aware split; the holdout is only
  // ever used for evaluation.
  ts.model = train(ts.data.train, step_mnl_spec(true), params);
  ts.holdout_ce = evaluate_ce(ts.model, ts.data.holdout);
  return ts;
}

bool criterion_monotone_soundness(const TrainedSynthetic& ts) {
  bool ok = true;
  std::string detail = "monotone soundness + purity:";
  // Exact breakpoint scan on every constrained ensemble.
  int violations = 0;
  for (int a = 0; a < 3; ++a) {
    StepFunction curve = utility_curve(ts.model, a, "x" + std::to_string(a));
    for (size_t i = 1; i < curve.values.size(); ++i)
      if (curve.values[i] > curve.values[i - 1]) ++violations;
  }
  ok = ok && violations == 0;
  detail += " 0 expected violations, got " + std::to_string(violations) + ";";

  // Purity: perturbing x1 leaves V_0 and V_2 exactly unchanged.
  ChoiceDataset probe = ts.data.holdout;
  Matrix before = predict_utilities(ts.model, probe);
  for (auto& x : probe.columns[1]) x += 0.123;
  Matrix after = predict_utilities(ts.model, probe);
  bool pure = true;
  bool moved = false;
  for (size_t r = 0; r < probe.n_rows; ++r) {
    if (after(r, 0) != before(r, 0) || after(r, 2) != before(r, 2)) pure = false;
    if (after(r, 1) != before(r, 1)) moved = true;
  }
  ok = ok && pure && moved;
  detail += pure ? " purity exact" : " purity violated";
  report(3, ok, detail);
  return ok;
}

bool criterion_recovery(const TrainedSynthetic& ts, double train_seconds) {
  double worst_mae = 0.0;
  for (int a = 0; a < 3; ++a) {
    StepFunction curve = utility_curve(ts.model, a, "x" + std::to_string(a));
    // Data-weighted comparison on training draws; every true region holds
    // 20% of the mass so all qualify for the >= 1% rule.
    const auto& xs = ts.data.train.columns[a];
    double offset = 0.0;
    for (double x : xs) offset += (curve.eval(x) - ts.data.true_utilities[a].eval(x));
    offset /= static_cast<double>(xs.size());
    double mae = 0.0;
    for (double x : xs)
      mae += std::abs(curve.eval(x) - ts.data.true_utilities[a].eval(x) - offset);
    mae /= static_cast<double>(xs.size());
    worst_mae = std::max(worst_mae, mae);
  }
  const double ce_gap = ts.holdout_ce - ts.data.bayes_ce_holdout;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "synthetic recovery: worst curve MAE %.4f (tol 0.15), holdout CE %.4f vs Bayes "
                "%.4f (gap %.4f, tol 0.02), train %.0fs (limit 120)",
                worst_mae, ts.holdout_ce, ts.data.bayes_ce_holdout, ce_gap, train_seconds);
  report(4, worst_mae <= 0.15 && std::abs(ce_gap) <= 0.02 && train_seconds < 120.0, detail);
  return true;
}

// ---------------------------------------------------------------------------
// Criterion 5: nested head degeneracy and advantage on nest-correlated data.

bool criterion_nested() {
  // Degeneracy at mu = 1 on random rows.
  Rng rng(5005);
  Matrix v(1000, 3);
  for (auto& x : v.data) x = rng.real() * 6 - 3;
  NestSpec nest;
  nest.nests = {{0}, {1, 2}};
  nest.mu = {1.0, 1.0};
  Matrix soft = softmax_probs(v);
  Matrix nested = nested_probs(v, nest);
  double worst = 0.0;
  for (size_t i = 0; i < v.data.size(); ++i)
    worst = std::max(worst, std::abs(soft.data[i] - nested.data[i]));

  // Advantage of the correct nested head on nested-simulated choices.
  NestedSynthetic data = make_nested(12000, 6000, 2.0, 5050);
  TrainParams params;
  params.num_rounds = 500;
  params.early_stopping_rounds = 50;
  params.seed = 5050;
  RUMBoostModel mnl_model = train(data.train, nested_spec(2.0, false), params);
  RUMBoostModel nested_model = train(data.train, nested_spec(2.0, true), params);
  const double mnl_ce = evaluate_ce(mnl_model, data.holdout);
  const double nested_ce = evaluate_ce(nested_model, data.holdout);

  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "nested: mu=1 max prob diff %.2e (tol 1e-12); holdout CE nested %.4f vs mnl %.4f "
                "(need <= mnl - 0.005, bayes %.4f)",
                worst, nested_ce, mnl_ce, data.bayes_ce_holdout);
  report(5, worst <= 1e-12 && nested_ce <= mnl_ce - 0.005, detail);
  return true;
}

// ---------------------------------------------------------------------------
// Criterion 6: PCUF properties on the criterion-4 model.

bool criterion_pcuf(const TrainedSynthetic& ts) {
  std::vector<std::pair<int, std::string>> targets{{0, "x0"}, {1, "x1"}, {2, "x2"}};
  SmoothParams params;
  params.n_searches = 8;
  params.seed = 6006;
  SmoothReport rep;
  SmoothedModel sm = optimize_knot_counts(ts.model, ts.data.train, targets, params, &rep);

  double knot_err = 0.0;
  double mono_violation = 0.0;
  for (const auto& ov : sm.overrides) {
    const SplineCurve& c = ov.curve;
    for (size_t q = 0; q < c.knots.size(); ++q)
      knot_err = std::max(knot_err, std::abs(c.eval(c.knots[q]) - c.values[q]));
    for (int i = 0; i <= 10000; ++i) {
      const double x = c.domain_min() + (c.domain_max() - c.domain_min()) * i / 10000.0;
      mono_violation = std::max(mono_violation, c.deriv(x));  // must stay <= 0
    }
  }

  const double smooth_ce = smoothed_evaluate_ce(sm, ts.data.holdout);
  const double ce_shift = std::abs(smooth_ce - ts.holdout_ce);

  bool bic_improves = true;
  for (const auto& row : rep.trace)
    if (row.accepted && row.bic > row.init_bic) bic_improves = false;

  char detail[320];
  std::snprintf(detail, sizeof(detail),
                "pcuf: knot interpolation err %.2e (tol 1e-12), max derivative %.2e (tol 1e-12), "
                "smoothed holdout CE %.4f vs %.4f (shift %.4f, tol 0.01), optimized BIC <= init "
                "in all accepted searches: %s",
                knot_err, mono_violation, smooth_ce, ts.holdout_ce, ce_shift,
                bic_improves ? "yes" : "no");
  report(6, knot_err <= 1e-12 && mono_violation <= 1e-12 && ce_shift <= 0.01 && bic_improves,
         detail);
  return true;
}

bool criterion_asc(const TrainedSynthetic& ts) {
  RUMBoostModel model = ts.model;
  Matrix before = predict_probs(model, ts.data.holdout);
  std::vector<double> ascs = extract_asc(model);
  Matrix after = predict_probs(model, ts.data.holdout);
  double worst = 0.0;
  for (size_t i = 0; i < before.data.size(); ++i)
    worst = std::max(worst, std::abs(before.data[i] - after.data[i]));
  const bool ref_zero = ascs[model.spec.reference_alt] == 0.0;
  char detail[192];
  std::snprintf(detail, sizeof(detail),
                "asc: reference asc %s zero, max prob shift %.2e (tol 1e-12)",
                ref_zero ? "exactly" : "NOT", worst);
  report(7, ref_zero && worst <= 1e-12, detail);
  return true;
}

// ---------------------------------------------------------------------------
// Criterion 8: VoT with hand-constructed linear splines.

bool criterion_vot() {
  const double beta_t = 4.2, beta_c = 0.6;  // ratio 7, inside the caps
  SmoothedModel sm;
  sm.base.spec = parse_spec(R"({
    "alternatives": ["a", "b"],
    "parameters": [
      {"alt": "a", "variables": ["t"]},
      {"alt": "a", "variables": ["c"]},
      {"alt": "b", "variables": ["z"]}
    ]
  })");
  sm.base.ascs = {0.0, 0.0};
  const char* vars[3] = {"t", "c", "z"};
  for (int i = 0; i < 3; ++i) {
    ParameterEnsemble ens;
    ens.alt = i < 2 ? 0 : 1;
    ens.spec_index = i;
    ens.variables = {vars[i]};
    ens.monotone = {Monotone::None};
    ens.var_min = {0.0};
    ens.var_max = {i == 1 ? 6.0 : 2.0};
    sm.base.ensembles.push_back(ens);
  }
  auto linear = [](const char* name, double lo, double hi, double slope) {
    SplineCurve c;
    c.variable = name;
    c.knots = {lo, hi};
    c.values = {0.0, slope * (hi - lo)};
    c.derivs = fritsch_carlson(c.knots, c.values);
    return c;
  };
  sm.overrides.push_back({0, linear("t", 0.0, 2.0, -beta_t)});
  sm.overrides.push_back({1, linear("c", 0.0, 6.0, -beta_c)});

  std::vector<double> tg, cg;
  for (int i = 0; i <= 40; ++i) tg.push_back(2.0 * i / 40);
  for (int i = 0; i <= 40; ++i) cg.push_back(6.0 * i / 40);
  VoTSurface surface = vot_surface(sm, 0, "t", "c", tg, cg);
  double worst_cell = 0.0;
  size_t unmasked = 0;
  for (size_t t = 0; t < tg.size(); ++t)
    for (size_t c = 0; c < cg.size(); ++c)
      if (!surface.masked(t, c)) {
        ++unmasked;
        worst_cell = std::max(worst_cell, std::abs(surface.vot(t, c) - beta_t / beta_c));
      }

  // Population lookups equal the surface formula.
  ChoiceDataset ds;
  ds.alt_names = {"a", "b"};
  ds.column_names = {"t", "c", "z"};
  ds.columns.resize(3);
  Rng rng(8008);
  ds.n_rows = 3000;
  for (size_t r = 0; r < ds.n_rows; ++r) {
    ds.columns[0].push_back(rng.real() * 2.0);
    ds.columns[1].push_back(rng.real() * 6.0);
    ds.columns[2].push_back(rng.real());
    ds.choice.push_back(static_cast<int>(rng.below(2)));
  }
  PopulationVot pop = population_vot(sm, ds, 0, "t", "c");
  double worst_pop = 0.0;
  for (double vot : pop.values) worst_pop = std::max(worst_pop, std::abs(vot - beta_t / beta_c));

  char detail[224];
  std::snprintf(detail, sizeof(detail),
                "vot: %zu unmasked cells, worst |cell - beta_t/beta_c| %.2e, worst population "
                "deviation %.2e (tol 1e-12)",
                unmasked, worst_cell, worst_pop);
  report(8, unmasked > 1000 && worst_cell <= 1e-12 && worst_pop <= 1e-12 && !pop.values.empty(),
         detail);
  return true;
}

// ---------------------------------------------------------------------------
// Criterion 9: benchmark reproduction, gated on the public LPMC dataset.

bool criterion_lpmc();

// ---------------------------------------------------------------------------
// Criterion 10: determinism.

bool criterion_determinism(const TrainedSynthetic& ts) {
  TrainParams params;
  params.num_rounds = 120;
  params.early_stopping_rounds = 30;
  params.seed = 10010;
  SyntheticData data = make_step_mnl(3000, 800, 999);
  ModelSpec spec = step_mnl_spec(true);
  RUMBoostModel a = train(data.train, spec, params);
  RUMBoostModel b = train(data.train, spec, params);
  const bool byte_identical = serialize_model({a, {}, 0}) == serialize_model({b, {}, 0});

  const auto path = std::filesystem::temp_directory_path() / "acceptance_model.json";
  save_model({ts.model, {}, 0}, path.string());
  ModelFile loaded = load_model(path.string());
  const double reload_ce = evaluate_ce(loaded.model, ts.data.holdout);
  const double drift = std::abs(reload_ce - ts.holdout_ce);

  char detail[192];
  std::snprintf(detail, sizeof(detail),
                "determinism: same-seed model files byte-identical: %s; save/load CE drift %.2e "
                "(tol 1e-15)",
                byte_identical ? "yes" : "no", drift);
  report(10, byte_identical && drift <= 1e-15, detail);
  return true;
}

// ---------------------------------------------------------------------------

bool criterion_lpmc() {
  const char* env = std::getenv("RUMBOOST_LPMC_DIR");
  std::filesystem::path dir = env ? std::filesystem::path(env) : std::filesystem::path("data/lpmc");
  const auto train_path = dir / "train.csv";
  const auto test_path = dir / "test.csv";
  if (!std::filesystem::exists(train_path) || !std::filesystem::exists(test_path)) {
    report_skip(9, "LPMC dataset not found (set RUMBOOST_LPMC_DIR to a directory holding "
                   "train.csv and test.csv)");
    return true;
  }

  const std::filesystem::path config_dir = std::filesystem::path(LPMC_CONFIG_DIR);
  DatasetSchema schema = DatasetSchema::parse_file((config_dir / "schema.json").string());
  ChoiceDataset train_ds = load_dataset(train_path.string(), schema);
  ChoiceDataset test_ds = load_dataset(test_path.string(), schema);
  ModelSpec spec = parse_spec_file((config_dir / "spec.json").string());
  validate_spec(spec, train_ds);

  TrainParams params;  // §-defaults: lr 0.1, 1300 rounds, early stopping 100
  params.seed = 2024;

  bool ok = true;
  std::string detail = "lpmc:";

  // Holdout fit with an internal validation split for early stopping.
  const auto t0 = std::chrono::steady_clock::now();
  RUMBoostModel model = train(train_ds, spec, params);
  const double holdout = evaluate_ce(model, test_ds);
  detail += " gbuv holdout " + format_double(holdout) + " (0.6737 +- 0.010);";
  ok = ok && std::abs(holdout - 0.6737) <= 0.010;

  // 5-fold CV.
  FoldAssignment folds = grouped_kfold(train_ds, 5, params.seed);
  CVResult cv = cross_validate(train_ds, spec, params, folds);
  detail += " cv " + format_double(cv.mean_ce) + " (0.6570 +- 0.010);";
  ok = ok && std::abs(cv.mean_ce - 0.6570) <= 0.010;
  const double fold_seconds = seconds_since(t0) / (5 + 1);
  detail += " ~" + format_double(fold_seconds) + "s/fold;";

  // Nested head with mu = 1.167 on the motorised nest.
  ModelSpec nested = spec;
  nested.nest = parse_nest_string("walk;cycle;pt,drive", spec.alt_names, 1.167);
  RUMBoostModel nested_model = train(train_ds, nested, params);
  const double nested_ce = evaluate_ce(nested_model, test_ds);
  detail += " nested " + format_double(nested_ce) + " (0.6731 +- 0.010);";
  ok = ok && std::abs(nested_ce - 0.6731) <= 0.010;

  // Functional-effect configuration.
  ModelSpec fe = parse_spec_file((config_dir / "spec_fe.json").string());
  validate_spec(fe, train_ds);
  TrainParams fe_params = params;
  fe_params.bagging_fraction = 0.7;
  fe_params.bagging_freq = 10;
  fe_params.feature_fraction = 0.867;
  RUMBoostModel fe_model = train(train_ds, fe, fe_params);
  const double fe_ce = evaluate_ce(fe_model, test_ds);
  detail += " fe " + format_double(fe_ce) + " (0.6626 +- 0.015);";
  ok = ok && std::abs(fe_ce - 0.6626) <= 0.015;

  // PCUF smoothing of the single-variable parameters.
  std::vector<std::pair<int, std::string>> targets;
  for (const auto& ens : model.ensembles)
    if (!ens.is_fe && ens.variables.size() == 1 && !ens.trees.empty())
      targets.emplace_back(ens.alt, ens.variables[0]);
  SmoothParams sp;
  sp.n_searches = 25;
  sp.seed = params.seed;
  SmoothedModel sm = optimize_knot_counts(model, train_ds, targets, sp);
  const double pcuf_ce = smoothed_evaluate_ce(sm, test_ds);
  detail += " pcuf " + format_double(pcuf_ce) + " (0.6730 +- 0.010)";
  ok = ok && std::abs(pcuf_ce - 0.6730) <= 0.010;

  report(9, ok, detail);
  return true;
}

}  // namespace

int main() {
  std::printf("rumboost acceptance suite\n");

  criterion_grad_hess();
  criterion_split_oracle();

  const auto t0 = std::chrono::steady_clock::now();
  TrainedSynthetic ts = train_synthetic();
  const double train_seconds = seconds_since(t0);

  criterion_monotone_soundness(ts);
  criterion_recovery(ts, train_seconds);
  criterion_nested();
  criterion_pcuf(ts);
  criterion_asc(ts);
  criterion_vot();
  criterion_lpmc();
  criterion_determinism(ts);

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
