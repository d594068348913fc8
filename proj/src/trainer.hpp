#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prob.hpp"
#include "tree.hpp"

namespace rumboost {

struct TrainParams {
  double learning_rate = 0.1;
  int num_rounds = 1300;
  int early_stopping_rounds = 100;  // 0 disables early stopping
  int max_bins = 255;
  int min_data_in_bin = 3;
  int min_data_in_leaf = 20;
  double min_sum_hessian_in_leaf = 1e-3;
  double min_gain_to_split = 0.0;
  double valid_fraction = 0.2;   // auto holdout when early stopping has no valid set
  double bagging_fraction = 1.0; // functional-effect trees only
  int bagging_freq = 0;
  double feature_fraction = 1.0; // functional-effect trees only
  bool nested_leaf_factor = true;  // keep the (J-1)/J leaf factor under the nested head
  uint64_t seed = 0;
  int threads = 0;  // 0: one per core, capped by RUMBOOST_THREADS
};

/// The trees accumulated for one utility parameter (or functional-effect
/// block) of one alternative.
struct ParameterEnsemble {
  int alt = 0;
  bool is_fe = false;
  int spec_index = 0;  // into ModelSpec::parameters or ::fe_blocks
  std::vector<std::string> variables;
  std::vector<Monotone> monotone;
  std::vector<double> var_min, var_max;  // observed range at training time
  std::vector<Tree> trees;               // node columns index into `variables`
  std::vector<int> tree_round;

  double predict_row(std::span<const double> var_values) const;
  /// Ensemble output at the zero input vector (the raw ASC contribution).
  double value_at_zero() const;
};

struct RUMBoostModel {
  ModelSpec spec;
  std::vector<ParameterEnsemble> ensembles;
  std::vector<double> ascs;  // J values, ascs[reference_alt] == 0
  int trained_rounds = 0;
  uint64_t seed = 0;
  std::string config_hash;

  Head head() const { return spec.nest ? Head::Nested : Head::Mnl; }
  /// Ensemble holding exactly the given variable for the alternative;
  /// throws ConfigError when absent.
  int find_ensemble(int alt, const std::string& variable) const;
  size_t total_trees() const;
};

/// Piecewise-constant utility of a single-variable ensemble: cumulative leaf
/// sums between split thresholds. Pieces are left-continuous, matching the
/// tree convention x <= threshold.
struct StepFunction {
  std::string variable;
  std::vector<double> breakpoints;  // ascending
  std::vector<double> values;       // breakpoints.size() + 1 levels
  double domain_min = 0.0;
  double domain_max = 0.0;

  double eval(double x) const;
};

struct TrainingLogRow {
  int round = 0;
  double train_ce = 0.0;
  double valid_ce = std::numeric_limits<double>::quiet_NaN();
  // Change of the second-order (Taylor) objective from this round's accepted
  // trees, evaluated with the round's gradients; negative when the round
  // improved the quadratic model of the loss.
  double taylor_delta = 0.0;
};

/// RUMBoost-GBUV boosting: each round computes head probabilities and their
/// derivatives once, grows one candidate tree per parameter of every
/// alternative, keeps the best candidate per alternative, and applies all
/// utility updates at the end of the round. Early stopping returns the model
/// at the best validation round. When early stopping is requested without a
/// validation set, a group-aware holdout of `valid_fraction` is carved out of
/// `ds` and the model is fitted on the remainder.
RUMBoostModel train(const ChoiceDataset& ds, const ModelSpec& spec, const TrainParams& params,
                    const ChoiceDataset* valid = nullptr,
                    std::vector<TrainingLogRow>* log = nullptr);

Matrix predict_utilities(const RUMBoostModel& model, const ChoiceDataset& ds);
ProbSet predict_probset(const RUMBoostModel& model, const ChoiceDataset& ds);
Matrix predict_probs(const RUMBoostModel& model, const ChoiceDataset& ds);
double evaluate_ce(const RUMBoostModel& model, const ChoiceDataset& ds);

/// Reads the raw per-alternative constants off the ensembles at the zero
/// input vector, normalises against the reference alternative, and stores
/// them on the model. Predictions are unaffected.
std::vector<double> extract_asc(RUMBoostModel& model);

StepFunction utility_curve(const RUMBoostModel& model, int alt, const std::string& variable);

struct CVResult {
  std::vector<double> fold_ce;
  std::vector<int> fold_best_round;
  std::vector<std::string> warnings;
  double mean_ce = 0.0;
  int mean_best_round = 0;
};

CVResult cross_validate(const ChoiceDataset& ds, const ModelSpec& spec, const TrainParams& params,
                        const FoldAssignment& folds);

struct BootstrapCurves {
  int alt = 0;
  std::string variable;
  std::vector<double> grid;     // union of breakpoints across iterations
  Matrix values;                // iterations x grid points
  std::vector<double> mean;     // pointwise
};

struct BootstrapResult {
  std::vector<BootstrapCurves> curves;
};

/// Trains on `iterations` bootstrap resamples (seed + t) and collects the
/// per-iteration utility curves of every single-variable parameter, plus the
/// pointwise mean on the union breakpoint grid.
BootstrapResult bootstrap_utilities(const ChoiceDataset& ds, const ModelSpec& spec,
                                    const TrainParams& params, int iterations, uint64_t seed);

/// Individual-specific constants from the functional-effect blocks:
/// per row and alternative, the sum of FE ensemble outputs.
Matrix individual_constants(const RUMBoostModel& model, const ChoiceDataset& ds);

}  // namespace rumboost
