#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace rumboost {

enum class Monotone : int8_t { None = 0, Increasing = 1, Decreasing = -1 };

/// One utility parameter: an ensemble over 1 variable (depth-1 trees) or a
/// 2-variable interaction (depth-2 trees), with an optional monotone
/// direction per variable.
struct ParameterSpec {
  int alt = 0;
  std::vector<std::string> variables;
  std::vector<Monotone> monotone;  // parallel to variables
  int max_depth = 1;

  bool operator==(const ParameterSpec&) const = default;
};

/// Functional-effect block: unrestricted interaction over the shared
/// socio-economic set, producing an individual-specific constant per
/// alternative. Width is controlled by num_leaves rather than depth alone.
struct FEBlockSpec {
  int alt = 0;
  std::vector<std::string> variables;
  int max_depth = 3;
  int num_leaves = 31;

  bool operator==(const FEBlockSpec&) const = default;
};

struct NestSpec {
  std::vector<std::vector<int>> nests;  // partition of alternatives
  std::vector<double> mu;               // per nest, >= 1

  int nest_of(int alt) const;
  size_t n_nests() const { return nests.size(); }
  void check(int n_alts) const;  // throws ConfigError on a broken partition

  bool operator==(const NestSpec&) const = default;
};

struct ModelSpec {
  std::vector<std::string> alt_names;
  int reference_alt = 0;
  std::vector<ParameterSpec> parameters;
  std::vector<FEBlockSpec> fe_blocks;
  std::optional<NestSpec> nest;
  bool allow_fe_overlap = false;

  int n_alts() const { return static_cast<int>(alt_names.size()); }
  int alt_index(const std::string& name) const;  // throws ConfigError if unknown

  bool operator==(const ModelSpec&) const = default;
};

ModelSpec parse_spec(const std::string& json_text);
ModelSpec parse_spec_file(const std::string& path);
std::string serialize_spec(const ModelSpec& spec);

/// Checks the spec against a dataset: every referenced column exists,
/// alternative-specific sets are pairwise disjoint, FE blocks draw only from
/// the shared socio-economic set. Returns the spec unchanged on success.
/// Non-fatal issues (monotone direction on a 0/1 dummy) go to `warnings`.
ModelSpec validate_spec(const ModelSpec& spec, const ChoiceDataset& ds,
                        std::vector<std::string>* warnings = nullptr);

/// Nest structure from a CLI-style string: nests separated by ';', members
/// by ','. `mu` is applied to every nest (singletons are unaffected by scale).
NestSpec parse_nest_string(const std::string& text, const std::vector<std::string>& alt_names,
                           double mu);

}  // namespace rumboost
