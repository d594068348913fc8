#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"

namespace rumboost {

/// How to read a delimited choice file: which column holds the chosen
/// alternative, which (if any) groups rows for fold construction, and which
/// columns are categorical and need dummy expansion.
struct CategoricalColumn {
  std::string column;
  std::string reference;  // level dropped during expansion

  bool operator==(const CategoricalColumn&) const = default;
};

struct DatasetSchema {
  std::vector<std::string> alternatives;
  std::string choice_column;
  int choice_base = 0;  // 1 when the file stores 1-based alternative indices
  std::string group_column;
  char delimiter = ',';
  std::vector<CategoricalColumn> categorical;
  std::vector<std::string> drop;

  static DatasetSchema parse(const std::string& json_text);
  static DatasetSchema parse_file(const std::string& path);
  std::string serialize() const;
};

/// Immutable tabular choice data: named numeric columns, a chosen alternative
/// per row, and an optional grouping key. Categorical inputs are already
/// expanded to 0/1 dummies by the loader, so every column is binnable.
struct ChoiceDataset {
  std::vector<std::string> column_names;
  std::vector<std::vector<double>> columns;  // column-major, each of size n_rows
  std::vector<int> choice;                   // 0..J-1
  std::vector<std::string> group_keys;       // empty when no group column
  std::vector<std::string> alt_names;
  size_t n_rows = 0;

  size_t n_alts() const { return alt_names.size(); }
  bool has_groups() const { return !group_keys.empty(); }

  int column_index(const std::string& name) const;
  int require_column(const std::string& name) const;  // throws DataError if absent
  void validate() const;
};

ChoiceDataset load_dataset(const std::string& path, const DatasetSchema& schema);
void save_dataset(const ChoiceDataset& ds, const std::string& path, char delimiter = ',');

ChoiceDataset subset_rows(const ChoiceDataset& ds, std::span<const size_t> rows);

/// n_rows draws with replacement; deterministic per seed.
ChoiceDataset bootstrap_sample(const ChoiceDataset& ds, uint64_t seed);

/// Per-column histogram bin edges plus per-row bin indices.
/// Bin b of a column covers (upper_bounds[b-1], upper_bounds[b]], with the
/// first bin open below and the last open above.
struct BinnedColumn {
  std::vector<double> upper_bounds;  // size num_bins-1, strictly increasing
  int num_bins = 1;

  int bin_of(double x) const;
};

struct BinnedDataset {
  std::vector<BinnedColumn> edges;            // per dataset column
  std::vector<std::vector<uint16_t>> bins;    // per column, per row
  int max_bins = 255;
  int min_data_in_bin = 3;
  size_t n_rows = 0;
};

BinnedDataset bin_features(const ChoiceDataset& ds, int max_bins, int min_data_in_bin);

struct FoldAssignment {
  std::vector<int> fold;  // per row
  int k = 0;
};

/// Group-atomic k-fold split: rows sharing a group key always land in the
/// same fold, and fold row counts are balanced greedily. Rows without a group
/// column are treated as singleton groups.
FoldAssignment grouped_kfold(const ChoiceDataset& ds, int k, uint64_t seed);

/// Group-aware holdout split used for early stopping when the caller does not
/// supply a validation set.
std::pair<ChoiceDataset, ChoiceDataset> split_train_valid(const ChoiceDataset& ds,
                                                          double valid_fraction,
                                                          uint64_t seed);

}  // namespace rumboost
