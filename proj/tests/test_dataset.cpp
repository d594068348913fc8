#include "dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"

using namespace rumboost;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

DatasetSchema toy_schema() {
  return DatasetSchema::parse(R"({
    "alternatives": ["a", "b"],
    "choice": "mode"
  })");
}

}  // namespace

TEST_CASE("load_dataset reads a 4-row toy file") {
  const std::string path = write_temp("toy.csv", "mode,x,y\n0,1.5,2\n1,2.5,3\n0,3.5,4\n1,4.5,5\n");
  ChoiceDataset ds = load_dataset(path, toy_schema());
  CHECK(ds.n_rows == 4);
  CHECK(ds.n_alts() == 2);
  CHECK(ds.column_names == std::vector<std::string>{"x", "y"});
  CHECK(ds.columns[0][2] == 3.5);
  CHECK(ds.choice == std::vector<int>{0, 1, 0, 1});
}

TEST_CASE("load_dataset expands categorical columns against a reference level") {
  const std::string path = write_temp(
      "cat.csv",
      "mode,purpose,x\n0,HBW,1\n1,HBE,2\n0,HBO,3\n1,B,4\n0,NHBO,5\n1,HBW,6\n");
  DatasetSchema schema = DatasetSchema::parse(R"({
    "alternatives": ["a", "b"],
    "choice": "mode",
    "categorical": [{"column": "purpose", "reference": "HBW"}]
  })");
  ChoiceDataset ds = load_dataset(path, schema);
  // 5 levels minus the reference -> 4 dummy columns.
  std::set<std::string> names(ds.column_names.begin(), ds.column_names.end());
  CHECK(names == std::set<std::string>{"x", "purpose_B", "purpose_HBE", "purpose_HBO",
                                       "purpose_NHBO"});
  const auto& hbe = ds.columns[ds.require_column("purpose_HBE")];
  CHECK(hbe == std::vector<double>{0, 1, 0, 0, 0, 0});
  // Reference rows are all-zero across the dummies.
  for (const char* dummy : {"purpose_B", "purpose_HBE", "purpose_HBO", "purpose_NHBO"}) {
    CHECK(ds.columns[ds.require_column(dummy)][0] == 0.0);
    CHECK(ds.columns[ds.require_column(dummy)][5] == 0.0);
  }
}

TEST_CASE("load_dataset rejects out-of-range choices") {
  const std::string path = write_temp("bad_choice.csv", "mode,x\n0,1\n7,2\n");
  DatasetSchema schema = DatasetSchema::parse(R"({
    "alternatives": ["a", "b", "c", "d"],
    "choice": "mode"
  })");
  CHECK_THROWS_AS(load_dataset(path, schema), DataError);
}

TEST_CASE("load_dataset reports the failing cell") {
  const std::string path = write_temp("bad_cell.csv", "mode,x\n0,1\n1,oops\n");
  try {
    load_dataset(path, toy_schema());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("oops") != std::string::npos);
  }
}

TEST_CASE("load_dataset honours choice_base and missing columns") {
  const std::string path = write_temp("base1.csv", "mode,x\n1,1\n2,2\n");
  DatasetSchema schema = toy_schema();
  schema.choice_base = 1;
  ChoiceDataset ds = load_dataset(path, schema);
  CHECK(ds.choice == std::vector<int>{0, 1});

  DatasetSchema missing = toy_schema();
  missing.choice_column = "not_there";
  CHECK_THROWS_AS(load_dataset(path, missing), DataError);
}

TEST_CASE("dataset round-trips bit-for-bit through save and load") {
  Rng rng(7);
  ChoiceDataset ds;
  ds.alt_names = {"a", "b", "c"};
  ds.column_names = {"u", "v"};
  ds.columns.resize(2);
  ds.n_rows = 64;
  for (size_t r = 0; r < ds.n_rows; ++r) {
    ds.columns[0].push_back(rng.real() * 1e3 - 500.0);
    ds.columns[1].push_back(std::exp(rng.real() * 20 - 10));
    ds.choice.push_back(static_cast<int>(rng.below(3)));
  }
  const std::string path = (std::filesystem::temp_directory_path() / "roundtrip.csv").string();
  save_dataset(ds, path);

  DatasetSchema schema;
  schema.alternatives = ds.alt_names;
  schema.choice_column = "__choice__";
  ChoiceDataset back = load_dataset(path, schema);
  REQUIRE(back.n_rows == ds.n_rows);
  for (size_t c = 0; c < 2; ++c)
    for (size_t r = 0; r < ds.n_rows; ++r) CHECK(back.columns[c][r] == ds.columns[c][r]);
  CHECK(back.choice == ds.choice);
}

TEST_CASE("bin_features collapses a constant column to one bin") {
  ChoiceDataset ds;
  ds.alt_names = {"a", "b"};
  ds.column_names = {"k"};
  ds.columns = {{1, 1, 1, 1}};
  ds.choice = {0, 1, 0, 1};
  ds.n_rows = 4;
  BinnedDataset binned = bin_features(ds, 255, 1);
  CHECK(binned.edges[0].num_bins == 1);
  CHECK(binned.edges[0].upper_bounds.empty());
}

TEST_CASE("bin_features splits a uniform column into equal-count quantile bins") {
  ChoiceDataset ds;
  ds.alt_names = {"a", "b"};
  ds.column_names = {"x"};
  ds.columns.resize(1);
  for (int i = 0; i < 1000; ++i) ds.columns[0].push_back(i);
  ds.choice.assign(1000, 0);
  ds.choice[1] = 1;
  ds.n_rows = 1000;

  BinnedDataset binned = bin_features(ds, 10, 1);
  REQUIRE(binned.edges[0].num_bins == 10);
  // Exact quantile oracle: cuts between 99|100, 199|200, ... -> midpoints.
  for (int k = 1; k <= 9; ++k)
    CHECK(binned.edges[0].upper_bounds[k - 1] == doctest::Approx(100.0 * k - 0.5));
  std::vector<int> counts(10, 0);
  for (uint16_t b : binned.bins[0]) ++counts[b];
  for (int c : counts) CHECK(c == 100);
}

TEST_CASE("bin_features merges undersized bins into a neighbour") {
  ChoiceDataset ds;
  ds.alt_names = {"a", "b"};
  ds.column_names = {"x"};
  ds.columns = {{1, 1, 1, 1, 2, 2, 2, 2, 99}};  // singleton extreme value
  ds.choice = {0, 1, 0, 1, 0, 1, 0, 1, 0};
  ds.n_rows = 9;
  BinnedDataset binned = bin_features(ds, 255, 3);
  CHECK(binned.edges[0].num_bins == 2);
  // The singleton 99 lands with the 2s.
  CHECK(binned.edges[0].bin_of(99) == binned.edges[0].bin_of(2));
  CHECK(binned.edges[0].bin_of(1) != binned.edges[0].bin_of(2));
}

TEST_CASE("binning is order-preserving and reproduces bin intervals") {
  Rng rng(11);
  ChoiceDataset ds;
  ds.alt_names = {"a", "b"};
  ds.column_names = {"x"};
  ds.columns.resize(1);
  ds.n_rows = 500;
  for (size_t r = 0; r < ds.n_rows; ++r) {
    ds.columns[0].push_back(std::floor(rng.real() * 40));  // heavy ties
    ds.choice.push_back(static_cast<int>(rng.below(2)));
  }
  BinnedDataset binned = bin_features(ds, 16, 3);
  const BinnedColumn& col = binned.edges[0];
  CHECK(col.num_bins <= 16);
  for (size_t i = 0; i + 1 < col.upper_bounds.size(); ++i)
    CHECK(col.upper_bounds[i] < col.upper_bounds[i + 1]);
  // x <= y implies bin(x) <= bin(y); value lies inside its bin interval.
  for (size_t r = 0; r + 1 < ds.n_rows; ++r) {
    const double x = ds.columns[0][r];
    const double y = ds.columns[0][r + 1];
    if (x <= y)
      CHECK(col.bin_of(x) <= col.bin_of(y));
    else
      CHECK(col.bin_of(x) >= col.bin_of(y));
    const int b = binned.bins[0][r];
    if (b > 0) CHECK(x > col.upper_bounds[b - 1]);
    if (b < col.num_bins - 1) CHECK(x <= col.upper_bounds[b]);
  }
}

TEST_CASE("grouped_kfold balances groups and keeps them atomic") {
  ChoiceDataset ds;
  ds.alt_names = {"a", "b"};
  ds.column_names = {"x"};
  ds.columns.resize(1);
  ds.n_rows = 30;
  for (size_t r = 0; r < 30; ++r) {
    ds.columns[0].push_back(r);
    ds.choice.push_back(static_cast<int>(r % 2));
    ds.group_keys.push_back("g" + std::to_string(r / 3));  // 10 groups of 3
  }

  FoldAssignment fa = grouped_kfold(ds, 5, 42);
  std::vector<std::set<std::string>> fold_groups(5);
  std::vector<int> fold_rows(5, 0);
  for (size_t r = 0; r < 30; ++r) {
    REQUIRE(fa.fold[r] >= 0);
    REQUIRE(fa.fold[r] < 5);
    fold_groups[fa.fold[r]].insert(ds.group_keys[r]);
    ++fold_rows[fa.fold[r]];
  }
  for (int f = 0; f < 5; ++f) {
    CHECK(fold_groups[f].size() == 2);  // 10 groups over 5 folds
    CHECK(fold_rows[f] == 6);
  }
  // Rows of one household share a fold.
  for (size_t r = 0; r < 30; ++r)
    CHECK(fa.fold[r] == fa.fold[(r / 3) * 3]);

  // Determinism and seed sensitivity.
  FoldAssignment again = grouped_kfold(ds, 5, 42);
  CHECK(again.fold == fa.fold);

  CHECK_THROWS_AS(grouped_kfold(ds, 11, 0), DataError);  // more folds than groups
}

TEST_CASE("grouped_kfold partitions every row exactly once") {
  Rng rng(3);
  ChoiceDataset ds;
  ds.alt_names = {"a", "b"};
  ds.column_names = {"x"};
  ds.columns.resize(1);
  ds.n_rows = 257;
  for (size_t r = 0; r < ds.n_rows; ++r) {
    ds.columns[0].push_back(rng.real());
    ds.choice.push_back(static_cast<int>(rng.below(2)));
    ds.group_keys.push_back("g" + std::to_string(rng.below(40)));
  }
  FoldAssignment fa = grouped_kfold(ds, 4, 9);
  std::vector<size_t> seen(4, 0);
  for (int f : fa.fold) {
    REQUIRE(f >= 0);
    REQUIRE(f < 4);
    ++seen[f];
  }
  size_t total = 0;
  for (size_t s : seen) {
    CHECK(s > 0);
    total += s;
  }
  CHECK(total == ds.n_rows);
}

TEST_CASE("bootstrap_sample basics") {
  ChoiceDataset one;
  one.alt_names = {"a", "b"};
  one.column_names = {"x"};
  one.columns = {{3.25}};
  one.choice = {1};
  one.n_rows = 1;
  ChoiceDataset same = bootstrap_sample(one, 5);
  CHECK(same.n_rows == 1);
  CHECK(same.columns[0][0] == 3.25);
  CHECK(same.choice[0] == 1);

  // Distinct-row fraction approaches 1 - 1/e over seeds (N = 1000).
  ChoiceDataset big;
  big.alt_names = {"a", "b"};
  big.column_names = {"x"};
  big.columns.resize(1);
  big.n_rows = 1000;
  for (int i = 0; i < 1000; ++i) {
    big.columns[0].push_back(i);
    big.choice.push_back(i % 2);
  }
  double mean_distinct = 0.0;
  const int trials = 40;
  for (int s = 0; s < trials; ++s) {
    ChoiceDataset bs = bootstrap_sample(big, 1000 + s);
    std::set<double> distinct(bs.columns[0].begin(), bs.columns[0].end());
    mean_distinct += static_cast<double>(distinct.size()) / trials;
  }
  CHECK(mean_distinct == doctest::Approx(1000.0 * (1.0 - std::exp(-1.0))).epsilon(0.02));

  // Different seeds give different multisets.
  int differing = 0;
  for (int s = 0; s < 100; ++s) {
    ChoiceDataset a = bootstrap_sample(big, 2000 + s);
    ChoiceDataset b = bootstrap_sample(big, 3000 + s);
    if (a.columns[0] != b.columns[0]) ++differing;
  }
  CHECK(differing == 100);
}

TEST_CASE("split_train_valid is group-aware") {
  ChoiceDataset ds;
  ds.alt_names = {"a", "b"};
  ds.column_names = {"x"};
  ds.columns.resize(1);
  ds.n_rows = 100;
  for (size_t r = 0; r < 100; ++r) {
    ds.columns[0].push_back(r);
    ds.choice.push_back(static_cast<int>(r % 2));
    ds.group_keys.push_back("g" + std::to_string(r / 5));
  }
  auto [train, valid] = split_train_valid(ds, 0.2, 1);
  CHECK(train.n_rows + valid.n_rows == 100);
  CHECK(valid.n_rows == 20);
  std::set<std::string> train_groups(train.group_keys.begin(), train.group_keys.end());
  for (const auto& g : valid.group_keys) CHECK(train_groups.count(g) == 0);
}
