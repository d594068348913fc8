#include "dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace rumboost {

using nlohmann::json;

namespace {

json parse_json_or_throw(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

DatasetSchema DatasetSchema::parse(const std::string& json_text) {
  json j = parse_json_or_throw(json_text, "schema");
  if (!j.is_object()) throw ConfigError("schema: top level must be an object");
  check_keys(j, {"alternatives", "choice", "choice_base", "group", "delimiter", "categorical", "drop"},
             "schema");

  DatasetSchema s;
  if (!j.contains("alternatives") || !j["alternatives"].is_array() || j["alternatives"].empty())
    throw ConfigError("schema: 'alternatives' must be a non-empty array of names");
  for (const auto& a : j["alternatives"]) s.alternatives.push_back(a.get<std::string>());
  {
    std::set<std::string> uniq(s.alternatives.begin(), s.alternatives.end());
    if (uniq.size() != s.alternatives.size())
      throw ConfigError("schema: duplicate alternative name");
  }
  if (!j.contains("choice")) throw ConfigError("schema: missing 'choice' column name");
  s.choice_column = j["choice"].get<std::string>();
  if (j.contains("choice_base")) s.choice_base = j["choice_base"].get<int>();
  if (s.choice_base != 0 && s.choice_base != 1)
    throw ConfigError("schema: 'choice_base' must be 0 or 1");
  if (j.contains("group")) s.group_column = j["group"].get<std::string>();
  if (j.contains("delimiter")) {
    std::string d = j["delimiter"].get<std::string>();
    if (d.size() != 1) throw ConfigError("schema: 'delimiter' must be a single character");
    s.delimiter = d[0];
  }
  if (j.contains("categorical")) {
    for (const auto& c : j["categorical"]) {
      check_keys(c, {"column", "reference"}, "schema.categorical[]");
      CategoricalColumn cc;
      cc.column = c.at("column").get<std::string>();
      cc.reference = c.at("reference").get<std::string>();
      s.categorical.push_back(std::move(cc));
    }
  }
  if (j.contains("drop"))
    for (const auto& d : j["drop"]) s.drop.push_back(d.get<std::string>());
  return s;
}

DatasetSchema DatasetSchema::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string DatasetSchema::serialize() const {
  json j;
  j["alternatives"] = alternatives;
  j["choice"] = choice_column;
  if (choice_base != 0) j["choice_base"] = choice_base;
  if (!group_column.empty()) j["group"] = group_column;
  if (delimiter != ',') j["delimiter"] = std::string(1, delimiter);
  if (!categorical.empty()) {
    json arr = json::array();
    for (const auto& c : categorical) arr.push_back({{"column", c.column}, {"reference", c.reference}});
    j["categorical"] = arr;
  }
  if (!drop.empty()) j["drop"] = drop;
  return j.dump(2) + "\n";
}

int ChoiceDataset::column_index(const std::string& name) const {
  for (size_t i = 0; i < column_names.size(); ++i)
    if (column_names[i] == name) return static_cast<int>(i);
  return -1;
}

int ChoiceDataset::require_column(const std::string& name) const {
  int idx = column_index(name);
  if (idx < 0) throw DataError("column '" + name + "' not found in dataset");
  return idx;
}

void ChoiceDataset::validate() const {
  const int j = static_cast<int>(n_alts());
  if (j < 2) throw DataError("dataset needs at least 2 alternatives");
  if (choice.size() != n_rows) throw DataError("choice column length mismatch");
  for (size_t r = 0; r < n_rows; ++r) {
    if (choice[r] < 0 || choice[r] >= j)
      throw DataError("row " + std::to_string(r) + ": choice " + std::to_string(choice[r]) +
                      " outside 0.." + std::to_string(j - 1));
  }
  std::set<std::string> names(column_names.begin(), column_names.end());
  if (names.size() != column_names.size()) throw DataError("duplicate column names");
  for (size_t c = 0; c < columns.size(); ++c)
    if (columns[c].size() != n_rows)
      throw DataError("column '" + column_names[c] + "' has wrong length");
  if (!group_keys.empty() && group_keys.size() != n_rows)
    throw DataError("group key column length mismatch");
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cells = split_string(line, delim);
  if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r')
    cells.back().pop_back();
  return cells;
}

bool parse_cell_double(const std::string& cell, double* out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
  if (first == last) return false;
  auto res = std::from_chars(first, last, *out);
  return res.ec == std::errc() && res.ptr == last;
}

}  // namespace

ChoiceDataset load_dataset(const std::string& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file: " + path);

  std::string header_line;
  if (!std::getline(in, header_line)) throw DataError("empty data file: " + path);
  std::vector<std::string> header = split_line(header_line, schema.delimiter);

  std::unordered_map<std::string, size_t> col_of;
  for (size_t i = 0; i < header.size(); ++i) {
    if (col_of.count(header[i])) throw DataError("duplicate column '" + header[i] + "' in " + path);
    col_of[header[i]] = i;
  }

  auto find_col = [&](const std::string& name) -> size_t {
    auto it = col_of.find(name);
    if (it == col_of.end()) throw DataError("schema names column '" + name + "' but it is missing from " + path);
    return it->second;
  };

  const size_t choice_idx = find_col(schema.choice_column);
  const bool has_group = !schema.group_column.empty();
  const size_t group_idx = has_group ? find_col(schema.group_column) : 0;

  std::set<std::string> dropped(schema.drop.begin(), schema.drop.end());
  std::set<std::string> categorical_names;
  for (const auto& c : schema.categorical) {
    find_col(c.column);
    categorical_names.insert(c.column);
  }

  // Raw read: numeric columns parsed immediately, categorical kept as strings.
  std::vector<size_t> numeric_src;
  std::vector<std::string> numeric_names;
  std::vector<size_t> cat_src;
  std::vector<std::string> cat_names;
  for (size_t i = 0; i < header.size(); ++i) {
    const std::string& name = header[i];
    if (i == choice_idx || (has_group && i == group_idx) || dropped.count(name)) continue;
    if (categorical_names.count(name)) {
      cat_src.push_back(i);
      cat_names.push_back(name);
    } else {
      numeric_src.push_back(i);
      numeric_names.push_back(name);
    }
  }

  ChoiceDataset ds;
  ds.alt_names = schema.alternatives;
  const int j_alts = static_cast<int>(ds.alt_names.size());

  std::vector<std::vector<double>> numeric_cols(numeric_src.size());
  std::vector<std::vector<std::string>> cat_cols(cat_src.size());

  std::string line;
  size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    std::vector<std::string> cells = split_line(line, schema.delimiter);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(row + 1) + ": expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(cells.size()));

    // Choice: numeric index (with optional base) or alternative name.
    {
      const std::string& cell = cells[choice_idx];
      double v;
      int idx = -1;
      if (parse_cell_double(cell, &v)) {
        if (v != std::floor(v))
          throw DataError("row " + std::to_string(row + 1) + ": non-integral choice value '" + cell + "'");
        idx = static_cast<int>(v) - schema.choice_base;
      } else {
        for (int a = 0; a < j_alts; ++a)
          if (ds.alt_names[a] == cell) idx = a;
        if (idx < 0)
          throw DataError("row " + std::to_string(row + 1) + ": choice '" + cell +
                          "' is not a known alternative");
      }
      if (idx < 0 || idx >= j_alts)
        throw DataError("row " + std::to_string(row + 1) + ": choice " + std::to_string(idx) +
                        " outside 0.." + std::to_string(j_alts - 1));
      ds.choice.push_back(idx);
    }

    if (has_group) ds.group_keys.push_back(cells[group_idx]);

    for (size_t c = 0; c < numeric_src.size(); ++c) {
      double v;
      if (!parse_cell_double(cells[numeric_src[c]], &v))
        throw DataError("row " + std::to_string(row + 1) + " column '" + numeric_names[c] +
                        "': cannot parse '" + cells[numeric_src[c]] + "' as a number");
      numeric_cols[c].push_back(v);
    }
    for (size_t c = 0; c < cat_src.size(); ++c) cat_cols[c].push_back(cells[cat_src[c]]);
    ++row;
  }
  ds.n_rows = row;
  if (row == 0) throw DataError("data file has no rows: " + path);

  for (size_t c = 0; c < numeric_cols.size(); ++c) {
    ds.column_names.push_back(numeric_names[c]);
    ds.columns.push_back(std::move(numeric_cols[c]));
  }

  // Dummy expansion: one 0/1 column per level, reference level dropped.
  // Levels are sorted so the expansion is independent of row order.
  for (size_t c = 0; c < cat_cols.size(); ++c) {
    const CategoricalColumn* cat = nullptr;
    for (const auto& cc : schema.categorical)
      if (cc.column == cat_names[c]) cat = &cc;
    std::set<std::string> levels(cat_cols[c].begin(), cat_cols[c].end());
    if (!levels.count(cat->reference))
      throw DataError("categorical column '" + cat->column + "': reference level '" + cat->reference +
                      "' not present in data");
    for (const auto& level : levels) {
      if (level == cat->reference) continue;
      std::vector<double> dummy(ds.n_rows, 0.0);
      for (size_t r = 0; r < ds.n_rows; ++r)
        if (cat_cols[c][r] == level) dummy[r] = 1.0;
      ds.column_names.push_back(cat->column + "_" + level);
      ds.columns.push_back(std::move(dummy));
    }
  }

  ds.validate();
  return ds;
}

void save_dataset(const ChoiceDataset& ds, const std::string& path, char delimiter) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file: " + path);
  out << "__choice__";
  if (ds.has_groups()) out << delimiter << "__group__";
  for (const auto& name : ds.column_names) out << delimiter << name;
  out << "\n";
  for (size_t r = 0; r < ds.n_rows; ++r) {
    out << ds.choice[r];
    if (ds.has_groups()) out << delimiter << ds.group_keys[r];
    for (const auto& col : ds.columns) out << delimiter << format_double(col[r]);
    out << "\n";
  }
}

ChoiceDataset subset_rows(const ChoiceDataset& ds, std::span<const size_t> rows) {
  ChoiceDataset out;
  out.column_names = ds.column_names;
  out.alt_names = ds.alt_names;
  out.n_rows = rows.size();
  out.columns.resize(ds.columns.size());
  for (size_t c = 0; c < ds.columns.size(); ++c) {
    out.columns[c].reserve(rows.size());
    for (size_t r : rows) out.columns[c].push_back(ds.columns[c][r]);
  }
  out.choice.reserve(rows.size());
  for (size_t r : rows) out.choice.push_back(ds.choice[r]);
  if (ds.has_groups()) {
    out.group_keys.reserve(rows.size());
    for (size_t r : rows) out.group_keys.push_back(ds.group_keys[r]);
  }
  return out;
}

ChoiceDataset bootstrap_sample(const ChoiceDataset& ds, uint64_t seed) {
  if (ds.n_rows == 0) throw DataError("bootstrap_sample: empty dataset");
  Rng rng(seed);
  std::vector<size_t> rows(ds.n_rows);
  for (size_t i = 0; i < ds.n_rows; ++i) rows[i] = static_cast<size_t>(rng.below(ds.n_rows));
  return subset_rows(ds, rows);
}

int BinnedColumn::bin_of(double x) const {
  // First bin whose upper bound admits x; last bin is open above.
  int lo = 0, hi = static_cast<int>(upper_bounds.size());
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (x <= upper_bounds[mid])
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

namespace {

BinnedColumn bin_column(const std::vector<double>& values, int max_bins, int min_data_in_bin) {
  const size_t n = values.size();
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());

  // Distinct values with multiplicities.
  std::vector<double> distinct;
  std::vector<size_t> counts;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    distinct.push_back(sorted[i]);
    counts.push_back(j - i);
    i = j;
  }

  BinnedColumn col;
  if (distinct.size() <= 1) {
    col.num_bins = 1;
    return col;
  }

  // Boundary after distinct index d means an upper bound at the midpoint
  // between distinct[d] and distinct[d+1].
  std::vector<size_t> boundary_after;
  if (static_cast<int>(distinct.size()) <= max_bins) {
    for (size_t d = 0; d + 1 < distinct.size(); ++d) boundary_after.push_back(d);
  } else {
    // Quantile cuts: close a bin once it holds its share of the remaining rows.
    size_t remaining = n;
    int bins_left = max_bins;
    size_t acc = 0;
    for (size_t d = 0; d + 1 < distinct.size(); ++d) {
      acc += counts[d];
      const double target = static_cast<double>(remaining) / bins_left;
      if (static_cast<double>(acc) >= target && bins_left > 1) {
        boundary_after.push_back(d);
        remaining -= acc;
        acc = 0;
        --bins_left;
      }
    }
  }

  // Merge bins that fall short of min_data_in_bin into their right neighbour
  // (left neighbour for the final bin).
  std::vector<size_t> bin_counts;
  std::vector<size_t> kept;
  {
    size_t start = 0;
    for (size_t b = 0; b <= boundary_after.size(); ++b) {
      size_t end = (b < boundary_after.size()) ? boundary_after[b] + 1 : distinct.size();
      size_t cnt = 0;
      for (size_t d = start; d < end; ++d) cnt += counts[d];
      bin_counts.push_back(cnt);
      start = end;
    }
    size_t carry = 0;
    for (size_t b = 0; b < boundary_after.size(); ++b) {
      if (bin_counts[b] + carry < static_cast<size_t>(min_data_in_bin)) {
        carry += bin_counts[b];  // drop this boundary, rows flow right
      } else {
        kept.push_back(boundary_after[b]);
        carry = 0;
      }
    }
    // Trailing bin short: merge it into the previous kept bin.
    if (!kept.empty()) {
      size_t last_cnt = carry + bin_counts.back();
      if (last_cnt < static_cast<size_t>(min_data_in_bin)) kept.pop_back();
    }
  }

  for (size_t d : kept) col.upper_bounds.push_back((distinct[d] + distinct[d + 1]) / 2.0);
  col.num_bins = static_cast<int>(col.upper_bounds.size()) + 1;
  return col;
}

}  // namespace

BinnedDataset bin_features(const ChoiceDataset& ds, int max_bins, int min_data_in_bin) {
  if (ds.n_rows == 0) throw DataError("bin_features: empty dataset");
  if (max_bins < 2) throw ConfigError("bin_features: max_bins must be >= 2");
  if (min_data_in_bin < 1) throw ConfigError("bin_features: min_data_in_bin must be >= 1");
  if (ds.n_rows > 0xFFFFull * 0xFFFFull) throw DataError("bin_features: dataset too large");

  BinnedDataset out;
  out.max_bins = std::min(max_bins, 65535);
  out.min_data_in_bin = min_data_in_bin;
  out.n_rows = ds.n_rows;
  out.edges.reserve(ds.columns.size());
  out.bins.reserve(ds.columns.size());
  for (const auto& col : ds.columns) {
    BinnedColumn bc = bin_column(col, out.max_bins, min_data_in_bin);
    std::vector<uint16_t> idx(ds.n_rows);
    for (size_t r = 0; r < ds.n_rows; ++r) idx[r] = static_cast<uint16_t>(bc.bin_of(col[r]));
    out.edges.push_back(std::move(bc));
    out.bins.push_back(std::move(idx));
  }
  return out;
}

FoldAssignment grouped_kfold(const ChoiceDataset& ds, int k, uint64_t seed) {
  if (k < 2) throw ConfigError("grouped_kfold: k must be >= 2");

  // Groups in order of first appearance; singleton groups when no group column.
  std::unordered_map<std::string, int> group_id;
  std::vector<std::vector<size_t>> group_rows;
  if (ds.has_groups()) {
    for (size_t r = 0; r < ds.n_rows; ++r) {
      auto [it, inserted] = group_id.try_emplace(ds.group_keys[r], static_cast<int>(group_rows.size()));
      if (inserted) group_rows.emplace_back();
      group_rows[it->second].push_back(r);
    }
  } else {
    group_rows.resize(ds.n_rows);
    for (size_t r = 0; r < ds.n_rows; ++r) group_rows[r].push_back(r);
  }

  const size_t n_groups = group_rows.size();
  if (n_groups < static_cast<size_t>(k))
    throw DataError("grouped_kfold: only " + std::to_string(n_groups) + " distinct groups for k=" +
                    std::to_string(k));

  std::vector<size_t> order(n_groups);
  for (size_t i = 0; i < n_groups; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  // Largest groups first; equal sizes stay in shuffled order.
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return group_rows[a].size() > group_rows[b].size();
  });

  FoldAssignment fa;
  fa.k = k;
  fa.fold.assign(ds.n_rows, -1);
  std::vector<size_t> fold_sizes(k, 0);
  for (size_t g : order) {
    int best = 0;
    for (int f = 1; f < k; ++f)
      if (fold_sizes[f] < fold_sizes[best]) best = f;
    for (size_t r : group_rows[g]) fa.fold[r] = best;
    fold_sizes[best] += group_rows[g].size();
  }
  return fa;
}

std::pair<ChoiceDataset, ChoiceDataset> split_train_valid(const ChoiceDataset& ds,
                                                          double valid_fraction,
                                                          uint64_t seed) {
  if (valid_fraction <= 0.0 || valid_fraction >= 1.0)
    throw ConfigError("split_train_valid: fraction must be in (0, 1)");
  int k = std::max(2, static_cast<int>(std::lround(1.0 / valid_fraction)));
  FoldAssignment fa = grouped_kfold(ds, k, seed);
  std::vector<size_t> train_rows, valid_rows;
  for (size_t r = 0; r < ds.n_rows; ++r)
    (fa.fold[r] == 0 ? valid_rows : train_rows).push_back(r);
  return {subset_rows(ds, train_rows), subset_rows(ds, valid_rows)};
}

}  // namespace rumboost
