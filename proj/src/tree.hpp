#pragma once

#include <span>

#include "dataset.hpp"
#include "model_spec.hpp"

namespace rumboost {

struct GradHessSum {
  double g = 0.0;
  double h = 0.0;
};

/// Optimal leaf value with the multiclass redundancy factor:
/// -((J-1)/J) * sum_g / sum_h. Shrinkage is applied by the caller.
double leaf_value(double sum_g, double sum_h, int n_classes);

/// Loss reduction for a split: 0.5 * (gl^2/hl + gr^2/hr - gp^2/hp).
/// The parent must equal left + right componentwise.
double split_gain(const GradHessSum& left, const GradHessSum& right, const GradHessSum& parent);

/// Regression tree over binned columns. Split nodes carry both the bin
/// boundary used during training and the raw threshold, so prediction works
/// on unbinned data: x <= threshold goes left.
struct Tree {
  struct Node {
    int column = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int bin_threshold = -1;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return column < 0; }
  };

  std::vector<Node> nodes;  // nodes[0] is the root

  int n_splits() const;
  int n_leaves() const { return static_cast<int>(nodes.size()) - n_splits(); }
  double predict_row(std::span<const double> values_by_column) const;
  void scale_values(double factor);
  void remap_columns(std::span<const int> new_index);  // new_index[old_column]
};

struct TreeParams {
  int max_depth = 1;
  int num_leaves = 0;  // 0 = no cap
  int min_data_in_leaf = 20;
  double min_sum_hessian_in_leaf = 1e-3;
  double min_gain_to_split = 0.0;
  double leaf_scale = 1.0;  // multiclass factor (J-1)/J, or 1.0 to disable
  std::vector<int> columns;
  std::vector<Monotone> monotone;  // parallel to columns
};

struct BuildResult {
  Tree tree;
  double total_gain = 0.0;  // sum of accepted split gains
};

/// Greedy best-first growth over histogram bins of the allowed columns.
/// Splits that violate a monotone direction are skipped; after a monotone
/// split, descendant leaf values on either side are clamped to the midpoint
/// of the two provisional values. Returns a single leaf when no split clears
/// min_gain_to_split (n_splits() == 0 in that case).
BuildResult build_tree(const BinnedDataset& binned, std::span<const double> g,
                       std::span<const double> h, std::span<const int32_t> rows,
                       const TreeParams& params);

}  // namespace rumboost
