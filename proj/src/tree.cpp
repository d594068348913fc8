#include "tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rumboost {

namespace {

// Division guard for leaf values; sum hessians can underflow the
// min_sum_hessian constraint at the root.
constexpr double kLeafHessFloor = 1e-6;

double clamp_value(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

double leaf_value(double sum_g, double sum_h, int n_classes) {
  if (n_classes < 2) throw ConfigError("leaf_value: need at least 2 classes");
  if (!(sum_h > 0.0)) throw NumericError("leaf_value: sum_h must be positive");
  const double factor = static_cast<double>(n_classes - 1) / static_cast<double>(n_classes);
  return -factor * sum_g / sum_h;
}

double split_gain(const GradHessSum& left, const GradHessSum& right, const GradHessSum& parent) {
  if (!(left.h > 0.0) || !(right.h > 0.0) || !(parent.h > 0.0))
    throw NumericError("split_gain: hessian sums must be positive");
  const double tol_g = 1e-6 * std::max(1.0, std::abs(parent.g));
  const double tol_h = 1e-6 * std::max(1.0, parent.h);
  if (std::abs(left.g + right.g - parent.g) > tol_g || std::abs(left.h + right.h - parent.h) > tol_h)
    throw NumericError("split_gain: parent sums do not match left + right");
  return 0.5 * (left.g * left.g / left.h + right.g * right.g / right.h -
                parent.g * parent.g / parent.h);
}

int Tree::n_splits() const {
  int n = 0;
  for (const auto& node : nodes)
    if (!node.is_leaf()) ++n;
  return n;
}

double Tree::predict_row(std::span<const double> values_by_column) const {
  int idx = 0;
  while (!nodes[idx].is_leaf()) {
    const Node& node = nodes[idx];
    idx = values_by_column[node.column] <= node.threshold ? node.left : node.right;
  }
  return nodes[idx].value;
}

void Tree::scale_values(double factor) {
  for (auto& node : nodes)
    if (node.is_leaf()) node.value *= factor;
}

void Tree::remap_columns(std::span<const int> new_index) {
  for (auto& node : nodes)
    if (!node.is_leaf()) node.column = new_index[node.column];
}

namespace {

struct SplitCandidate {
  bool found = false;
  double gain = -std::numeric_limits<double>::infinity();
  int column = -1;            // position within params.columns
  int boundary = -1;          // bin boundary: bins <= boundary go left
  GradHessSum left, right;
  size_t left_count = 0, right_count = 0;
  double left_value = 0.0, right_value = 0.0;  // provisional, already clamped
};

struct NodeState {
  int node_id = 0;
  size_t begin = 0, end = 0;  // range in the row workspace
  int depth = 0;
  GradHessSum sum;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  SplitCandidate best;
};

class TreeBuilder {
 public:
  TreeBuilder(const BinnedDataset& binned, std::span<const double> g, std::span<const double> h,
              std::span<const int32_t> rows, const TreeParams& params)
      : binned_(binned), g_(g), h_(h), params_(params), rows_(rows.begin(), rows.end()) {
    int max_bins = 2;
    for (int c : params.columns) max_bins = std::max(max_bins, binned.edges[c].num_bins);
    hist_g_.resize(max_bins);
    hist_h_.resize(max_bins);
    hist_n_.resize(max_bins);
  }

  BuildResult run() {
    BuildResult result;
    Tree& tree = result.tree;

    NodeState root;
    root.node_id = 0;
    root.begin = 0;
    root.end = rows_.size();
    for (int32_t r : rows_) {
      root.sum.g += g_[r];
      root.sum.h += h_[r];
    }
    tree.nodes.push_back(make_leaf(root));
    find_best_split(root);

    // Best-first: split the pending leaf with the largest gain. With only a
    // depth cap the order is immaterial; with a num_leaves cap it decides
    // which leaves survive. Gain ties resolve to the older node.
    std::vector<NodeState> pending;
    if (root.best.found) pending.push_back(std::move(root));

    int leaf_count = 1;
    while (!pending.empty()) {
      if (params_.num_leaves > 0 && leaf_count >= params_.num_leaves) break;
      size_t pick = 0;
      for (size_t i = 1; i < pending.size(); ++i) {
        if (pending[i].best.gain > pending[pick].best.gain ||
            (pending[i].best.gain == pending[pick].best.gain &&
             pending[i].node_id < pending[pick].node_id))
          pick = i;
      }
      NodeState node = std::move(pending[pick]);
      pending.erase(pending.begin() + pick);

      const SplitCandidate& best = node.best;
      const int col = params_.columns[best.column];
      result.total_gain += best.gain;

      // Partition rows; stable so accumulation order stays deterministic.
      const auto& bins = binned_.bins[col];
      auto first = rows_.begin() + node.begin;
      auto last = rows_.begin() + node.end;
      auto mid = std::stable_partition(first, last, [&](int32_t r) {
        return bins[r] <= best.boundary;
      });
      const size_t split_at = node.begin + static_cast<size_t>(mid - first);

      NodeState left, right;
      left.begin = node.begin;
      left.end = split_at;
      right.begin = split_at;
      right.end = node.end;
      left.depth = right.depth = node.depth + 1;
      left.sum = best.left;
      right.sum = best.right;
      left.lo = right.lo = node.lo;
      left.hi = right.hi = node.hi;

      const Monotone dir = params_.monotone.empty() ? Monotone::None : params_.monotone[best.column];
      if (dir != Monotone::None) {
        const double mid_bound = (best.left_value + best.right_value) / 2.0;
        if (dir == Monotone::Increasing) {
          left.hi = std::min(left.hi, mid_bound);
          right.lo = std::max(right.lo, mid_bound);
        } else {
          left.lo = std::max(left.lo, mid_bound);
          right.hi = std::min(right.hi, mid_bound);
        }
      }

      left.node_id = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(make_leaf(left));
      right.node_id = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(make_leaf(right));
      Tree::Node& split_node = tree.nodes[node.node_id];
      split_node.column = col;
      split_node.bin_threshold = best.boundary;
      split_node.threshold = binned_.edges[col].upper_bounds[best.boundary];
      split_node.left = left.node_id;
      split_node.right = right.node_id;
      ++leaf_count;

      if (left.depth < params_.max_depth) {
        find_best_split(left);
        if (left.best.found) pending.push_back(std::move(left));
      }
      if (right.depth < params_.max_depth) {
        find_best_split(right);
        if (right.best.found) pending.push_back(std::move(right));
      }
    }
    return result;
  }

 private:
  Tree::Node make_leaf(const NodeState& state) const {
    Tree::Node node;
    node.value = clamp_value(node_output(state.sum), state.lo, state.hi);
    return node;
  }

  double node_output(const GradHessSum& sum) const {
    return params_.leaf_scale * (-sum.g / std::max(sum.h, kLeafHessFloor));
  }

  void find_best_split(NodeState& node) {
    node.best = SplitCandidate();
    const size_t count = node.end - node.begin;
    if (count < 2 * static_cast<size_t>(params_.min_data_in_leaf)) return;

    for (size_t ci = 0; ci < params_.columns.size(); ++ci) {
      const int col = params_.columns[ci];
      const BinnedColumn& edges = binned_.edges[col];
      const int nbins = edges.num_bins;
      if (nbins < 2) continue;
      const Monotone dir = params_.monotone.empty() ? Monotone::None : params_.monotone[ci];

      std::fill(hist_g_.begin(), hist_g_.begin() + nbins, 0.0);
      std::fill(hist_h_.begin(), hist_h_.begin() + nbins, 0.0);
      std::fill(hist_n_.begin(), hist_n_.begin() + nbins, 0);
      const auto& bins = binned_.bins[col];
      for (size_t p = node.begin; p < node.end; ++p) {
        const int32_t r = rows_[p];
        const int b = bins[r];
        hist_g_[b] += g_[r];
        hist_h_[b] += h_[r];
        ++hist_n_[b];
      }

      GradHessSum left;
      size_t left_count = 0;
      for (int t = 0; t < nbins - 1; ++t) {
        left.g += hist_g_[t];
        left.h += hist_h_[t];
        left_count += hist_n_[t];
        const size_t right_count = count - left_count;
        if (left_count < static_cast<size_t>(params_.min_data_in_leaf)) continue;
        if (right_count < static_cast<size_t>(params_.min_data_in_leaf)) break;
        GradHessSum right{node.sum.g - left.g, node.sum.h - left.h};
        if (left.h < params_.min_sum_hessian_in_leaf || right.h < params_.min_sum_hessian_in_leaf)
          continue;

        const double vl = clamp_value(node_output(left), node.lo, node.hi);
        const double vr = clamp_value(node_output(right), node.lo, node.hi);
        if (dir == Monotone::Increasing && !(vl < vr)) continue;
        if (dir == Monotone::Decreasing && !(vl > vr)) continue;

        const double gain = 0.5 * (left.g * left.g / left.h + right.g * right.g / right.h -
                                   node.sum.g * node.sum.g / node.sum.h);
        if (gain <= params_.min_gain_to_split) continue;
        // Ties keep the earlier candidate: lower column index, lower threshold.
        if (gain > node.best.gain) {
          node.best.found = true;
          node.best.gain = gain;
          node.best.column = static_cast<int>(ci);
          node.best.boundary = t;
          node.best.left = left;
          node.best.right = right;
          node.best.left_count = left_count;
          node.best.right_count = right_count;
          node.best.left_value = vl;
          node.best.right_value = vr;
        }
      }
    }
  }

  const BinnedDataset& binned_;
  std::span<const double> g_;
  std::span<const double> h_;
  const TreeParams& params_;
  std::vector<int32_t> rows_;
  std::vector<double> hist_g_, hist_h_;
  std::vector<int> hist_n_;
};

}  // namespace

BuildResult build_tree(const BinnedDataset& binned, std::span<const double> g,
                       std::span<const double> h, std::span<const int32_t> rows,
                       const TreeParams& params) {
  if (params.columns.empty()) throw ConfigError("build_tree: no allowed columns");
  if (!params.monotone.empty() && params.monotone.size() != params.columns.size())
    throw ConfigError("build_tree: monotone map must match columns");
  if (params.max_depth < 1) throw ConfigError("build_tree: max_depth must be positive");
  for (int c : params.columns)
    if (c < 0 || c >= static_cast<int>(binned.bins.size()))
      throw ConfigError("build_tree: column index out of range");

  // Candidates are scanned in ascending column order so equal-gain ties
  // resolve to the lower column index, then the lower threshold.
  TreeParams ordered = params;
  std::vector<size_t> perm(params.columns.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(),
            [&](size_t a, size_t b) { return params.columns[a] < params.columns[b]; });
  for (size_t i = 0; i < perm.size(); ++i) {
    ordered.columns[i] = params.columns[perm[i]];
    if (!params.monotone.empty()) ordered.monotone[i] = params.monotone[perm[i]];
  }

  TreeBuilder builder(binned, g, h, rows, ordered);
  return builder.run();
}

}  // namespace rumboost
