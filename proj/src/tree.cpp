#include "mvb/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvb/random.hpp"

namespace mvb {

namespace {

constexpr double kGainTolerance = 1e-12;
constexpr std::size_t kMaxNodes = 1000000;

struct SplitChoice {
  double gain = 0.0;
  std::int32_t feature = -1;
  double threshold = 0.0;

  bool better_than(const SplitChoice& other) const {
    if (gain != other.gain) return gain > other.gain;
    if (feature != other.feature) return feature < other.feature;
    return threshold < other.threshold;
  }
};

}  // namespace

std::int32_t Tree::predict_row(const double* x) const {
  std::int32_t node = 0;
  while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
    const TreeNode& nd = nodes[static_cast<std::size_t>(node)];
    node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(node)].label;
}

Tree train_tree(const Dataset& data, std::span<const std::size_t> in_bag,
                std::size_t max_features, std::uint64_t seed) {
  data.validate();
  if (in_bag.empty()) throw InputError("in-bag sample is empty");
  const std::size_t d = data.n_features();
  if (max_features < 1 || max_features > d) throw InputError("max_features out of range");

  const auto n_classes = static_cast<std::size_t>(data.n_classes);
  Rng rng(seed);

  Tree tree;
  tree.n_features = d;
  tree.n_classes = data.n_classes;

  struct Work {
    std::vector<std::size_t> idx;
    std::int32_t node;
  };
  std::vector<Work> stack;
  tree.nodes.emplace_back();
  stack.push_back({std::vector<std::size_t>(in_bag.begin(), in_bag.end()), 0});

  std::vector<std::int64_t> counts(n_classes);
  std::vector<std::int64_t> left_counts(n_classes);
  std::vector<std::pair<double, std::int32_t>> column;

  while (!stack.empty()) {
    Work w = std::move(stack.back());
    stack.pop_back();
    const std::size_t n = w.idx.size();

    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i : w.idx) ++counts[static_cast<std::size_t>(data.labels[i])];
    std::int32_t majority = 0;
    for (std::size_t k = 1; k < n_classes; ++k) {
      if (counts[k] > counts[static_cast<std::size_t>(majority)]) majority = static_cast<std::int32_t>(k);
    }
    const bool pure = counts[static_cast<std::size_t>(majority)] == static_cast<std::int64_t>(n);

    SplitChoice best;
    if (!pure) {
      std::int64_t sumsq_total = 0;
      for (auto c : counts) sumsq_total += c * c;

      auto features = rng.sample_distinct(max_features, d);
      std::sort(features.begin(), features.end());

      for (std::size_t f : features) {
        column.clear();
        column.reserve(n);
        for (std::size_t i : w.idx) column.emplace_back(data.X.at(i, f), data.labels[i]);
        std::sort(column.begin(), column.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (column.front().first == column.back().first) continue;

        std::fill(left_counts.begin(), left_counts.end(), 0);
        std::int64_t sumsq_left = 0;
        std::int64_t sumsq_right = sumsq_total;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          const auto y = static_cast<std::size_t>(column[i].second);
          sumsq_left += 2 * left_counts[y] + 1;
          sumsq_right += 1 - 2 * counts[y];
          ++left_counts[y];
          --counts[y];
          if (column[i].first == column[i + 1].first) continue;

          const auto n_left = static_cast<double>(i + 1);
          const auto n_right = static_cast<double>(n - i - 1);
          const double gain = (static_cast<double>(sumsq_left) / n_left +
                               static_cast<double>(sumsq_right) / n_right -
                               static_cast<double>(sumsq_total) / static_cast<double>(n)) /
                              static_cast<double>(n);
          double threshold = 0.5 * (column[i].first + column[i + 1].first);
          if (threshold >= column[i + 1].first) threshold = column[i].first;
          SplitChoice cand{gain, static_cast<std::int32_t>(f), threshold};
          if (best.feature < 0 || cand.better_than(best)) best = cand;
        }
        // restore counts consumed by the sweep
        for (std::size_t i = 0; i + 1 < n; ++i) ++counts[static_cast<std::size_t>(column[i].second)];
      }
    }

    if (pure || best.feature < 0 || best.gain <= kGainTolerance) {
      TreeNode& leaf = tree.nodes[static_cast<std::size_t>(w.node)];
      leaf.feature = -1;
      leaf.label = majority;
      continue;
    }

    std::vector<std::size_t> left_idx, right_idx;
    left_idx.reserve(n);
    right_idx.reserve(n);
    for (std::size_t i : w.idx) {
      (data.X.at(i, static_cast<std::size_t>(best.feature)) <= best.threshold ? left_idx : right_idx)
          .push_back(i);
    }

    if (tree.nodes.size() + 2 > kMaxNodes)
      throw ComputationError("tree node cap exceeded; input looks pathological");
    const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto right_id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();

    TreeNode& node = tree.nodes[static_cast<std::size_t>(w.node)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left_id;
    node.right = right_id;

    stack.push_back({std::move(right_idx), right_id});
    stack.push_back({std::move(left_idx), left_id});
  }

  return tree;
}

std::vector<std::int32_t> predict_tree(const Tree& tree, const FeatureMatrix& X) {
  if (X.n_features != tree.n_features)
    throw InputError("feature count does not match the tree's training dimension");
  std::vector<std::int32_t> out(X.n_samples);
  for (std::size_t i = 0; i < X.n_samples; ++i) out[i] = tree.predict_row(X.row(i));
  return out;
}

}  // namespace mvb
