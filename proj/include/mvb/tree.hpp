#ifndef MVB_TREE_HPP
#define MVB_TREE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "mvb/dataset.hpp"

namespace mvb {

// Axis-aligned binary split node. feature < 0 marks a leaf; routing sends
// x[feature] <= threshold to the left child.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t label = -1;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::size_t n_features = 0;
  int n_classes = 0;

  std::int32_t predict_row(const double* x) const;
};

// CART with the Gini criterion, grown until leaves are pure on the training
// multiset or no candidate split reduces impurity. At every node a fresh
// subset of max_features features is drawn without replacement. Thresholds
// sit midway between consecutive distinct sorted values; ties between splits
// break toward the lowest feature index, then the lowest threshold.
Tree train_tree(const Dataset& data, std::span<const std::size_t> in_bag,
                std::size_t max_features, std::uint64_t seed);

std::vector<std::int32_t> predict_tree(const Tree& tree, const FeatureMatrix& X);

}  // namespace mvb

#endif  // MVB_TREE_HPP
