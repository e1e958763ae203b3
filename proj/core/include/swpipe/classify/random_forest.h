#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "swpipe/classify/feature_matrix.h"

namespace swpipe::classify {

// Library defaults: 100 trees, unlimited depth, bootstrap per tree,
// mtry = floor(sqrt(d)) (at least 1).
struct RfConfig {
  std::size_t n_trees = 100;
  std::optional<std::size_t> max_depth;
  std::optional<std::size_t> mtry;
  std::size_t min_samples_leaf = 1;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const RfConfig&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double positive_fraction = 0.0;  // share of class 1 among training rows at the node

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  // 1 when the leaf's positive fraction is at least one half.
  int predict(std::span<const double> row) const;
  bool operator==(const DecisionTree&) const = default;
};

class RfModel {
 public:
  RfModel() = default;
  RfModel(std::size_t input_dim, std::vector<DecisionTree> trees);

  std::size_t input_dim() const { return input_dim_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  // Share of trees voting for class 1.
  double positive_vote_share(std::span<const double> row) const;

  bool operator==(const RfModel&) const = default;

 private:
  std::size_t input_dim_ = 0;
  std::vector<DecisionTree> trees_;
};

// CART trees on Gini impurity. Rows are put in a canonical order first and
// each tree's generator is seeded from (config.seed, tree index), so the
// fitted forest depends on the multiset of rows, not their order.
// Throws DegenerateLabels, LengthMismatch, InvalidParams.
RfModel train_rf(const FeatureMatrix& x, std::span<const int> y, const RfConfig& config);

}  // namespace swpipe::classify
