#include "swpipe/classify/random_forest.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "swpipe/error.h"
#include "swpipe/hashing.h"
#include "swpipe/random.h"

namespace swpipe::classify {

void RfConfig::validate() const {
  if (n_trees < 1) throw Error(ErrorCode::kInvalidParams, "n_trees must be >= 1");
  if (min_samples_leaf < 1) throw Error(ErrorCode::kInvalidParams, "min_samples_leaf must be >= 1");
  if (mtry && *mtry == 0) throw Error(ErrorCode::kInvalidParams, "mtry must be >= 1");
}

int DecisionTree::predict(std::span<const double> row) const {
  std::size_t at = 0;
  while (!nodes[at].is_leaf()) {
    const auto& n = nodes[at];
    at = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                            : n.right);
  }
  return nodes[at].positive_fraction >= 0.5 ? 1 : 0;
}

RfModel::RfModel(std::size_t input_dim, std::vector<DecisionTree> trees)
    : input_dim_(input_dim), trees_(std::move(trees)) {}

double RfModel::positive_vote_share(std::span<const double> row) const {
  if (trees_.empty()) return 0.0;
  std::size_t votes = 0;
  for (const auto& t : trees_) votes += static_cast<std::size_t>(t.predict(row));
  return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;  // weighted child Gini, lower is better
};

double gini(double pos, double total) {
  if (total <= 0) return 0.0;
  const double p = pos / total;
  return 2.0 * p * (1.0 - p);
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const int> y, const RfConfig& cfg,
              std::size_t mtry, Rng& rng)
      : x_(x), y_(y), cfg_(cfg), mtry_(mtry), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> sample) {
    tree_.nodes.clear();
    struct Work {
      std::size_t node;
      std::vector<std::size_t> rows;
      std::size_t depth;
    };
    tree_.nodes.emplace_back();
    std::vector<Work> stack;
    stack.push_back({0, std::move(sample), 0});
    while (!stack.empty()) {
      Work w = std::move(stack.back());
      stack.pop_back();

      std::size_t pos = 0;
      for (auto r : w.rows) pos += static_cast<std::size_t>(y_[r]);
      TreeNode& node = tree_.nodes[w.node];
      node.positive_fraction = w.rows.empty() ? 0.0 : static_cast<double>(pos) / w.rows.size();

      const bool pure = pos == 0 || pos == w.rows.size();
      const bool depth_capped = cfg_.max_depth && w.depth >= *cfg_.max_depth;
      if (pure || depth_capped || w.rows.size() < 2 * cfg_.min_samples_leaf) continue;

      const auto split = find_split(w.rows, pos);
      if (split.feature < 0) continue;

      std::vector<std::size_t> left, right;
      for (auto r : w.rows) {
        (x_(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(r);
      }
      const auto left_id = tree_.nodes.size();
      tree_.nodes.emplace_back();
      tree_.nodes.emplace_back();
      TreeNode& parent = tree_.nodes[w.node];  // re-fetch after growth
      parent.feature = split.feature;
      parent.threshold = split.threshold;
      parent.left = static_cast<int>(left_id);
      parent.right = static_cast<int>(left_id + 1);
      stack.push_back({left_id + 1, std::move(right), w.depth + 1});
      stack.push_back({left_id, std::move(left), w.depth + 1});
    }
    return std::move(tree_);
  }

 private:
  // Samples mtry candidate features; when none of them separates the rows,
  // the remaining features are tried in the same shuffled order so a node
  // only stays impure when every feature is constant on it.
  Split find_split(const std::vector<std::size_t>& rows, std::size_t pos) {
    std::vector<std::size_t> features(x_.cols());
    std::iota(features.begin(), features.end(), 0);
    rng_.shuffle(std::span(features));

    Split best;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (i >= mtry_ && best.feature >= 0) break;
      evaluate_feature(features[i], rows, pos, best);
    }
    return best;
  }

  void evaluate_feature(std::size_t f, const std::vector<std::size_t>& rows, std::size_t pos,
                        Split& best) {
    std::vector<std::pair<double, int>> values;
    values.reserve(rows.size());
    for (auto r : rows) values.emplace_back(x_(r, f), y_[r]);
    std::sort(values.begin(), values.end());

    const double total = static_cast<double>(rows.size());
    const double total_pos = static_cast<double>(pos);
    double left_n = 0, left_pos = 0;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      left_n += 1;
      left_pos += values[i].second;
      if (values[i].first == values[i + 1].first) continue;
      const double right_n = total - left_n;
      if (left_n < cfg_.min_samples_leaf || right_n < cfg_.min_samples_leaf) continue;
      const double impurity = (left_n * gini(left_pos, left_n) +
                               right_n * gini(total_pos - left_pos, right_n)) / total;
      if (best.feature < 0 || impurity < best.impurity) {
        best.feature = static_cast<int>(f);
        best.threshold = values[i].first + (values[i + 1].first - values[i].first) / 2.0;
        best.impurity = impurity;
      }
    }
  }

  const FeatureMatrix& x_;
  std::span<const int> y_;
  const RfConfig& cfg_;
  std::size_t mtry_;
  Rng& rng_;
  DecisionTree tree_;
};

}  // namespace

RfModel train_rf(const FeatureMatrix& x_in, std::span<const int> y_in, const RfConfig& cfg) {
  cfg.validate();
  const std::size_t n = x_in.rows();
  if (y_in.size() != n) throw Error(ErrorCode::kLengthMismatch, "x and y differ in length");
  std::size_t positives = 0;
  for (int v : y_in) {
    if (v != 0 && v != 1) throw Error(ErrorCode::kInvalidParams, "labels must be 0/1");
    positives += static_cast<std::size_t>(v);
  }
  if (n < 2 || positives == 0 || positives == n) {
    throw Error(ErrorCode::kDegenerateLabels, "training labels need both classes");
  }

  // Canonical row order: lexicographic on (features, label).
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = x_in.row(a);
    const auto rb = x_in.row(b);
    if (std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end())) return true;
    if (std::lexicographical_compare(rb.begin(), rb.end(), ra.begin(), ra.end())) return false;
    return y_in[a] < y_in[b];
  });
  const FeatureMatrix x = x_in.select_rows(perm);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = y_in[perm[i]];

  const std::size_t d = x.cols();
  const std::size_t mtry = std::min(
      d, cfg.mtry.value_or(std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(d)))));

  std::vector<DecisionTree> trees;
  trees.reserve(cfg.n_trees);
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    Rng rng(derive_seed(cfg.seed, fmt::format("rf/tree/{}", t)));
    std::vector<std::size_t> sample(n);
    if (cfg.bootstrap) {
      for (auto& s : sample) s = static_cast<std::size_t>(rng.index(n));
      std::sort(sample.begin(), sample.end());
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    TreeBuilder builder(x, y, cfg, mtry, rng);
    trees.push_back(builder.build(std::move(sample)));
  }
  return RfModel(d, std::move(trees));
}

}  // namespace swpipe::classify
