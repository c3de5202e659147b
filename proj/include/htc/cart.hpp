#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "htc/matrix.hpp"
#include "json.hpp"

namespace htc {

struct TreeParams {
  std::optional<std::size_t> max_depth;  // nullopt grows until another rule binds
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  double min_impurity_decrease = 0.0;

  void validate() const;
  bool operator==(const TreeParams&) const = default;
};

nlohmann::ordered_json to_json(const TreeParams& p);
TreeParams tree_params_from_json(const nlohmann::ordered_json& j);

// Regression tree stored as a flat node arena; node 0 is the root.
class RegressionTree {
 public:
  struct Split {
    std::size_t feature;
    double threshold;  // x[feature] <= threshold goes left
    std::size_t left;
    std::size_t right;
    bool operator==(const Split&) const = default;
  };
  struct Leaf {
    double value;
    std::size_t n_samples;
    bool operator==(const Leaf&) const = default;
  };
  using Node = std::variant<Split, Leaf>;

  // Single leaf predicting 0 over zero features.
  RegressionTree() : nodes_{Leaf{0.0, 0}} {}
  RegressionTree(std::vector<Node> nodes, TreeParams params, std::size_t n_features);

  double predict(std::span<const double> x) const;
  // Arena index of the leaf reached by x.
  std::size_t leaf_index(std::span<const double> x) const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const TreeParams& params() const noexcept { return params_; }
  std::size_t n_features() const noexcept { return n_features_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

  bool operator==(const RegressionTree&) const = default;

 private:
  std::vector<Node> nodes_;
  TreeParams params_;
  std::size_t n_features_ = 0;
};

// Greedy CART on sum-of-squared-errors. At every node the split minimizing
// the children's total SSE wins; equal-gain candidates resolve to the lowest
// feature index, then the smallest threshold. Thresholds are midpoints of
// consecutive distinct sorted values.
//
// With a positive min_impurity_decrease a split must lower the SSE by at
// least that amount times the root sample count; with the default 0 every
// non-constant node that has a valid candidate is split.
RegressionTree fit_tree(const Matrix& x, std::span<const double> y, const TreeParams& params = {});

inline double predict_tree(const RegressionTree& tree, std::span<const double> x) {
  return tree.predict(x);
}

nlohmann::ordered_json to_json(const RegressionTree& tree);
RegressionTree tree_from_json(const nlohmann::ordered_json& j);

}  // namespace htc
