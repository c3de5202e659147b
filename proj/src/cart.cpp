#include "htc/cart.hpp"

#include <algorithm>
#include <numeric>

#include "htc/error.hpp"

namespace htc {

void TreeParams::validate() const {
  require(min_samples_split >= 2, ErrorCode::invalid_argument, "min_samples_split must be >= 2");
  require(min_samples_leaf >= 1, ErrorCode::invalid_argument, "min_samples_leaf must be >= 1");
  require(min_impurity_decrease >= 0.0, ErrorCode::invalid_argument,
          "min_impurity_decrease must be >= 0");
}

nlohmann::ordered_json to_json(const TreeParams& p) {
  nlohmann::ordered_json j;
  if (p.max_depth) {
    j["max_depth"] = *p.max_depth;
  } else {
    j["max_depth"] = nullptr;
  }
  j["min_samples_split"] = p.min_samples_split;
  j["min_samples_leaf"] = p.min_samples_leaf;
  j["min_impurity_decrease"] = p.min_impurity_decrease;
  return j;
}

TreeParams tree_params_from_json(const nlohmann::ordered_json& j) {
  TreeParams p;
  if (j.contains("max_depth") && !j.at("max_depth").is_null()) {
    p.max_depth = j.at("max_depth").get<std::size_t>();
  }
  p.min_samples_split = j.value("min_samples_split", p.min_samples_split);
  p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
  p.min_impurity_decrease = j.value("min_impurity_decrease", p.min_impurity_decrease);
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------

RegressionTree::RegressionTree(std::vector<Node> nodes, TreeParams params, std::size_t n_features)
    : nodes_(std::move(nodes)), params_(params), n_features_(n_features) {
  if (nodes_.empty()) fail(ErrorCode::invalid_argument, "tree has no nodes");
  for (const auto& node : nodes_) {
    if (const auto* s = std::get_if<Split>(&node)) {
      if (s->left >= nodes_.size() || s->right >= nodes_.size() || s->feature >= n_features_) {
        fail(ErrorCode::invalid_argument, "tree node references out of range");
      }
    }
  }
}

std::size_t RegressionTree::leaf_index(std::span<const double> x) const {
  if (x.size() != n_features_) {
    fail(ErrorCode::dimension_mismatch,
         "expected " + std::to_string(n_features_) + " features, got " + std::to_string(x.size()));
  }
  std::size_t i = 0;
  while (const auto* s = std::get_if<Split>(&nodes_[i])) {
    i = x[s->feature] <= s->threshold ? s->left : s->right;
  }
  return i;
}

double RegressionTree::predict(std::span<const double> x) const {
  return std::get<Leaf>(nodes_[leaf_index(x)]).value;
}

std::size_t RegressionTree::depth() const {
  // Children are always stored after their parent.
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (const auto* s = std::get_if<Split>(&nodes_[i])) {
      d[s->left] = d[i] + 1;
      d[s->right] = d[i] + 1;
    }
  }
  return best;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) {
    return std::holds_alternative<Leaf>(n);
  }));
}

// ---------------------------------------------------------------------------

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const TreeParams& params)
      : x_(x), y_(y), params_(params) {}

  std::vector<RegressionTree::Node> build() {
    std::vector<std::size_t> all(y_.size());
    std::iota(all.begin(), all.end(), 0);
    grow(all, 0);
    return std::move(nodes_);
  }

 private:
  struct Candidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = 0.0;  // sumL^2/nL + sumR^2/nR, larger is better
    bool found = false;
  };

  std::size_t grow(std::vector<std::size_t>& idx, std::size_t depth) {
    const std::size_t self = nodes_.size();
    nodes_.emplace_back(make_leaf(idx));

    const std::size_t n = idx.size();
    if (params_.max_depth && depth >= *params_.max_depth) return self;
    if (n < params_.min_samples_split || n < 2 * params_.min_samples_leaf) return self;
    if (is_constant(idx)) return self;

    const Candidate best = best_split(idx);
    if (!best.found) return self;
    if (params_.min_impurity_decrease > 0.0) {
      double sum = 0.0;
      for (std::size_t i : idx) sum += y_[i];
      const double decrease = best.score - sum * sum / static_cast<double>(n);
      if (!(decrease > 0.0) ||
          decrease / static_cast<double>(y_.size()) < params_.min_impurity_decrease) {
        return self;
      }
    }

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (x_(i, best.feature) <= best.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    const std::size_t l = grow(left, depth + 1);
    const std::size_t r = grow(right, depth + 1);
    nodes_[self] = RegressionTree::Split{best.feature, best.threshold, l, r};
    return self;
  }

  RegressionTree::Leaf make_leaf(const std::vector<std::size_t>& idx) const {
    // A pure leaf stores its target verbatim, so memorized predictions are exact.
    if (is_constant(idx)) return {y_[idx.front()], idx.size()};
    double sum = 0.0;
    for (std::size_t i : idx) sum += y_[i];
    return {sum / static_cast<double>(idx.size()), idx.size()};
  }

  bool is_constant(const std::vector<std::size_t>& idx) const {
    return std::all_of(idx.begin(), idx.end(), [&](std::size_t i) { return y_[i] == y_[idx.front()]; });
  }

  Candidate best_split(const std::vector<std::size_t>& idx) {
    const std::size_t n = idx.size();
    const std::size_t min_leaf = params_.min_samples_leaf;
    double total = 0.0;
    for (std::size_t i : idx) total += y_[i];

    Candidate best;
    order_.assign(idx.begin(), idx.end());
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      std::stable_sort(order_.begin(), order_.end(),
                       [&](std::size_t a, std::size_t b) { return x_(a, f) < x_(b, f); });
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left_sum += y_[order_[k]];
        const std::size_t n_left = k + 1;
        const double lo = x_(order_[k], f);
        const double hi = x_(order_[k + 1], f);
        if (lo == hi) continue;
        if (n_left < min_leaf || n - n_left < min_leaf) continue;
        const double right_sum = total - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(n_left) +
                             right_sum * right_sum / static_cast<double>(n - n_left);
        if (!best.found || score > best.score) {
          double threshold = lo + (hi - lo) / 2.0;
          // Adjacent doubles: the midpoint may round up to hi.
          if (!(threshold < hi)) threshold = lo;
          best = {f, threshold, score, true};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const TreeParams& params_;
  std::vector<RegressionTree::Node> nodes_;
  std::vector<std::size_t> order_;
};

}  // namespace

RegressionTree fit_tree(const Matrix& x, std::span<const double> y, const TreeParams& params) {
  params.validate();
  if (y.empty() || x.rows() == 0) fail(ErrorCode::empty_input, "cannot fit a tree on zero rows");
  if (x.rows() != y.size()) {
    fail(ErrorCode::dimension_mismatch,
         std::to_string(x.rows()) + " feature rows vs " + std::to_string(y.size()) + " targets");
  }
  TreeBuilder builder(x, y, params);
  return RegressionTree(builder.build(), params, x.cols());
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json to_json(const RegressionTree& tree) {
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& node : tree.nodes()) {
    if (const auto* s = std::get_if<RegressionTree::Split>(&node)) {
      nodes.push_back({{"feature", s->feature},
                       {"threshold", s->threshold},
                       {"left", s->left},
                       {"right", s->right}});
    } else {
      const auto& leaf = std::get<RegressionTree::Leaf>(node);
      nodes.push_back({{"value", leaf.value}, {"n_samples", leaf.n_samples}});
    }
  }
  return {{"n_features", tree.n_features()}, {"params", to_json(tree.params())}, {"nodes", nodes}};
}

RegressionTree tree_from_json(const nlohmann::ordered_json& j) {
  std::vector<RegressionTree::Node> nodes;
  for (const auto& n : j.at("nodes")) {
    if (n.contains("feature")) {
      nodes.emplace_back(RegressionTree::Split{n.at("feature").get<std::size_t>(),
                                               n.at("threshold").get<double>(),
                                               n.at("left").get<std::size_t>(),
                                               n.at("right").get<std::size_t>()});
    } else {
      nodes.emplace_back(
          RegressionTree::Leaf{n.at("value").get<double>(), n.at("n_samples").get<std::size_t>()});
    }
  }
  return RegressionTree(std::move(nodes), tree_params_from_json(j.at("params")),
                        j.at("n_features").get<std::size_t>());
}

}  // namespace htc
