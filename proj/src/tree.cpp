#include "osslc/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "osslc/error.hpp"

namespace osslc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// True when `candidate` beats `best` by more than rounding noise, so exact
// ties fall back to scan order (lower feature, then lower threshold).
bool improves(double candidate, double best) {
  if (best == kNegInf) return true;
  return candidate > best + 1e-12 * std::max(1.0, std::abs(best));
}

double midpoint(double lo, double hi) {
  double t = lo + (hi - lo) / 2.0;
  if (!(t < hi)) t = lo;
  return t;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double proxy = kNegInf;  // sum_k cL_k^2/nL + sum_k cR_k^2/nR
};

class ClassificationBuilder {
 public:
  ClassificationBuilder(const Dataset& ds, const std::vector<int>& classes,
                        const TreeHyperparams& hp, detail::FeatureSampling sampling)
      : ds_(ds), hp_(hp), sampling_(sampling), k_(classes.size()) {
    class_of_row_.resize(ds.size());
    for (std::size_t r = 0; r < ds.size(); ++r) {
      auto it = std::lower_bound(classes.begin(), classes.end(), ds.y[r]);
      if (it == classes.end() || *it != ds.y[r]) {
        fail(ErrorKind::UnknownLabel, "label " + std::to_string(ds.y[r]) + " not among tree classes");
      }
      class_of_row_[r] = static_cast<std::size_t>(it - classes.begin());
    }
    model_.classes = classes;
    model_.hyperparams = hp;
    model_.n_features = ds.num_features();
  }

  DecisionTreeModel build(std::vector<std::size_t> rows) {
    if (hp_.max_leaf_nodes) {
      build_best_first(std::move(rows));
    } else {
      build_depth_first(std::move(rows), 0);
    }
    return std::move(model_);
  }

 private:
  int make_node(const std::vector<std::size_t>& rows) {
    TreeNode node;
    node.class_counts.assign(k_, 0.0);
    for (auto r : rows) node.class_counts[class_of_row_[r]] += 1.0;
    node.n_samples = static_cast<int>(rows.size());
    node.impurity = gini(node.class_counts);
    model_.nodes.push_back(std::move(node));
    return static_cast<int>(model_.nodes.size()) - 1;
  }

  bool splittable(const TreeNode& node, int depth) const {
    if (hp_.max_depth > 0 && depth >= hp_.max_depth) return false;
    if (node.n_samples < hp_.min_samples_split) return false;
    if (node.n_samples < 2 * hp_.min_samples_leaf) return false;
    return node.impurity > 0.0;
  }

  std::vector<std::size_t> candidate_features(const std::vector<std::size_t>& rows) {
    const std::size_t p = ds_.num_features();
    std::vector<std::size_t> all(p);
    std::iota(all.begin(), all.end(), 0);
    if (sampling_.max_features == 0 || sampling_.max_features >= p || sampling_.rng == nullptr) {
      return all;
    }
    sampling_.rng->shuffle(std::span<std::size_t>(all));
    // Features constant in this node do not count toward max_features.
    std::vector<std::size_t> picked;
    for (auto f : all) {
      if (picked.size() == sampling_.max_features) break;
      const double first = ds_.X(rows.front(), f);
      const bool constant =
          std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return ds_.X(r, f) == first; });
      if (!constant) picked.push_back(f);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
  }

  Split find_split(const std::vector<std::size_t>& rows, const TreeNode& node) {
    Split best;
    const std::size_t n = rows.size();
    const auto msl = static_cast<std::size_t>(hp_.min_samples_leaf);
    std::vector<std::pair<double, std::size_t>> sorted(n);
    std::vector<double> left(k_), right(k_);
    for (auto f : candidate_features(rows)) {
      for (std::size_t i = 0; i < n; ++i) sorted[i] = {ds_.X(rows[i], f), rows[i]};
      std::sort(sorted.begin(), sorted.end());
      std::fill(left.begin(), left.end(), 0.0);
      right = node.class_counts;
      double left_sq = 0.0;
      double right_sq = 0.0;
      for (double c : right) right_sq += c * c;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t c = class_of_row_[sorted[i].second];
        left_sq += 2.0 * left[c] + 1.0;
        right_sq -= 2.0 * right[c] - 1.0;
        left[c] += 1.0;
        right[c] -= 1.0;
        if (!(sorted[i].first < sorted[i + 1].first)) continue;
        const std::size_t n_left = i + 1;
        if (n_left < msl || n - n_left < msl) continue;
        const double proxy = left_sq / static_cast<double>(n_left) +
                             right_sq / static_cast<double>(n - n_left);
        if (improves(proxy, best.proxy)) {
          best.feature = static_cast<int>(f);
          best.threshold = midpoint(sorted[i].first, sorted[i + 1].first);
          best.proxy = proxy;
        }
      }
    }
    return best;
  }

  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition(
      const std::vector<std::size_t>& rows, const Split& split) const {
    std::vector<std::size_t> l, r;
    for (auto row : rows) (ds_.X(row, split.feature) <= split.threshold ? l : r).push_back(row);
    return {std::move(l), std::move(r)};
  }

  int build_depth_first(std::vector<std::size_t> rows, int depth) {
    const int id = make_node(rows);
    if (!splittable(model_.nodes[id], depth)) return id;
    const Split split = find_split(rows, model_.nodes[id]);
    if (split.feature < 0) return id;
    auto [l, r] = partition(rows, split);
    rows.clear();
    rows.shrink_to_fit();
    const int left = build_depth_first(std::move(l), depth + 1);
    const int right = build_depth_first(std::move(r), depth + 1);
    auto& node = model_.nodes[id];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  struct Frontier {
    int node;
    int depth;
    std::vector<std::size_t> rows;
    Split split;
    double improvement;
  };

  void build_best_first(std::vector<std::size_t> rows) {
    auto evaluate = [&](int id, int depth, std::vector<std::size_t> node_rows) {
      Frontier f{id, depth, std::move(node_rows), {}, kNegInf};
      const auto& node = model_.nodes[id];
      if (splittable(node, depth)) {
        f.split = find_split(f.rows, node);
        if (f.split.feature >= 0) {
          const double n = node.n_samples;
          // n * (impurity - weighted child impurity), from the proxy identity.
          f.improvement = n * node.impurity - n + f.split.proxy;
        }
      }
      return f;
    };
    auto cmp = [](const Frontier& a, const Frontier& b) {
      if (a.improvement != b.improvement) return a.improvement < b.improvement;
      return a.node > b.node;
    };
    std::priority_queue<Frontier, std::vector<Frontier>, decltype(cmp)> heap(cmp);
    const int root = make_node(rows);
    heap.push(evaluate(root, 0, std::move(rows)));
    int leaves = 1;
    while (!heap.empty() && leaves < *hp_.max_leaf_nodes) {
      Frontier top = heap.top();
      heap.pop();
      if (top.split.feature < 0) continue;
      auto [l, r] = partition(top.rows, top.split);
      const int left = make_node(l);
      const int right = make_node(r);
      auto& node = model_.nodes[top.node];
      node.feature = top.split.feature;
      node.threshold = top.split.threshold;
      node.left = left;
      node.right = right;
      ++leaves;
      heap.push(evaluate(left, top.depth + 1, std::move(l)));
      heap.push(evaluate(right, top.depth + 1, std::move(r)));
    }
  }

  const Dataset& ds_;
  TreeHyperparams hp_;
  detail::FeatureSampling sampling_;
  std::size_t k_;
  std::vector<std::size_t> class_of_row_;
  DecisionTreeModel model_;
};

// Copies the subtree reachable from the root, turning collapsed nodes into
// leaves, in preorder.
DecisionTreeModel compact(const DecisionTreeModel& tree, const std::vector<bool>& collapsed) {
  DecisionTreeModel out;
  out.hyperparams = tree.hyperparams;
  out.classes = tree.classes;
  out.n_features = tree.n_features;
  auto copy = [&](auto&& self, int id) -> int {
    const int new_id = static_cast<int>(out.nodes.size());
    out.nodes.push_back(tree.nodes[id]);
    if (tree.nodes[id].is_leaf() || collapsed[id]) {
      auto& n = out.nodes[new_id];
      n.feature = -1;
      n.threshold = 0.0;
      n.left = n.right = -1;
      return new_id;
    }
    const int l = self(self, tree.nodes[id].left);
    const int r = self(self, tree.nodes[id].right);
    out.nodes[new_id].left = l;
    out.nodes[new_id].right = r;
    return new_id;
  };
  if (!tree.nodes.empty()) copy(copy, 0);
  return out;
}

}  // namespace

void TreeHyperparams::check() const {
  if (max_depth < 0) fail(ErrorKind::InvalidHyperparam, "max_depth must be >= 0 (0 = unbounded)");
  if (min_samples_split < 2) fail(ErrorKind::InvalidHyperparam, "min_samples_split must be >= 2");
  if (min_samples_leaf < 1) fail(ErrorKind::InvalidHyperparam, "min_samples_leaf must be >= 1");
  if (max_leaf_nodes && *max_leaf_nodes < 2) {
    fail(ErrorKind::InvalidHyperparam, "max_leaf_nodes must be >= 2");
  }
  if (!(ccp_alpha >= 0.0)) fail(ErrorKind::InvalidHyperparam, "ccp_alpha must be >= 0");
}

double gini(std::span<const double> counts) {
  double n = 0.0, sq = 0.0;
  for (double c : counts) {
    n += c;
    sq += c * c;
  }
  return n > 0.0 ? 1.0 - sq / (n * n) : 0.0;
}

int DecisionTreeModel::leaf_for(std::span<const double> x) const {
  if (x.size() != n_features) {
    fail(ErrorKind::DimensionMismatch, "row has " + std::to_string(x.size()) +
                                           " features, tree expects " + std::to_string(n_features));
  }
  int id = 0;
  while (!nodes[id].is_leaf()) {
    const auto& n = nodes[id];
    id = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return id;
}

int DecisionTreeModel::predict_one(std::span<const double> x) const {
  const auto& counts = nodes[leaf_for(x)].class_counts;
  // max_element returns the first maximum, i.e. the lowest class code.
  return classes[std::max_element(counts.begin(), counts.end()) - counts.begin()];
}

std::vector<double> DecisionTreeModel::proba_one(std::span<const double> x) const {
  const auto& node = nodes[leaf_for(x)];
  std::vector<double> p(node.class_counts.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = node.class_counts[k] / node.n_samples;
  return p;
}

std::size_t DecisionTreeModel::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int DecisionTreeModel::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

double split_gain(const DecisionTreeModel& tree, int id) {
  const auto& n = tree.nodes[id];
  if (n.is_leaf()) return 0.0;
  const auto& l = tree.nodes[n.left];
  const auto& r = tree.nodes[n.right];
  const double total = tree.nodes[0].n_samples;
  return (n.n_samples * n.impurity - l.n_samples * l.impurity - r.n_samples * r.impurity) / total;
}

namespace detail {

DecisionTreeModel grow_tree(const Dataset& ds, std::span<const std::size_t> rows,
                            const std::vector<int>& classes, const TreeHyperparams& hp,
                            FeatureSampling sampling) {
  ClassificationBuilder builder(ds, classes, hp, sampling);
  return builder.build(std::vector<std::size_t>(rows.begin(), rows.end()));
}

}  // namespace detail

DecisionTreeModel train_decision_tree(const Dataset& ds, const TreeHyperparams& hp,
                                      std::uint64_t /*seed*/) {
  hp.check();
  if (ds.size() == 0) fail(ErrorKind::EmptyInput, "decision tree needs at least one row");
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), 0);
  auto tree = detail::grow_tree(ds, rows, ds.classes(), hp, {});
  return prune_cost_complexity(tree, hp.ccp_alpha);
}

DecisionTreeModel prune_cost_complexity(const DecisionTreeModel& tree, double alpha) {
  if (!(alpha >= 0.0)) fail(ErrorKind::InvalidHyperparam, "pruning alpha must be >= 0");
  if (alpha == 0.0 || tree.nodes.empty()) return tree;
  const std::size_t n = tree.nodes.size();
  const double total = tree.nodes[0].n_samples;
  std::vector<double> cost(n);
  for (std::size_t i = 0; i < n; ++i) cost[i] = tree.nodes[i].n_samples / total * tree.nodes[i].impurity;

  std::vector<bool> collapsed(n, false);
  std::vector<double> subtree_cost(n);
  std::vector<double> subtree_leaves(n);
  std::vector<bool> reachable(n);
  std::vector<double> link(n);
  while (true) {
    std::fill(reachable.begin(), reachable.end(), false);
    reachable[0] = true;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& node = tree.nodes[i];
      if (reachable[i] && !node.is_leaf() && !collapsed[i]) {
        reachable[node.left] = reachable[node.right] = true;
      }
    }
    // Children always have larger indices, so a reverse sweep is post-order.
    double weakest = std::numeric_limits<double>::infinity();
    for (std::size_t i = n; i-- > 0;) {
      const auto& node = tree.nodes[i];
      if (node.is_leaf() || collapsed[i]) {
        subtree_cost[i] = cost[i];
        subtree_leaves[i] = 1.0;
        continue;
      }
      subtree_cost[i] = subtree_cost[node.left] + subtree_cost[node.right];
      subtree_leaves[i] = subtree_leaves[node.left] + subtree_leaves[node.right];
      link[i] = (cost[i] - subtree_cost[i]) / (subtree_leaves[i] - 1.0);
      if (reachable[i]) weakest = std::min(weakest, link[i]);
    }
    if (!(weakest <= alpha)) break;
    for (std::size_t i = 0; i < n; ++i) {
      if (reachable[i] && !tree.nodes[i].is_leaf() && !collapsed[i] && link[i] <= weakest) {
        collapsed[i] = true;
      }
    }
  }
  return compact(tree, collapsed);
}

std::vector<double> feature_importance(const DecisionTreeModel& tree) {
  std::vector<double> imp(tree.n_features, 0.0);
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) continue;
    const auto& l = tree.nodes[node.left];
    const auto& r = tree.nodes[node.right];
    imp[node.feature] +=
        node.n_samples * node.impurity - l.n_samples * l.impurity - r.n_samples * r.impurity;
  }
  const double sum = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (sum > 0.0)
    for (double& v : imp) v /= sum;
  return imp;
}

// ---------------------------------------------------------------------------
// Regression trees

int RegressionTree::leaf_for(std::span<const double> x) const {
  int id = 0;
  while (nodes[id].feature >= 0) {
    const auto& n = nodes[id];
    id = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return id;
}

namespace {

class RegressionBuilder {
 public:
  RegressionBuilder(const Matrix& X, std::span<const double> target, int max_depth, int min_samples_leaf)
      : X_(X), target_(target), max_depth_(max_depth), msl_(static_cast<std::size_t>(min_samples_leaf)) {}

  int build(std::vector<std::size_t> rows, int depth, std::vector<int>* leaf_of_row,
            const std::vector<std::size_t>& positions) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    const std::size_t n = rows.size();
    double sum = 0.0, sq = 0.0;
    for (auto r : rows) {
      sum += target_[r];
      sq += target_[r] * target_[r];
    }
    const double mean = n ? sum / n : 0.0;
    {
      auto& node = tree_.nodes[id];
      node.n_samples = static_cast<int>(n);
      node.value = mean;
      node.impurity = n ? std::max(0.0, sq / n - mean * mean) : 0.0;
    }
    auto as_leaf = [&] {
      if (leaf_of_row)
        for (auto pos : positions) (*leaf_of_row)[pos] = id;
      return id;
    };
    if ((max_depth_ > 0 && depth >= max_depth_) || n < 2 || n < 2 * msl_ ||
        tree_.nodes[id].impurity <= 1e-15) {
      return as_leaf();
    }

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_proxy = kNegInf;
    std::vector<std::pair<double, std::size_t>> sorted(n);
    for (std::size_t f = 0; f < X_.cols(); ++f) {
      for (std::size_t i = 0; i < n; ++i) sorted[i] = {X_(rows[i], f), i};
      std::sort(sorted.begin(), sorted.end());
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += target_[rows[sorted[i].second]];
        if (!(sorted[i].first < sorted[i + 1].first)) continue;
        const std::size_t nl = i + 1;
        if (nl < msl_ || n - nl < msl_) continue;
        const double right_sum = sum - left_sum;
        const double proxy = left_sum * left_sum / nl + right_sum * right_sum / (n - nl);
        if (improves(proxy, best_proxy)) {
          best_proxy = proxy;
          best_feature = static_cast<int>(f);
          best_threshold = midpoint(sorted[i].first, sorted[i + 1].first);
        }
      }
    }
    if (best_feature < 0) return as_leaf();

    std::vector<std::size_t> lrows, rrows, lpos, rpos;
    for (std::size_t i = 0; i < n; ++i) {
      const bool go_left = X_(rows[i], best_feature) <= best_threshold;
      (go_left ? lrows : rrows).push_back(rows[i]);
      if (leaf_of_row) (go_left ? lpos : rpos).push_back(positions[i]);
    }
    const int l = build(std::move(lrows), depth + 1, leaf_of_row, lpos);
    const int r = build(std::move(rrows), depth + 1, leaf_of_row, rpos);
    auto& node = tree_.nodes[id];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  RegressionTree take() { return std::move(tree_); }

 private:
  const Matrix& X_;
  std::span<const double> target_;
  int max_depth_;
  std::size_t msl_;
  RegressionTree tree_;
};

}  // namespace

RegressionTree fit_regression_tree(const Matrix& X, std::span<const double> target,
                                   std::span<const std::size_t> rows, int max_depth,
                                   int min_samples_leaf, std::vector<int>* leaf_of_row) {
  RegressionBuilder builder(X, target, max_depth, std::max(1, min_samples_leaf));
  std::vector<std::size_t> positions;
  if (leaf_of_row) {
    leaf_of_row->assign(rows.size(), -1);
    positions.resize(rows.size());
    std::iota(positions.begin(), positions.end(), 0);
  }
  builder.build(std::vector<std::size_t>(rows.begin(), rows.end()), 0, leaf_of_row, positions);
  return builder.take();
}

}  // namespace osslc
