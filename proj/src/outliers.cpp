#include "osslc/outliers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "osslc/error.hpp"
#include "osslc/rng.hpp"

namespace osslc {

namespace {

class IsolationTreeBuilder {
 public:
  IsolationTreeBuilder(const Matrix& X, int depth_limit, Rng& rng)
      : X_(X), depth_limit_(depth_limit), rng_(rng) {}

  IsolationTree build(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::span<std::size_t> rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[id].size = static_cast<int>(rows.size());
    if (rows.size() <= 1 || depth >= depth_limit_) return id;

    // Features constant on this slice cannot separate it.
    std::vector<std::size_t> usable;
    std::vector<std::pair<double, double>> ranges;
    for (std::size_t f = 0; f < X_.cols(); ++f) {
      double lo = X_(rows[0], f), hi = lo;
      for (auto r : rows) {
        lo = std::min(lo, X_(r, f));
        hi = std::max(hi, X_(r, f));
      }
      if (lo < hi) {
        usable.push_back(f);
        ranges.emplace_back(lo, hi);
      }
    }
    if (usable.empty()) return id;

    const std::size_t pick = rng_.uniform_index(usable.size());
    const auto [lo, hi] = ranges[pick];
    double split;
    do split = lo + rng_.uniform01() * (hi - lo); while (!(split > lo && split < hi));

    const std::size_t f = usable[pick];
    auto mid = std::stable_partition(rows.begin(), rows.end(),
                                     [&](std::size_t r) { return X_(r, f) < split; });
    const auto n_left = static_cast<std::size_t>(mid - rows.begin());
    const int left = grow(rows.subspan(0, n_left), depth + 1);
    const int right = grow(rows.subspan(n_left), depth + 1);
    auto& node = tree_.nodes[id];
    node.feature = static_cast<int>(f);
    node.split_value = split;
    node.left = left;
    node.right = right;
    return id;
  }

  const Matrix& X_;
  int depth_limit_;
  Rng& rng_;
  IsolationTree tree_;
};

double path_length(const IsolationTree& tree, std::span<const double> x) {
  int node = 0;
  int depth = 0;
  while (tree.nodes[node].feature >= 0) {
    const auto& n = tree.nodes[node];
    node = x[n.feature] < n.split_value ? n.left : n.right;
    ++depth;
  }
  return depth + average_path_length(static_cast<std::size_t>(tree.nodes[node].size));
}

}  // namespace

int IsolationTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature < 0) continue;
    d[nodes[i].left] = d[i] + 1;
    d[nodes[i].right] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  double harmonic = 0.0;
  for (std::size_t i = 1; i < n; ++i) harmonic += 1.0 / static_cast<double>(i);
  const double nd = static_cast<double>(n);
  return 2.0 * harmonic - 2.0 * (nd - 1.0) / nd;
}

IsolationForestModel fit_isolation_forest(const Matrix& X, int n_trees, int subsample,
                                          std::uint64_t seed) {
  if (X.rows() == 0) fail(ErrorKind::EmptyInput, "isolation forest needs at least one row");
  if (n_trees < 1) fail(ErrorKind::InvalidHyperparam, "isolation forest needs n_trees >= 1");
  const std::size_t psi = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(subsample, 1)), 1, X.rows());
  const int depth_limit = static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));

  IsolationForestModel model;
  model.subsample_size = static_cast<int>(psi);
  model.n_trees = n_trees;
  model.normalizer = average_path_length(psi);
  model.n_features = X.cols();

  Rng master(seed);
  std::vector<std::size_t> all(X.rows());
  for (int t = 0; t < n_trees; ++t) {
    Rng rng(master.derive_seed());
    std::iota(all.begin(), all.end(), 0);
    // Partial Fisher-Yates: the first psi entries are a uniform sample.
    for (std::size_t i = 0; i < psi; ++i) {
      std::swap(all[i], all[i + rng.uniform_index(all.size() - i)]);
    }
    std::vector<std::size_t> sample(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(psi));
    IsolationTreeBuilder builder(X, depth_limit, rng);
    model.trees.push_back(builder.build(std::move(sample)));
  }
  return model;
}

double anomaly_score(const IsolationForestModel& model, std::span<const double> x) {
  if (x.size() != model.n_features) {
    fail(ErrorKind::DimensionMismatch, "row has " + std::to_string(x.size()) +
                                           " features, model expects " +
                                           std::to_string(model.n_features));
  }
  if (model.normalizer <= 0.0) return 0.5;
  double total = 0.0;
  for (const auto& tree : model.trees) total += path_length(tree, x);
  const double mean = total / static_cast<double>(model.trees.size());
  return std::exp2(-mean / model.normalizer);
}

std::vector<double> anomaly_scores(const IsolationForestModel& model, const Matrix& X) {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = anomaly_score(model, X.row(r));
  return out;
}

ContaminationSpec ContaminationSpec::defaults() {
  return {{{LifecycleStage::Graduated, 0.01},
           {LifecycleStage::Incubating, 0.05},
           {LifecycleStage::Sandbox, 0.10}}};
}

double ContaminationSpec::fraction_for(int label) const {
  auto it = fraction.find(static_cast<LifecycleStage>(label));
  return it == fraction.end() ? 0.0 : it->second;
}

std::size_t contamination_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

OutlierFilterResult filter_class_outliers(const Dataset& ds, const ContaminationSpec& spec,
                                          int n_trees, std::uint64_t seed) {
  for (const auto& [stage, f] : spec.fraction) {
    if (!(f >= 0.0 && f < 1.0)) {
      fail(ErrorKind::InvalidHyperparam, "contamination for " + std::string(stage_name(stage)) +
                                             " must be in [0, 1)");
    }
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.y[i] < 0 || ds.y[i] >= kNumStages) {
      fail(ErrorKind::UnlabeledRow, "row " + ds.row_ids[i] + " has no lifecycle label");
    }
  }
  std::vector<bool> drop(ds.size(), false);
  for (int label : ds.classes()) {
    const auto rows = ds.rows_of_class(label);
    const std::size_t remove = contamination_count(spec.fraction_for(label), rows.size());
    if (remove == 0) continue;
    const Matrix X = ds.X.select_rows(rows);
    const auto model = fit_isolation_forest(X, n_trees, kDefaultSubsample,
                                            seed + static_cast<std::uint64_t>(label));
    const auto scores = anomaly_scores(model, X);
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    // Highest score first; among equal scores the higher index goes first so
    // the lower index is kept.
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a > b;
    });
    for (std::size_t i = 0; i < remove; ++i) drop[rows[order[i]]] = true;
  }
  OutlierFilterResult result;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (drop[i]) {
      result.removed_rows.push_back(i);
    } else {
      keep.push_back(i);
    }
  }
  result.kept = ds.subset(keep);
  return result;
}

}  // namespace osslc
