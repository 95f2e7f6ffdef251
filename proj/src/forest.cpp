#include <algorithm>
#include <cmath>
#include <numeric>

#include "osslc/ensemble.hpp"
#include "osslc/error.hpp"
#include "osslc/rng.hpp"

namespace osslc {

void ForestHyperparams::check() const {
  if (n_trees < 1) fail(ErrorKind::InvalidHyperparam, "n_trees must be >= 1");
  if (max_depth < 0) fail(ErrorKind::InvalidHyperparam, "max_depth must be >= 0 (0 = unbounded)");
  if (min_samples_leaf < 1) fail(ErrorKind::InvalidHyperparam, "min_samples_leaf must be >= 1");
  if (min_samples_split < 2) fail(ErrorKind::InvalidHyperparam, "min_samples_split must be >= 2");
  if (max_features < 0) fail(ErrorKind::InvalidHyperparam, "max_features must be >= 0");
}

RandomForestModel train_random_forest(const Dataset& ds, const ForestHyperparams& hp,
                                      std::uint64_t seed) {
  hp.check();
  if (ds.size() == 0) fail(ErrorKind::EmptyInput, "random forest needs at least one row");
  RandomForestModel model;
  model.hyperparams = hp;
  model.classes = ds.classes();
  model.n_features = ds.num_features();

  const std::size_t p = ds.num_features();
  const std::size_t max_features =
      hp.max_features > 0
          ? static_cast<std::size_t>(hp.max_features)
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p)))));

  TreeHyperparams tree_hp;
  tree_hp.max_depth = hp.max_depth;
  tree_hp.min_samples_leaf = hp.min_samples_leaf;
  tree_hp.min_samples_split = hp.min_samples_split;

  Rng master(seed);
  const std::size_t n = ds.size();
  std::vector<std::size_t> rows(n);
  for (int t = 0; t < hp.n_trees; ++t) {
    const std::uint64_t tree_seed = master.derive_seed();
    Rng rng(tree_seed);
    if (hp.bootstrap) {
      for (auto& r : rows) r = rng.uniform_index(n);
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    model.trees.push_back(detail::grow_tree(ds, rows, model.classes, tree_hp, {max_features, &rng}));
    model.tree_seeds.push_back(tree_seed);
  }
  return model;
}

int RandomForestModel::predict_one(std::span<const double> x) const {
  const auto votes = proba_one(x);
  return classes[std::max_element(votes.begin(), votes.end()) - votes.begin()];
}

std::vector<double> RandomForestModel::proba_one(std::span<const double> x) const {
  if (x.size() != n_features) {
    fail(ErrorKind::DimensionMismatch, "row has " + std::to_string(x.size()) +
                                           " features, forest expects " + std::to_string(n_features));
  }
  std::vector<double> votes(classes.size(), 0.0);
  for (const auto& tree : trees) {
    const int label = tree.predict_one(x);
    votes[std::lower_bound(classes.begin(), classes.end(), label) - classes.begin()] += 1.0;
  }
  for (double& v : votes) v /= static_cast<double>(trees.size());
  return votes;
}

std::vector<double> feature_importance(const RandomForestModel& forest) {
  std::vector<double> imp(forest.n_features, 0.0);
  for (const auto& tree : forest.trees) {
    const auto t = feature_importance(tree);
    for (std::size_t f = 0; f < imp.size(); ++f) imp[f] += t[f];
  }
  const double sum = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (sum > 0.0)
    for (double& v : imp) v /= sum;
  return imp;
}

}  // namespace osslc
