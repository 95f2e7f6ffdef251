#include <algorithm>
#include <cmath>
#include <numeric>

#include "osslc/ensemble.hpp"
#include "osslc/error.hpp"

namespace osslc {

namespace {

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

void BoostingHyperparams::check() const {
  if (n_stages < 1) fail(ErrorKind::InvalidHyperparam, "n_stages must be >= 1");
  if (!(learning_rate >= 0.0)) fail(ErrorKind::InvalidHyperparam, "learning_rate must be >= 0");
  if (max_depth < 1) fail(ErrorKind::InvalidHyperparam, "boosting max_depth must be >= 1");
  if (min_samples_leaf < 1) fail(ErrorKind::InvalidHyperparam, "min_samples_leaf must be >= 1");
}

std::vector<double> softmax(std::span<const double> raw) {
  const double lse = log_sum_exp(raw);
  std::vector<double> p(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) p[k] = std::exp(raw[k] - lse);
  return p;
}

double multinomial_deviance(const Matrix& raw, std::span<const int> y) {
  double total = 0.0;
  for (std::size_t i = 0; i < raw.rows(); ++i) total += log_sum_exp(raw.row(i)) - raw(i, y[i]);
  return raw.rows() ? total / static_cast<double>(raw.rows()) : 0.0;
}

Matrix multinomial_deviance_gradient(const Matrix& raw, std::span<const int> y) {
  Matrix grad(raw.rows(), raw.cols());
  const double n = static_cast<double>(raw.rows());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const auto p = softmax(raw.row(i));
    for (std::size_t k = 0; k < raw.cols(); ++k) {
      grad(i, k) = (p[k] - (static_cast<int>(k) == y[i] ? 1.0 : 0.0)) / n;
    }
  }
  return grad;
}

GradientBoostingModel train_gradient_boosting(const Dataset& ds, const BoostingHyperparams& hp,
                                              std::uint64_t /*seed*/) {
  hp.check();
  if (ds.size() == 0) fail(ErrorKind::EmptyInput, "gradient boosting needs at least one row");
  GradientBoostingModel model;
  model.hyperparams = hp;
  model.classes = ds.classes();
  model.n_features = ds.num_features();

  const std::size_t n = ds.size();
  const std::size_t K = model.classes.size();
  std::vector<int> y(n);
  std::vector<double> prior(K, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(std::lower_bound(model.classes.begin(), model.classes.end(), ds.y[i]) -
                            model.classes.begin());
    prior[y[i]] += 1.0;
  }
  for (auto& p : prior) p = std::log(p / static_cast<double>(n));
  model.initial_scores = prior;

  Matrix raw(n, K);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < K; ++k) raw(i, k) = prior[k];

  if (K < 2) return model;  // a single class has nothing to boost

  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> residual(n);
  std::vector<int> leaf_of_row;
  const double newton_scale = static_cast<double>(K - 1) / static_cast<double>(K);

  for (int stage = 0; stage < hp.n_stages; ++stage) {
    // Residuals for every class come from the scores at the start of the stage.
    const Matrix grad = multinomial_deviance_gradient(raw, y);
    std::vector<RegressionTree> trees;
    Matrix update(n, K);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < n; ++i) residual[i] = -grad(i, k) * static_cast<double>(n);
      RegressionTree tree = fit_regression_tree(ds.X, residual, rows, hp.max_depth,
                                                hp.min_samples_leaf, &leaf_of_row);
      std::vector<double> numerator(tree.nodes.size(), 0.0);
      std::vector<double> denominator(tree.nodes.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double r = residual[i];
        numerator[leaf_of_row[i]] += r;
        denominator[leaf_of_row[i]] += std::abs(r) * (1.0 - std::abs(r));
      }
      for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
        auto& node = tree.nodes[id];
        if (node.feature >= 0) continue;
        node.value = denominator[id] < 1e-150 ? 0.0 : newton_scale * numerator[id] / denominator[id];
        node.value *= hp.learning_rate;
      }
      for (std::size_t i = 0; i < n; ++i) update(i, k) = tree.nodes[leaf_of_row[i]].value;
      trees.push_back(std::move(tree));
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < K; ++k) raw(i, k) += update(i, k);
    model.stages.push_back(std::move(trees));
    model.train_deviance.push_back(multinomial_deviance(raw, y));
  }
  return model;
}

std::vector<double> GradientBoostingModel::raw_scores(std::span<const double> x) const {
  if (x.size() != n_features) {
    fail(ErrorKind::DimensionMismatch, "row has " + std::to_string(x.size()) +
                                           " features, model expects " + std::to_string(n_features));
  }
  std::vector<double> raw = initial_scores;
  for (const auto& stage : stages)
    for (std::size_t k = 0; k < stage.size(); ++k) raw[k] += stage[k].predict(x);
  return raw;
}

std::vector<double> GradientBoostingModel::proba_one(std::span<const double> x) const {
  return softmax(raw_scores(x));
}

int GradientBoostingModel::predict_one(std::span<const double> x) const {
  const auto raw = raw_scores(x);
  return classes[std::max_element(raw.begin(), raw.end()) - raw.begin()];
}

std::vector<double> feature_importance(const GradientBoostingModel& model) {
  std::vector<double> imp(model.n_features, 0.0);
  for (const auto& stage : model.stages) {
    for (const auto& tree : stage) {
      for (const auto& node : tree.nodes) {
        if (node.feature < 0) continue;
        const auto& l = tree.nodes[node.left];
        const auto& r = tree.nodes[node.right];
        imp[node.feature] += node.n_samples * node.impurity - l.n_samples * l.impurity -
                             r.n_samples * r.impurity;
      }
    }
  }
  const double sum = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (sum > 0.0)
    for (double& v : imp) v /= sum;
  return imp;
}

}  // namespace osslc
