#include "osslc/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "osslc/error.hpp"
#include "osslc/evaluate.hpp"
#include "osslc/features.hpp"
#include "osslc/parallel.hpp"
#include "osslc/resample.hpp"
#include "osslc/rng.hpp"

namespace osslc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <typename T>
std::vector<T> unique_in_order(const std::vector<T>& values) {
  std::vector<T> out;
  for (const auto& v : values)
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  return out;
}

// Unbounded depth and leaf counts compare as infinite.
long long bound(int v) { return v <= 0 ? std::numeric_limits<long long>::max() : v; }
long long bound(const std::optional<int>& v) { return v ? bound(*v) : std::numeric_limits<long long>::max(); }

template <typename T>
int cmp(const T& a, const T& b) {
  return a < b ? -1 : (b < a ? 1 : 0);
}

}  // namespace

void CvSpec::check() const {
  if (k < 2) fail(ErrorKind::InvalidHyperparam, "cv.k must be at least 2");
  if (repeats < 1) fail(ErrorKind::InvalidHyperparam, "cv.repeats must be at least 1");
  if (smote_k < 0) fail(ErrorKind::InvalidHyperparam, "smote_k must be non-negative");
}

SplitResult stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail(ErrorKind::InvalidHyperparam, "test_fraction must lie in (0, 1)");
  }
  const auto counts = ds.class_counts();
  for (const auto& [label, n] : counts) {
    if (n < 2) {
      fail(ErrorKind::ClassTooSmall,
           "class " + report_class_name(label) + " has " + std::to_string(n) + " row(s), need at least 2");
    }
  }
  const std::size_t n = ds.size();
  const auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(n) - 1e-9));
  const std::size_t n_train = n - n_test;

  // Largest remainder over n_c * n_train / n with exact integer remainders.
  std::vector<int> labels;
  std::vector<std::size_t> train_count;
  std::vector<std::size_t> remainder;
  std::size_t allocated = 0;
  for (const auto& [label, nc] : counts) {
    labels.push_back(label);
    train_count.push_back(nc * n_train / n);
    remainder.push_back(nc * n_train % n);
    allocated += train_count.back();
  }
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; allocated < n_train; ++i, ++allocated) ++train_count[order[i % order.size()]];

  Rng rng(seed);
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    auto rows = ds.rows_of_class(labels[c]);
    rng.shuffle(std::span<std::size_t>(rows));
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(train_count[c]));
    test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(train_count[c]), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {ds.subset(train_rows), ds.subset(test_rows)};
}

std::vector<std::size_t> FoldAssignment::test_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_row.size(); ++i)
    if (fold_of_row[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldAssignment::train_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_row.size(); ++i)
    if (fold_of_row[i] != fold) out.push_back(i);
  return out;
}

FoldAssignment stratified_kfold(const std::vector<int>& y, int k, std::uint64_t seed) {
  if (k < 2) fail(ErrorKind::InvalidHyperparam, "k must be at least 2");
  if (static_cast<std::size_t>(k) > y.size()) {
    fail(ErrorKind::KTooLarge, "k=" + std::to_string(k) + " exceeds the number of rows (" +
                                   std::to_string(y.size()) + ")");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);

  FoldAssignment fa;
  fa.k = k;
  fa.fold_of_row.assign(y.size(), 0);
  Rng rng(seed);
  std::size_t offset = 0;
  for (auto& [label, rows] : by_class) {
    if (rows.size() < static_cast<std::size_t>(k)) {
      fa.warnings.push_back(std::string(to_string(ErrorKind::KTooLarge)) + ": class " +
                            report_class_name(label) + " has " + std::to_string(rows.size()) +
                            " rows for k=" + std::to_string(k) + "; some folds lack it");
    }
    rng.shuffle(std::span<std::size_t>(rows));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      fa.fold_of_row[rows[i]] = static_cast<int>((offset + i) % static_cast<std::size_t>(k));
    }
    offset = (offset + rows.size()) % static_cast<std::size_t>(k);
  }
  return fa;
}

double score_predictions(const std::vector<int>& y_true, const std::vector<int>& y_pred, Scoring scoring) {
  if (y_true.empty()) return 0.0;
  if (scoring == Scoring::Accuracy) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i];
    return static_cast<double>(hits) / static_cast<double>(y_true.size());
  }
  std::set<int> labels(y_true.begin(), y_true.end());
  labels.insert(y_pred.begin(), y_pred.end());
  const auto m = confusion_matrix(y_true, y_pred, {labels.begin(), labels.end()});
  return classification_report(m).macro.f1;
}

std::vector<CvRun> cross_val_score(const Hyperparams& hp, const Dataset& ds, const CvSpec& cv,
                                   const FoldHook& hook) {
  cv.check();
  std::vector<FoldAssignment> assignments;
  for (int r = 0; r < cv.repeats; ++r) {
    assignments.push_back(stratified_kfold(ds.y, cv.k, cv.seed + static_cast<std::uint64_t>(r)));
  }
  const std::size_t cells = static_cast<std::size_t>(cv.repeats) * static_cast<std::size_t>(cv.k);
  std::vector<CvRun> runs(cells);
  parallel_for(cells, cv.jobs, [&](std::size_t cell) {
    const int r = static_cast<int>(cell / static_cast<std::size_t>(cv.k));
    const int f = static_cast<int>(cell % static_cast<std::size_t>(cv.k));
    const std::uint64_t cell_seed = mix_seed(cv.seed + static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(f));
    try {
      const auto& fa = assignments[static_cast<std::size_t>(r)];
      Dataset train = ds.subset(fa.train_rows(f));
      Dataset test = ds.subset(fa.test_rows(f));
      if (hook) hook(train, test, r, f);
      if (cv.smote_k > 0) train = smote_tomek(train, cv.smote_k, cell_seed);
      const auto model = osslc::train(hp, train, cell_seed);
      runs[cell] = {r, f, score_predictions(test.y, predict(model, test.X), cv.scoring)};
    } catch (const Error& e) {
      throw e.annotated("repeat " + std::to_string(r) + ", fold " + std::to_string(f));
    }
  });
  return runs;
}

double mean_score(const std::vector<CvRun>& runs) {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : runs) s += r.score;
  return s / static_cast<double>(runs.size());
}

Family family_of(const Grid& grid) { return static_cast<Family>(grid.index()); }

Grid default_grid(Family family) {
  switch (family) {
    case Family::DecisionTree:
      return TreeGrid{{3, 5, 7, 10, 15}, {2, 5, 10}, {1, 2, 5, 10}, {std::nullopt, 10, 20, 50}, {0.0, 0.0001, 0.001, 0.01}};
    case Family::RandomForest:
      return ForestGrid{{50, 100, 200}, {5, 10, 15}, {1, 2, 5}};
    case Family::GradientBoosting:
      return BoostingGrid{{0.001, 0.01, 0.1}, {3, 5, 7}, {50, 100, 200}};
    case Family::SvmRbf:
      return SvmGrid{{0.001, 0.001, 0.1, 1, 10, 100}, {0.001, 0.01, 0.1, 1, 10}};
  }
  fail(ErrorKind::InvalidHyperparam, "unknown family");
}

std::vector<Hyperparams> expand_grid(const Grid& grid) {
  std::vector<Hyperparams> out;
  std::visit(
      overloaded{
          [&](const TreeGrid& g) {
            for (int d : unique_in_order(g.max_depth))
              for (int mss : unique_in_order(g.min_samples_split))
                for (int msl : unique_in_order(g.min_samples_leaf))
                  for (const auto& mln : unique_in_order(g.max_leaf_nodes))
                    for (double a : unique_in_order(g.ccp_alpha)) {
                      TreeHyperparams h;
                      h.max_depth = d;
                      h.min_samples_split = mss;
                      h.min_samples_leaf = msl;
                      h.max_leaf_nodes = mln;
                      h.ccp_alpha = a;
                      out.emplace_back(h);
                    }
          },
          [&](const ForestGrid& g) {
            for (int n : unique_in_order(g.n_trees))
              for (int d : unique_in_order(g.max_depth))
                for (int msl : unique_in_order(g.min_samples_leaf)) {
                  ForestHyperparams h;
                  h.n_trees = n;
                  h.max_depth = d;
                  h.min_samples_leaf = msl;
                  out.emplace_back(h);
                }
          },
          [&](const BoostingGrid& g) {
            for (double lr : unique_in_order(g.learning_rate))
              for (int d : unique_in_order(g.max_depth))
                for (int n : unique_in_order(g.n_stages)) {
                  BoostingHyperparams h;
                  h.learning_rate = lr;
                  h.max_depth = d;
                  h.n_stages = n;
                  out.emplace_back(h);
                }
          },
          [&](const SvmGrid& g) {
            for (double c : unique_in_order(g.C))
              for (double gamma : unique_in_order(g.gamma)) {
                SvmHyperparams h;
                h.C = c;
                h.gamma = gamma;
                out.emplace_back(h);
              }
          },
      },
      grid);
  return out;
}

int compare_complexity(const Hyperparams& a, const Hyperparams& b) {
  if (a.index() != b.index()) return cmp(a.index(), b.index());
  if (const auto* x = std::get_if<TreeHyperparams>(&a)) {
    const auto& y = std::get<TreeHyperparams>(b);
    if (int c = cmp(bound(x->max_depth), bound(y.max_depth))) return c;
    if (int c = cmp(bound(x->max_leaf_nodes), bound(y.max_leaf_nodes))) return c;
    if (int c = cmp(y.min_samples_leaf, x->min_samples_leaf)) return c;
    if (int c = cmp(y.min_samples_split, x->min_samples_split)) return c;
    return cmp(y.ccp_alpha, x->ccp_alpha);
  }
  if (const auto* x = std::get_if<ForestHyperparams>(&a)) {
    const auto& y = std::get<ForestHyperparams>(b);
    if (int c = cmp(x->n_trees, y.n_trees)) return c;
    if (int c = cmp(bound(x->max_depth), bound(y.max_depth))) return c;
    return cmp(y.min_samples_leaf, x->min_samples_leaf);
  }
  if (const auto* x = std::get_if<BoostingHyperparams>(&a)) {
    const auto& y = std::get<BoostingHyperparams>(b);
    if (int c = cmp(x->n_stages, y.n_stages)) return c;
    if (int c = cmp(x->max_depth, y.max_depth)) return c;
    return cmp(x->learning_rate, y.learning_rate);
  }
  const auto& x = std::get<SvmHyperparams>(a);
  const auto& y = std::get<SvmHyperparams>(b);
  if (int c = cmp(x.C, y.C)) return c;
  return cmp(x.gamma, y.gamma);
}

GridResult grid_search(const Grid& grid, const Dataset& ds, const CvSpec& cv) {
  const auto combos = expand_grid(grid);
  if (combos.empty()) fail(ErrorKind::EmptyGrid, "hyperparameter grid is empty");
  GridResult result;
  result.family = family_of(grid);
  result.entries.resize(combos.size());
  CvSpec inner = cv;
  inner.jobs = 1;
  parallel_for(combos.size(), cv.jobs, [&](std::size_t i) {
    try {
      auto& e = result.entries[i];
      e.hyperparams = combos[i];
      e.runs = cross_val_score(combos[i], ds, inner);
      e.mean = mean_score(e.runs);
      double ss = 0.0;
      for (const auto& r : e.runs) ss += (r.score - e.mean) * (r.score - e.mean);
      e.std = std::sqrt(ss / static_cast<double>(e.runs.size()));
    } catch (const Error& err) {
      throw err.annotated(describe(combos[i]));
    }
  });
  for (std::size_t i = 1; i < result.entries.size(); ++i) {
    const auto& cand = result.entries[i];
    const auto& best = result.entries[result.best];
    if (cand.mean > best.mean ||
        (cand.mean == best.mean && compare_complexity(cand.hyperparams, best.hyperparams) < 0)) {
      result.best = i;
    }
  }
  result.selection_rule = "max mean CV score; ties -> lower complexity, then grid order";
  return result;
}

std::string grid_runs_csv(const GridResult& result) {
  std::ostringstream out;
  out << "combination_id,repeat,fold,score\n";
  for (std::size_t i = 0; i < result.entries.size(); ++i)
    for (const auto& r : result.entries[i].runs)
      out << i << ',' << r.repeat << ',' << r.fold << ',' << format_double(r.score) << '\n';
  return out.str();
}

SfsTrajectory forward_sfs(const Hyperparams& hp, const Dataset& ds, const CvSpec& cv) {
  const std::size_t p = ds.num_features();
  if (p == 0) fail(ErrorKind::EmptyInput, "feature selection needs at least one feature");
  SfsTrajectory traj;
  std::vector<std::size_t> current;
  std::vector<bool> used(p, false);
  CvSpec inner = cv;
  inner.jobs = 1;
  for (std::size_t step = 0; step < p; ++step) {
    std::vector<std::size_t> candidates;
    for (std::size_t f = 0; f < p; ++f)
      if (!used[f]) candidates.push_back(f);
    std::vector<double> scores(candidates.size());
    parallel_for(candidates.size(), cv.jobs, [&](std::size_t i) {
      auto cols = current;
      cols.push_back(candidates[i]);
      std::sort(cols.begin(), cols.end());
      scores[i] = mean_score(cross_val_score(hp, ds.select_features(cols), inner));
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
      if (scores[i] > scores[best]) best = i;
    used[candidates[best]] = true;
    current.push_back(candidates[best]);
    auto sorted = current;
    std::sort(sorted.begin(), sorted.end());
    traj.steps.push_back({candidates[best], sorted, scores[best]});
  }
  std::size_t chosen = 0;
  for (std::size_t i = 1; i < traj.steps.size(); ++i)
    if (traj.steps[i].mean_score > traj.steps[chosen].mean_score) chosen = i;
  traj.chosen = traj.steps[chosen].features;
  traj.chosen_score = traj.steps[chosen].mean_score;
  return traj;
}

ModelDocument finalize(const Hyperparams& hp, const std::vector<std::size_t>& features,
                       const Dataset& train, const FinalizeOptions& options) {
  if (features.empty()) fail(ErrorKind::EmptyInput, "no features selected");
  Dataset fit = options.smote_k > 0 ? smote_tomek(train, options.smote_k, options.seed) : train;
  fit = fit.select_features(features);
  ModelDocument doc{osslc::train(hp, fit, options.seed), fit.column_names, nlohmann::json::object()};
  doc.provenance = {{"seed", options.seed},
                    {"smote_k", options.smote_k},
                    {"family", family_name(family_of(hp))},
                    {"hyperparams", hyperparams_to_json(hp)},
                    {"features", fit.column_names},
                    {"training_rows", train.size()},
                    {"resampled_rows", fit.size()}};
  return doc;
}

}  // namespace osslc
