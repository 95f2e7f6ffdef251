#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "osslc/dataset.hpp"
#include "osslc/matrix.hpp"

namespace osslc {

struct IsolationTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double split_value = 0.0;
    int left = -1;
    int right = -1;
    int size = 0;      // rows reaching the node
    friend bool operator==(const Node&, const Node&) = default;
  };
  std::vector<Node> nodes;  // nodes[0] is the root

  int depth() const;
  friend bool operator==(const IsolationTree&, const IsolationTree&) = default;
};

struct IsolationForestModel {
  std::vector<IsolationTree> trees;
  int subsample_size = 0;
  int n_trees = 0;
  double normalizer = 0.0;  // c(subsample_size)
  std::size_t n_features = 0;
};

/// Average unsuccessful-search path length of a binary search tree on n keys:
/// 2 H(n-1) - 2 (n-1) / n, with 0 for n <= 1.
double average_path_length(std::size_t n);

/// Throws EmptyInput when X has no rows; subsample is clamped to |X|.
IsolationForestModel fit_isolation_forest(const Matrix& X, int n_trees, int subsample,
                                          std::uint64_t seed);

/// s(x) = 2^(-E[h(x)] / c(psi)); 0.5 when c(psi) = 0.
double anomaly_score(const IsolationForestModel& model, std::span<const double> x);
std::vector<double> anomaly_scores(const IsolationForestModel& model, const Matrix& X);

struct ContaminationSpec {
  std::map<LifecycleStage, double> fraction;

  // Graduated 0.01, Incubating 0.05, Sandbox 0.10.
  static ContaminationSpec defaults();
  double fraction_for(int label) const;
};

inline constexpr int kDefaultIsolationTrees = 100;
inline constexpr int kDefaultSubsample = 256;

struct OutlierFilterResult {
  Dataset kept;
  std::vector<std::size_t> removed_rows;  // indices into the input, ascending
};

/// Per class: fits a forest on that class's rows and drops the floor(f * n)
/// highest-scoring rows. Equal scores keep the lower row index. Throws
/// UnlabeledRow for rows without a stage code.
OutlierFilterResult filter_class_outliers(const Dataset& ds, const ContaminationSpec& spec,
                                          int n_trees = kDefaultIsolationTrees,
                                          std::uint64_t seed = 0);

std::size_t contamination_count(double fraction, std::size_t n);

}  // namespace osslc
