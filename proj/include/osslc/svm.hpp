#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "osslc/dataset.hpp"
#include "osslc/matrix.hpp"

namespace osslc {

/// Per-feature z-scoring with population standard deviation; zero deviations
/// are stored as 1 so constant columns map to 0.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std;

  Matrix transform(const Matrix& X) const;
  std::vector<double> transform_row(std::span<const double> x) const;
  Matrix inverse_transform(const Matrix& Z) const;
  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

Standardizer fit_standardizer(const Matrix& X);
inline Matrix standardize(const Standardizer& s, const Matrix& X) { return s.transform(X); }

struct SvmHyperparams {
  double C = 1.0;
  double gamma = 0.1;
  double tolerance = 1e-3;
  long max_iterations = 100000;

  void check() const;
  friend bool operator==(const SvmHyperparams&, const SvmHyperparams&) = default;
};

/// Result of one binary dual solve.
struct BinarySvmSolution {
  std::vector<double> alpha;
  double bias = 0.0;  // f(x) = sum_i alpha_i y_i K(x_i, x) + bias
  long iterations = 0;
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// SMO with second-order working-set selection on
///   min 1/2 a^T Q a - e^T a,  0 <= a_i <= C,  y^T a = 0,
/// stopping when the maximal violating pair gap drops below `tolerance`.
/// Labels must be +1/-1. Throws NonConvergence at `max_iterations`.
BinarySvmSolution solve_binary_svm(const Matrix& X, std::span<const double> y,
                                   const SvmHyperparams& hp);

/// Largest KKT violation of a dual solution measured on y_i f(x_i).
double max_kkt_violation(const Matrix& X, std::span<const double> y,
                         const BinarySvmSolution& solution, const SvmHyperparams& hp);

/// One class-vs-rest machine, stored on standardized support vectors.
struct BinarySvm {
  int positive_class = 0;
  Matrix support_vectors;
  std::vector<double> dual_coef;  // alpha_i * y_i
  double bias = 0.0;
  long iterations = 0;

  double decision(std::span<const double> z, double gamma) const;
};

struct SvmRbfModel {
  std::vector<BinarySvm> machines;  // one per class, ascending class code
  std::vector<int> classes;
  SvmHyperparams hyperparams;
  Standardizer standardizer;
  std::size_t n_features = 0;

  std::vector<double> decision_values(std::span<const double> x) const;
  /// Argmax decision value, lowest class code on ties.
  int predict_one(std::span<const double> x) const;
};

/// Standardizes internally, then solves one-vs-rest subproblems. Errors from a
/// subproblem name its class.
SvmRbfModel train_svm_rbf(const Dataset& ds, const SvmHyperparams& hp, std::uint64_t seed = 0);

}  // namespace osslc
