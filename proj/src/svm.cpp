#include "osslc/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "osslc/error.hpp"

namespace osslc {

namespace {
constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

Standardizer fit_standardizer(const Matrix& X) {
  if (X.rows() == 0) fail(ErrorKind::EmptyInput, "cannot fit a standardizer on zero rows");
  Standardizer s;
  s.mean.assign(X.cols(), 0.0);
  s.std.assign(X.cols(), 0.0);
  const double n = static_cast<double>(X.rows());
  for (std::size_t c = 0; c < X.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) sum += X(r, c);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) ss += (X(r, c) - mean) * (X(r, c) - mean);
    const double sd = std::sqrt(ss / n);
    s.mean[c] = mean;
    s.std[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

std::vector<double> Standardizer::transform_row(std::span<const double> x) const {
  if (x.size() != mean.size()) fail(ErrorKind::DimensionMismatch, "standardizer width mismatch");
  std::vector<double> z(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) z[c] = (x[c] - mean[c]) / std[c];
  return z;
}

Matrix Standardizer::transform(const Matrix& X) const {
  if (X.cols() != mean.size()) fail(ErrorKind::DimensionMismatch, "standardizer width mismatch");
  Matrix Z(X.rows(), X.cols());
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t c = 0; c < X.cols(); ++c) Z(r, c) = (X(r, c) - mean[c]) / std[c];
  return Z;
}

Matrix Standardizer::inverse_transform(const Matrix& Z) const {
  if (Z.cols() != mean.size()) fail(ErrorKind::DimensionMismatch, "standardizer width mismatch");
  Matrix X(Z.rows(), Z.cols());
  for (std::size_t r = 0; r < Z.rows(); ++r)
    for (std::size_t c = 0; c < Z.cols(); ++c) X(r, c) = Z(r, c) * std[c] + mean[c];
  return X;
}

void SvmHyperparams::check() const {
  if (!(C > 0.0)) fail(ErrorKind::InvalidHyperparam, "SVM C must be > 0");
  if (!(gamma > 0.0)) fail(ErrorKind::InvalidHyperparam, "SVM gamma must be > 0");
  if (!(tolerance > 0.0)) fail(ErrorKind::InvalidHyperparam, "SVM tolerance must be > 0");
  if (max_iterations < 1) fail(ErrorKind::InvalidHyperparam, "SVM max_iterations must be >= 1");
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  return std::exp(-gamma * squared_distance(a, b));
}

BinarySvmSolution solve_binary_svm(const Matrix& X, std::span<const double> y,
                                   const SvmHyperparams& hp) {
  const std::size_t n = X.rows();
  const double C = hp.C;
  Matrix K(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    K(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) K(i, j) = K(j, i) = rbf_kernel(X.row(i), X.row(j), hp.gamma);
  }
  auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * K(i, j); };

  std::vector<double> alpha(n, 0.0);
  std::vector<double> G(n, -1.0);  // gradient of the dual objective
  auto upper = [&](std::size_t t) { return alpha[t] >= C; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  BinarySvmSolution sol;
  long iter = 0;
  while (true) {
    // i: maximal violator in I_up.
    double gmax = -kInf;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      const bool in_up = y[t] > 0 ? !upper(t) : !lower(t);
      if (in_up && -y[t] * G[t] > gmax) {
        gmax = -y[t] * G[t];
        i = t;
      }
    }
    // j: second-order choice in I_low; gmax2 tracks the maximal -min.
    double gmax2 = -kInf;
    double best_obj = kInf;
    std::size_t j = n;
    for (std::size_t t = 0; t < n && i < n; ++t) {
      const bool in_low = y[t] > 0 ? !lower(t) : !upper(t);
      if (!in_low) continue;
      const double yg = y[t] * G[t];
      gmax2 = std::max(gmax2, yg);
      const double grad_diff = gmax + yg;
      if (grad_diff > 0.0) {
        double quad = K(i, i) + K(t, t) - 2.0 * K(i, t);
        if (quad <= 0.0) quad = kTau;
        const double obj = -(grad_diff * grad_diff) / quad;
        if (obj < best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    if (i == n || j == n || gmax + gmax2 < hp.tolerance) break;
    if (++iter > hp.max_iterations) {
      fail(ErrorKind::NonConvergence,
           "SMO did not converge within " + std::to_string(hp.max_iterations) + " iterations");
    }

    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
      }
      if (diff > 0.0) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      } else {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
      }
    } else {
      double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
      } else {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
      }
      if (sum > C) {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) G[t] += Q(i, t) * di + Q(j, t) * dj;
  }

  // Bias from free vectors when any exist, else the middle of the feasible range.
  double ub = kInf, lb = -kInf, free_sum = 0.0;
  int n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      free_sum += yg;
    }
  }
  double rho;
  if (n_free > 0) {
    rho = free_sum / n_free;
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    rho = (ub + lb) / 2.0;
  } else {
    rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  }
  sol.alpha = std::move(alpha);
  sol.bias = -rho;
  sol.iterations = iter;
  return sol;
}

double max_kkt_violation(const Matrix& X, std::span<const double> y,
                         const BinarySvmSolution& sol, const SvmHyperparams& hp) {
  const std::size_t n = X.rows();
  const double eps = 1e-12 * hp.C;
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = sol.bias;
    for (std::size_t j = 0; j < n; ++j) {
      if (sol.alpha[j] != 0.0) f += sol.alpha[j] * y[j] * rbf_kernel(X.row(j), X.row(i), hp.gamma);
    }
    const double margin = y[i] * f;
    double v;
    if (sol.alpha[i] <= eps) {
      v = std::max(0.0, 1.0 - margin);
    } else if (sol.alpha[i] >= hp.C - eps) {
      v = std::max(0.0, margin - 1.0);
    } else {
      v = std::abs(margin - 1.0);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

double BinarySvm::decision(std::span<const double> z, double gamma) const {
  double f = bias;
  for (std::size_t s = 0; s < support_vectors.rows(); ++s) {
    f += dual_coef[s] * rbf_kernel(support_vectors.row(s), z, gamma);
  }
  return f;
}

std::vector<double> SvmRbfModel::decision_values(std::span<const double> x) const {
  if (x.size() != n_features) {
    fail(ErrorKind::DimensionMismatch, "row has " + std::to_string(x.size()) +
                                           " features, model expects " + std::to_string(n_features));
  }
  const auto z = standardizer.transform_row(x);
  std::vector<double> out;
  for (const auto& m : machines) out.push_back(m.decision(z, hyperparams.gamma));
  return out;
}

int SvmRbfModel::predict_one(std::span<const double> x) const {
  if (machines.empty()) return classes.front();
  const auto d = decision_values(x);
  return machines[std::max_element(d.begin(), d.end()) - d.begin()].positive_class;
}

SvmRbfModel train_svm_rbf(const Dataset& ds, const SvmHyperparams& hp, std::uint64_t /*seed*/) {
  hp.check();
  if (ds.size() == 0) fail(ErrorKind::EmptyInput, "SVM needs at least one row");
  SvmRbfModel model;
  model.hyperparams = hp;
  model.classes = ds.classes();
  model.n_features = ds.num_features();
  model.standardizer = fit_standardizer(ds.X);
  if (model.classes.size() < 2) return model;

  const Matrix Z = model.standardizer.transform(ds.X);
  std::vector<double> y(ds.size());
  for (int cls : model.classes) {
    for (std::size_t i = 0; i < ds.size(); ++i) y[i] = ds.y[i] == cls ? 1.0 : -1.0;
    BinarySvmSolution sol;
    try {
      sol = solve_binary_svm(Z, y, hp);
    } catch (const Error& e) {
      throw e.annotated("subproblem class " + std::to_string(cls) + " vs rest");
    }
    BinarySvm machine;
    machine.positive_class = cls;
    machine.bias = sol.bias;
    machine.iterations = sol.iterations;
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (sol.alpha[i] > 0.0) {
        support.push_back(i);
        machine.dual_coef.push_back(sol.alpha[i] * y[i]);
      }
    }
    machine.support_vectors = Z.select_rows(support);
    model.machines.push_back(std::move(machine));
  }
  return model;
}

}  // namespace osslc
