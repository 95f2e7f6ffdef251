#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "osslc/dataset.hpp"
#include "osslc/learner.hpp"
#include "osslc/matrix.hpp"

namespace osslc {

struct SpearmanResult {
  Matrix rho;
  // Columns with zero rank variance; their off-diagonal entries are 0.
  std::vector<bool> constant;
};

/// Throws EmptyInput for fewer than 2 rows.
SpearmanResult spearman_matrix(const Matrix& X);

/// Average ranks (1-based) with ties sharing the mean rank.
std::vector<double> average_ranks(const std::vector<double>& values);

struct ShapiroWilkResult {
  double w = 0.0;
  double p = 0.0;
};

/// Throws SampleSizeOutOfRange outside 3..5000 and ConstantColumn for zero range.
ShapiroWilkResult shapiro_wilk(std::vector<double> x);

struct BoxsMResult {
  double m = 0.0;
  double chi2 = 0.0;
  double df = 0.0;
  double p = 0.0;
};

/// Throws SingularCovariance when any class covariance is not positive definite.
BoxsMResult boxs_m(const Matrix& X, const std::vector<int>& y);

struct PartialDependence {
  std::size_t feature = 0;
  std::vector<double> grid;
  std::vector<int> classes;
  // curves[c][g]: mean probability of classes[c] with the feature forced to grid[g].
  std::vector<std::vector<double>> curves;
};

/// Quantile grid with linear interpolation at i/(grid_points-1).
std::vector<double> quantile_grid(std::vector<double> values, std::size_t grid_points);
double quantile(std::vector<double> values, double q);

PartialDependence partial_dependence(const LearnerModel& model, const Matrix& X, std::size_t feature,
                                     std::size_t grid_points);

inline constexpr std::size_t kRidgelineGridPoints = 256;

struct RidgelineClass {
  int label = 0;
  double bandwidth = 0.0;
  std::vector<double> x;
  std::vector<double> density;
  double q1 = 0.0, q2 = 0.0, q3 = 0.0;

  // 1 below Q1, 2 below Q2, 3 below Q3, otherwise 4.
  int band(double v) const;
};

struct RidgelineSeries {
  std::string feature;
  // Top-to-bottom drawing order: sandbox, incubating, graduated.
  std::vector<RidgelineClass> classes;
};

double silverman_bandwidth(const std::vector<double>& values);

/// Throws ClassTooSmall when a class has fewer than 2 values.
RidgelineSeries ridgeline_series(const std::string& feature,
                                 const std::map<int, std::vector<double>>& values_by_class,
                                 std::optional<double> bandwidth = std::nullopt);

/// Columns feature,class,x,density,quartile_band.
std::string ridgeline_csv(const std::vector<RidgelineSeries>& series);
std::string ridgeline_svg(const RidgelineSeries& series);

struct DiagnosticsSummary {
  std::vector<std::string> column_names;
  SpearmanResult spearman;
  std::vector<std::optional<ShapiroWilkResult>> shapiro;
  std::optional<BoxsMResult> boxs_m;
  std::vector<std::string> notes;
};

DiagnosticsSummary run_diagnostics(const Dataset& ds);
nlohmann::json diagnostics_to_json(const DiagnosticsSummary& s);

}  // namespace osslc
