#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace osslc {

/// Rows are true classes, columns predicted classes, both in `labels` order.
struct ConfusionMatrix {
  std::vector<int> labels;
  std::vector<std::vector<std::int64_t>> counts;

  std::int64_t total() const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws LengthMismatch or UnknownLabel.
ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 const std::vector<int>& labels);

struct ClassMetrics {
  int label = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
  // Set when the metric had a zero denominator and was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

struct AverageMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

struct ClassificationReport {
  std::vector<ClassMetrics> classes;
  double accuracy = 0.0;
  std::int64_t total = 0;
  AverageMetrics macro;
  AverageMetrics weighted;
  ConfusionMatrix matrix;
  bool zero_division = false;
};

/// Throws EmptyMatrix when the matrix holds no rows.
ClassificationReport classification_report(const ConfusionMatrix& m);

/// Label codes in report order: graduated, incubating, sandbox.
std::vector<int> report_label_order();
std::string report_class_name(int label);

double round_half_even(double x, int decimals);
std::string format_fixed2(double x);

/// Fixed-width text table with Precision, Recall, F1-score and Support columns.
std::string render_report(const ClassificationReport& r);

/// Full-precision report plus the raw confusion matrix.
nlohmann::json report_to_json(const ClassificationReport& r);

}  // namespace osslc
