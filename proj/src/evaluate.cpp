#include "osslc/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "osslc/dataset.hpp"
#include "osslc/error.hpp"

namespace osslc {

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 const std::vector<int>& labels) {
  if (y_true.size() != y_pred.size()) {
    fail(ErrorKind::LengthMismatch, "y_true has " + std::to_string(y_true.size()) +
                                        " entries, y_pred has " + std::to_string(y_pred.size()));
  }
  std::map<int, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = i;
  auto position = [&](int label) {
    const auto it = index.find(label);
    if (it == index.end()) fail(ErrorKind::UnknownLabel, "label " + std::to_string(label) + " not in label list");
    return it->second;
  };
  ConfusionMatrix m{labels, std::vector<std::vector<std::int64_t>>(
                                labels.size(), std::vector<std::int64_t>(labels.size(), 0))};
  for (std::size_t i = 0; i < y_true.size(); ++i) ++m.counts[position(y_true[i])][position(y_pred[i])];
  return m;
}

ClassificationReport classification_report(const ConfusionMatrix& m) {
  const std::size_t k = m.labels.size();
  ClassificationReport r;
  r.matrix = m;
  r.total = m.total();
  if (r.total <= 0) fail(ErrorKind::EmptyMatrix, "confusion matrix is empty");
  std::int64_t trace = 0;
  for (std::size_t i = 0; i < k; ++i) {
    ClassMetrics c;
    c.label = m.labels[i];
    const std::int64_t tp = m.counts[i][i];
    std::int64_t row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += m.counts[i][j];
      col += m.counts[j][i];
    }
    trace += tp;
    c.support = row;
    if (col > 0) c.precision = static_cast<double>(tp) / col;
    else c.precision_undefined = true;
    if (row > 0) c.recall = static_cast<double>(tp) / row;
    else c.recall_undefined = true;
    if (c.precision + c.recall > 0) c.f1 = 2 * c.precision * c.recall / (c.precision + c.recall);
    r.zero_division = r.zero_division || c.precision_undefined || c.recall_undefined;
    r.classes.push_back(c);
  }
  r.accuracy = static_cast<double>(trace) / r.total;
  r.macro.support = r.weighted.support = r.total;
  for (const auto& c : r.classes) {
    r.macro.precision += c.precision / k;
    r.macro.recall += c.recall / k;
    r.macro.f1 += c.f1 / k;
    const double w = static_cast<double>(c.support) / r.total;
    r.weighted.precision += w * c.precision;
    r.weighted.recall += w * c.recall;
    r.weighted.f1 += w * c.f1;
  }
  return r;
}

std::vector<int> report_label_order() {
  return {stage_code(LifecycleStage::Graduated), stage_code(LifecycleStage::Incubating),
          stage_code(LifecycleStage::Sandbox)};
}

std::string report_class_name(int label) {
  if (label == stage_code(LifecycleStage::Graduated)) return "grads";
  if (label >= 0 && label < kNumStages) return std::string(stage_name(stage_from_code(label)));
  return std::to_string(label);
}

double round_half_even(double x, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double scaled = x * scale;
  // Snap values that are a representation error away from an exact half.
  const double nearest_half = std::round(scaled * 2.0) / 2.0;
  const double v = std::abs(scaled - nearest_half) < 1e-9 ? nearest_half : scaled;
  return std::nearbyint(v) / scale;
}

std::string format_fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round_half_even(x, 2));
  return buf;
}

std::string render_report(const ClassificationReport& r) {
  std::size_t width = 12;
  for (const auto& c : r.classes) width = std::max(width, report_class_name(c.label).size());
  std::string out;
  char line[256];
  auto name_col = [&](const std::string& s) { return s + std::string(width - s.size(), ' '); };
  std::snprintf(line, sizeof line, "%s %10s %10s %10s %10s\n", name_col("").c_str(), "Precision",
                "Recall", "F1-score", "Support");
  out += line;
  out += "\n";
  for (const auto& c : r.classes) {
    std::snprintf(line, sizeof line, "%s %10s %10s %10s %10lld\n",
                  name_col(report_class_name(c.label)).c_str(), format_fixed2(c.precision).c_str(),
                  format_fixed2(c.recall).c_str(), format_fixed2(c.f1).c_str(),
                  static_cast<long long>(c.support));
    out += line;
  }
  out += "\n";
  std::snprintf(line, sizeof line, "%s %10s %10s %10s %10lld\n", name_col("Accuracy").c_str(), "", "",
                format_fixed2(r.accuracy).c_str(), static_cast<long long>(r.total));
  out += line;
  for (const auto& [label, avg] : {std::pair{"Macro avg", r.macro}, std::pair{"Weighted avg", r.weighted}}) {
    std::snprintf(line, sizeof line, "%s %10s %10s %10s %10lld\n", name_col(label).c_str(),
                  format_fixed2(avg.precision).c_str(), format_fixed2(avg.recall).c_str(),
                  format_fixed2(avg.f1).c_str(), static_cast<long long>(avg.support));
    out += line;
  }
  return out;
}

nlohmann::json report_to_json(const ClassificationReport& r) {
  using nlohmann::json;
  json classes = json::array();
  for (const auto& c : r.classes) {
    classes.push_back({{"label", c.label},
                       {"name", report_class_name(c.label)},
                       {"precision", c.precision},
                       {"recall", c.recall},
                       {"f1", c.f1},
                       {"support", c.support},
                       {"precision_undefined", c.precision_undefined},
                       {"recall_undefined", c.recall_undefined}});
  }
  auto avg = [](const AverageMetrics& a) {
    return json{{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}, {"support", a.support}};
  };
  return {{"classes", classes},
          {"accuracy", r.accuracy},
          {"total", r.total},
          {"macro_avg", avg(r.macro)},
          {"weighted_avg", avg(r.weighted)},
          {"zero_division", r.zero_division},
          {"confusion_matrix", {{"labels", r.matrix.labels}, {"counts", r.matrix.counts}}}};
}

}  // namespace osslc
