#include "osslc/dataset.hpp"

#include <cmath>

#include "osslc/error.hpp"

namespace osslc {

std::string_view stage_name(LifecycleStage stage) {
  switch (stage) {
    case LifecycleStage::Sandbox: return "sandbox";
    case LifecycleStage::Incubating: return "incubating";
    case LifecycleStage::Graduated: return "graduated";
  }
  return "unknown";
}

std::optional<LifecycleStage> parse_stage(std::string_view name) {
  if (name == "sandbox") return LifecycleStage::Sandbox;
  if (name == "incubating") return LifecycleStage::Incubating;
  if (name == "graduated") return LifecycleStage::Graduated;
  return std::nullopt;
}

LifecycleStage stage_from_code(int code) {
  if (code < 0 || code >= kNumStages) {
    fail(ErrorKind::UnknownLabel, "no lifecycle stage with code " + std::to_string(code));
  }
  return static_cast<LifecycleStage>(code);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.X = X.select_rows(rows);
  out.column_names = column_names;
  out.y.reserve(rows.size());
  out.row_ids.reserve(rows.size());
  for (auto r : rows) {
    out.y.push_back(y[r]);
    out.row_ids.push_back(row_ids[r]);
  }
  return out;
}

Dataset Dataset::select_features(std::span<const std::size_t> columns) const {
  Dataset out;
  out.X = X.select_cols(columns);
  out.y = y;
  out.row_ids = row_ids;
  for (auto c : columns) out.column_names.push_back(column_names[c]);
  return out;
}

void Dataset::append(std::span<const double> x, int label, std::string row_id) {
  if (!column_names.empty() && x.size() != column_names.size()) {
    fail(ErrorKind::DimensionMismatch, "row width does not match column names");
  }
  X.append_row(x);
  y.push_back(label);
  row_ids.push_back(std::move(row_id));
}

std::vector<int> Dataset::classes() const {
  std::vector<int> out;
  for (const auto& [label, count] : class_counts()) out.push_back(label);
  return out;
}

std::map<int, std::size_t> Dataset::class_counts() const {
  std::map<int, std::size_t> counts;
  for (int label : y) ++counts[label];
  return counts;
}

std::vector<std::size_t> Dataset::rows_of_class(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] == label) out.push_back(i);
  return out;
}

void Dataset::check() const {
  if (X.rows() != y.size() || y.size() != row_ids.size()) {
    fail(ErrorKind::DimensionMismatch, "dataset has mismatched X/y/row_ids lengths");
  }
  if (!column_names.empty() && X.rows() > 0 && column_names.size() != X.cols()) {
    fail(ErrorKind::DimensionMismatch, "dataset column names do not match X width");
  }
  for (double v : X.data()) {
    if (!std::isfinite(v)) fail(ErrorKind::SchemaError, "dataset contains a non-finite value");
  }
}

}  // namespace osslc
