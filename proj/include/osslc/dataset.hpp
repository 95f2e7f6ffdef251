#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "osslc/matrix.hpp"

namespace osslc {

/// CNCF maturity tier. Integer codes are persisted and must not change.
enum class LifecycleStage : int { Sandbox = 0, Incubating = 1, Graduated = 2 };

inline constexpr int kNumStages = 3;
inline constexpr int kUnlabeled = -1;

std::string_view stage_name(LifecycleStage stage);
std::optional<LifecycleStage> parse_stage(std::string_view name);
inline int stage_code(LifecycleStage s) { return static_cast<int>(s); }
LifecycleStage stage_from_code(int code);

/// Labeled rows for learning. X, y and row_ids always have equal length.
struct Dataset {
  Matrix X;
  std::vector<int> y;
  std::vector<std::string> column_names;
  std::vector<std::string> row_ids;

  std::size_t size() const noexcept { return y.size(); }
  std::size_t num_features() const noexcept { return X.cols(); }

  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset select_features(std::span<const std::size_t> columns) const;
  void append(std::span<const double> x, int label, std::string row_id);

  // Sorted label codes present.
  std::vector<int> classes() const;
  std::map<int, std::size_t> class_counts() const;
  std::vector<std::size_t> rows_of_class(int label) const;

  // Throws DimensionMismatch / EmptyInput style errors on broken invariants.
  void check() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace osslc
