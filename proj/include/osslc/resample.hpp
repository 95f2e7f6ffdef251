#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "osslc/dataset.hpp"

namespace osslc {

inline constexpr int kDefaultSmoteK = 5;

/// Grows every non-majority class to the majority count with SMOTE
/// interpolation. Synthetic rows are appended after the originals, class by
/// class in ascending label order, with row ids "synthetic:<label>:<n>".
/// Throws ClassTooSmall when a class that needs growing has a single row.
Dataset smote(const Dataset& ds, int k = kDefaultSmoteK, std::uint64_t seed = 0);

/// Unordered opposite-label pairs (i < j) that are each other's nearest
/// neighbour (Euclidean, ties to the lower index).
std::vector<std::pair<std::size_t, std::size_t>> tomek_links(const Dataset& ds);

enum class TomekPolicy { RemoveBoth, RemoveMajority };

/// SMOTE, then Tomek-link cleaning repeated until no link remains. Surviving
/// rows keep their relative order.
Dataset smote_tomek(const Dataset& ds, int k = kDefaultSmoteK, std::uint64_t seed = 0,
                    TomekPolicy policy = TomekPolicy::RemoveBoth);

/// Indices of the k nearest rows to `row` within `candidates` (excluding
/// itself), nearest first, ties to the lower index.
std::vector<std::size_t> nearest_neighbors(const Matrix& X, std::size_t row,
                                           const std::vector<std::size_t>& candidates,
                                           std::size_t k);

}  // namespace osslc
