#include "osslc/resample.hpp"

#include <algorithm>
#include <limits>

#include "osslc/error.hpp"
#include "osslc/rng.hpp"

namespace osslc {

std::vector<std::size_t> nearest_neighbors(const Matrix& X, std::size_t row,
                                           const std::vector<std::size_t>& candidates,
                                           std::size_t k) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(candidates.size());
  for (auto c : candidates) {
    if (c == row) continue;
    dist.emplace_back(squared_distance(X.row(row), X.row(c)), c);
  }
  k = std::min(k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(dist[i].second);
  return out;
}

Dataset smote(const Dataset& ds, int k, std::uint64_t seed) {
  if (k < 1) fail(ErrorKind::InvalidHyperparam, "SMOTE k must be >= 1");
  const auto counts = ds.class_counts();
  if (counts.empty()) return ds;
  std::size_t majority = 0;
  for (const auto& [label, n] : counts) majority = std::max(majority, n);

  Dataset out = ds;
  Rng rng(seed);
  std::vector<double> synthetic(ds.num_features());
  for (const auto& [label, n] : counts) {
    if (n == majority) continue;
    if (n < 2) {
      fail(ErrorKind::ClassTooSmall, "class " + std::to_string(label) +
                                         " has a single row; SMOTE needs two to interpolate");
    }
    const auto members = ds.rows_of_class(label);
    const std::size_t effective_k = std::min<std::size_t>(static_cast<std::size_t>(k), n - 1);
    std::vector<std::vector<std::size_t>> neighbors;
    for (auto m : members) neighbors.push_back(nearest_neighbors(ds.X, m, members, effective_k));

    for (std::size_t s = 0; s < majority - n; ++s) {
      const std::size_t pick = rng.uniform_index(members.size());
      const std::size_t nn = neighbors[pick][rng.uniform_index(effective_k)];
      const double u = rng.uniform01();
      auto base = ds.X.row(members[pick]);
      auto other = ds.X.row(nn);
      for (std::size_t f = 0; f < synthetic.size(); ++f) {
        synthetic[f] = base[f] + u * (other[f] - base[f]);
      }
      out.append(synthetic, label, "synthetic:" + std::to_string(label) + ":" + std::to_string(s));
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> tomek_links(const Dataset& ds) {
  const std::size_t n = ds.size();
  std::vector<std::size_t> nearest(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = squared_distance(ds.X.row(i), ds.X.row(j));
      if (d < best) {
        best = d;
        nearest[i] = j;
      }
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = nearest[i];
    if (j < n && i < j && nearest[j] == i && ds.y[i] != ds.y[j]) links.emplace_back(i, j);
  }
  return links;
}

Dataset smote_tomek(const Dataset& ds, int k, std::uint64_t seed, TomekPolicy policy) {
  Dataset current = smote(ds, k, seed);
  while (current.size() >= 2) {
    const auto links = tomek_links(current);
    if (links.empty()) break;
    const auto counts = current.class_counts();
    std::vector<bool> drop(current.size(), false);
    for (auto [i, j] : links) {
      if (policy == TomekPolicy::RemoveBoth) {
        drop[i] = drop[j] = true;
      } else {
        // Drop the endpoint from the larger class; equal sizes drop both.
        const auto ni = counts.at(current.y[i]);
        const auto nj = counts.at(current.y[j]);
        if (ni >= nj) drop[i] = true;
        if (nj >= ni) drop[j] = true;
      }
    }
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < current.size(); ++r)
      if (!drop[r]) keep.push_back(r);
    current = current.subset(keep);
  }
  return current;
}

}  // namespace osslc
