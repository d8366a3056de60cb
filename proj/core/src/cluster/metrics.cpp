#include "maskshare/cluster/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "maskshare/cluster/kmeans.hpp"
#include "maskshare/util/errors.hpp"

namespace maskshare::cluster {

double adjusted_rand_index(std::span<const int> labels_a,
                           std::span<const int> labels_b) {
  if (labels_a.size() != labels_b.size()) {
    throw DimensionError("label arrays differ in length");
  }
  const std::size_t n = labels_a.size();
  if (n == 0) return 1.0;

  std::map<std::pair<int, int>, long long> contingency;
  std::map<int, long long> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    contingency[{labels_a[i], labels_b[i]}] += 1;
    rows[labels_a[i]] += 1;
    cols[labels_b[i]] += 1;
  }
  auto choose2 = [](long long x) { return static_cast<double>(x) * (x - 1) / 2.0; };

  double sum_ij = 0.0;
  for (const auto& [key, count] : contingency) sum_ij += choose2(count);
  double sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, count] : rows) sum_a += choose2(count);
  for (const auto& [key, count] : cols) sum_b += choose2(count);

  const double total_pairs = choose2(static_cast<long long>(n));
  const double expected = total_pairs > 0.0 ? sum_a * sum_b / total_pairs : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return sum_ij == expected ? 1.0 : 0.0;
  return (sum_ij - expected) / denom;
}

double silhouette_score(const std::vector<std::vector<double>>& points,
                        std::span<const int> assignment) {
  const std::size_t n = points.size();
  if (assignment.size() != n) throw DimensionError("assignment length mismatch");
  if (n < 2) return 0.0;

  int max_label = 0;
  for (const int a : assignment) max_label = std::max(max_label, a);
  std::vector<long long> sizes(max_label + 1, 0);
  for (const int a : assignment) sizes[a] += 1;

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int own = assignment[i];
    if (sizes[own] <= 1) continue;  // singleton convention: s(i) = 0
    std::vector<double> mean_dist(max_label + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      mean_dist[assignment[j]] += std::sqrt(squared_distance(points[i], points[j]));
    }
    const double a = mean_dist[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c <= max_label; ++c) {
      if (c == own || sizes[c] == 0) continue;
      b = std::min(b, mean_dist[c] / static_cast<double>(sizes[c]));
    }
    if (std::isinf(b)) continue;  // single cluster overall
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

}  // namespace maskshare::cluster
