#pragma once

#include <cstdint>
#include <vector>

namespace maskshare::cluster {

struct ClusterModel {
  int k = 0;
  std::vector<int> assignment;               // point -> cluster id
  std::vector<std::vector<double>> centers;  // k centers
  double wcss = 0.0;                         // within-cluster sum of squares
  std::vector<double> wcss_history;          // objective after each Lloyd iteration
};

// Lloyd's algorithm with k-means++ seeding, run to the assignment fixpoint or
// `max_iters`, best of `restarts` by WCSS. Deterministic per seed. Ties in
// nearest-center go to the lowest cluster id. A cluster left empty after an
// assignment pass is re-seeded to the point farthest from its own assigned
// center (lowest point index on ties) before centers are recomputed.
// Requires 1 <= k < points.size().
ClusterModel kmeans(const std::vector<std::vector<double>>& points, int k,
                    std::uint64_t seed, int max_iters = 300, int restarts = 10);

double squared_distance(const std::vector<double>& a, const std::vector<double>& b);

double compute_wcss(const std::vector<std::vector<double>>& points,
                    const ClusterModel& model);

}  // namespace maskshare::cluster
