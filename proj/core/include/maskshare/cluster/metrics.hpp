#pragma once

#include <span>
#include <vector>

namespace maskshare::cluster {

// Chance-corrected agreement between two labelings of the same points.
// Returns 1.0 for identical partitions (including the degenerate case where
// both sides put everything in one cluster).
double adjusted_rand_index(std::span<const int> labels_a,
                           std::span<const int> labels_b);

// Mean silhouette coefficient over all points; singleton clusters score 0.
double silhouette_score(const std::vector<std::vector<double>>& points,
                        std::span<const int> assignment);

}  // namespace maskshare::cluster
