#include "maskshare/cluster/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "maskshare/util/errors.hpp"
#include "maskshare/util/rng.hpp"

namespace maskshare::cluster {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sq = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    sq += diff * diff;
  }
  return sq;
}

namespace {

std::vector<std::vector<double>> seed_centers_pp(
    const std::vector<std::vector<double>>& points, int k, util::Rng& rng) {
  const int n = static_cast<int>(points.size());
  std::vector<std::vector<double>> centers;
  centers.reserve(k);
  centers.push_back(points[rng.uniform_int(n)]);
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, squared_distance(points[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      // All points coincide with existing centers; fall back to uniform.
      centers.push_back(points[rng.uniform_int(n)]);
      continue;
    }
    const double target = rng.uniform() * total;
    double cum = 0.0;
    int chosen = n - 1;
    for (int i = 0; i < n; ++i) {
      cum += d2[i];
      if (target < cum) {
        chosen = i;
        break;
      }
    }
    centers.push_back(points[chosen]);
  }
  return centers;
}

int nearest_center(const std::vector<double>& p,
                   const std::vector<std::vector<double>>& centers) {
  int best = 0;
  double best_d = squared_distance(p, centers[0]);
  for (std::size_t c = 1; c < centers.size(); ++c) {
    const double d = squared_distance(p, centers[c]);
    if (d < best_d) {  // strict: ties keep the lowest id
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

ClusterModel lloyd(const std::vector<std::vector<double>>& points, int k,
                   util::Rng& rng, int max_iters) {
  const int n = static_cast<int>(points.size());
  const std::size_t dim = points[0].size();
  ClusterModel model;
  model.k = k;
  model.centers = seed_centers_pp(points, k, rng);
  model.assignment.assign(n, -1);

  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const int c = nearest_center(points[i], model.centers);
      if (c != model.assignment[i]) {
        model.assignment[i] = c;
        changed = true;
      }
    }
    // Re-seed empty clusters to the point farthest from its assigned center.
    for (int c = 0; c < k; ++c) {
      const bool empty =
          std::none_of(model.assignment.begin(), model.assignment.end(),
                       [c](int a) { return a == c; });
      if (!empty) continue;
      int farthest = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        const double d = squared_distance(points[i], model.centers[model.assignment[i]]);
        if (d > far_d) {
          far_d = d;
          farthest = i;
        }
      }
      model.centers[c] = points[farthest];
    }
    // Means of members.
    for (int c = 0; c < k; ++c) {
      std::vector<double> mean(dim, 0.0);
      int count = 0;
      for (int i = 0; i < n; ++i) {
        if (model.assignment[i] != c) continue;
        for (std::size_t d = 0; d < dim; ++d) mean[d] += points[i][d];
        ++count;
      }
      if (count > 0) {
        for (double& v : mean) v /= count;
        model.centers[c] = std::move(mean);
      }
    }
    model.wcss_history.push_back(compute_wcss(points, model));
    if (!changed && iter > 0) break;
  }
  model.wcss = compute_wcss(points, model);
  return model;
}

}  // namespace

double compute_wcss(const std::vector<std::vector<double>>& points,
                    const ClusterModel& model) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    total += squared_distance(points[i], model.centers[model.assignment[i]]);
  }
  return total;
}

ClusterModel kmeans(const std::vector<std::vector<double>>& points, int k,
                    std::uint64_t seed, int max_iters, int restarts) {
  const int n = static_cast<int>(points.size());
  if (k < 1) throw ConfigError("kmeans requires K >= 1");
  if (k >= n) {
    throw ConfigError("kmeans requires K < number of points (K=" +
                      std::to_string(k) + ", N=" + std::to_string(n) + ")");
  }
  for (const auto& p : points) {
    if (p.size() != points[0].size()) throw DimensionError("inconsistent point dims");
  }

  ClusterModel best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    util::Rng rng(util::derive_seed(seed, "kmeans-restart", static_cast<std::uint64_t>(r)));
    ClusterModel model = lloyd(points, k, rng, max_iters);
    if (!have || model.wcss < best.wcss) {  // strict: ties keep earliest restart
      best = std::move(model);
      have = true;
    }
  }
  return best;
}

}  // namespace maskshare::cluster
