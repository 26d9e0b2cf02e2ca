#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace tilecurate::cluster {

struct KMeansConfig {
  int max_iter = 300;
  double tol = 1e-6;  // relative inertia change
  std::uint64_t seed = 0;
  int workers = 1;
  int restarts = 10;  // independent k-means++ starts; the lowest final inertia wins
};

struct KMeansResult {
  Eigen::MatrixXd centroids;  // K x dim
  std::vector<int> assignment;
  double inertia = 0.0;
  /// Inertia after every assignment step; nonincreasing.
  std::vector<double> inertia_history;
  int iterations = 0;
};

/// Lloyd iterations from seeded k-means++ starts, keeping the run with the
/// lowest final inertia (earliest on ties). Each point goes to the nearest
/// centroid (lowest index on ties). A cluster left empty is re-seeded with
/// the point farthest from its centroid among clusters of size > 1.
KMeansResult kmeans(const Eigen::MatrixXd& data, int k, const KMeansConfig& cfg);

}  // namespace tilecurate::cluster
