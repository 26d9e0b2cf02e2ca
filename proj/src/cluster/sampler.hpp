#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cluster/kmeans.hpp"
#include "features/embedding.hpp"

namespace tilecurate::cluster {

enum class CountRule { Ratio, Sqrt };

struct ClusterConfig {
  int m = 400;
  std::optional<int> k;
  CountRule rule = CountRule::Ratio;
  int g = 5;
  double sample_fraction = 0.2;
  std::uint64_t seed = 0;
  int max_iter = 300;
  int restarts = 10;
  double tol = 1e-6;
  int k_nn = 4;
  int workers = 1;

  void validate() const;
};

/// Explicit K if set; otherwise max(1, round(T / m)), or round(sqrt(T)) under the sqrt rule.
int choose_cluster_count(std::size_t tile_count, const ClusterConfig& cfg);

/// (d - min) / (max - min); all zeros when max == min.
std::vector<double> normalize_distances(std::span<const double> raw);

/// Bin id for each position of an ascending-sorted run of n items: g clamped
/// to n, (n mod g) bins of ceil(n/g) first, then bins of floor(n/g).
std::vector<int> equal_frequency_bins(std::size_t n, int g);

/// ceil(fraction * size), capped at size.
std::size_t bin_draw_count(std::size_t size, double fraction);

/// From each bin draws ceil(fraction * size) members without replacement
/// (bin order kept when the whole bin is drawn). Bin b uses a generator
/// seeded from (seed, b). Output is ordered by bin, then draw order.
std::vector<std::string> sample_bins(const std::vector<std::vector<std::string>>& bins, double fraction,
                                     std::uint64_t seed);

/// Other clusters by ascending centroid distance (ties: lower id), at most
/// min(k_nn, K - 1) of them.
std::vector<int> neighbor_clusters(const Eigen::MatrixXd& centroids, int cluster, int k_nn);

struct Admixture {
  std::vector<double> per_group;  // NaN for empty groups
  double average = 0.0;           // over nonempty groups
  std::size_t empty_groups = 0;
};

/// Normalized Shannon entropy of label proportions per group, ln base, divided by ln(V).
Admixture shannon_admixture(const std::vector<std::vector<int>>& groups, int variant_count);
double normalized_entropy(std::span<const std::size_t> counts, int variant_count);

struct ClusterModel {
  Eigen::MatrixXd centroids;
  std::vector<std::string> tile_ids;
  std::vector<int> assignment;
  std::vector<double> distance;
  std::vector<double> normalized;
  std::vector<int> bin;
  std::vector<std::vector<int>> neighbors;
  double inertia = 0.0;
  std::vector<double> inertia_history;

  int k() const { return static_cast<int>(centroids.rows()); }
  /// Member indices of a cluster, ascending by (normalized distance, tile id).
  std::vector<std::size_t> members(int cluster) const;
  std::vector<std::size_t> cluster_sizes() const;
};

ClusterModel build_cluster_model(const features::EmbeddingMatrix& reduced, const ClusterConfig& cfg);

struct SampledTile {
  std::string tile_id;
  int cluster = 0;
  int bin = 0;
  bool operator==(const SampledTile&) const = default;
};

/// Per-cluster bin sampling; cluster c uses stream (seed, c).
std::vector<SampledTile> sample_clusters(const ClusterModel& model, const ClusterConfig& cfg);

/// Per-tile rows "tile_id cluster raw_distance normalized_distance bin", then
/// "#cluster" summary rows "id size inertia_share neighbors".
void write_cluster_report(const std::filesystem::path& path, const ClusterModel& model);
/// Restores everything but the centroids and inertia history.
ClusterModel read_cluster_report(const std::filesystem::path& path);

void write_samples(const std::filesystem::path& path, const std::vector<SampledTile>& samples);
std::vector<SampledTile> read_samples(const std::filesystem::path& path);

}  // namespace tilecurate::cluster
