#include "cluster/kmeans.hpp"

#include <limits>
#include <string>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "common/rng.hpp"

namespace tilecurate::cluster {

namespace {

struct Assignment {
  std::vector<int> label;
  std::vector<double> cost;
};

void assign(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids, int workers, Assignment& out) {
  const Eigen::Index n = data.rows();
  constexpr Eigen::Index kChunk = 256;
  const auto chunks = static_cast<std::size_t>((n + kChunk - 1) / kChunk);
  parallel_for(chunks, workers, [&](std::size_t chunk) {
    const Eigen::Index end = std::min(n, static_cast<Eigen::Index>(chunk + 1) * kChunk);
    for (Eigen::Index i = static_cast<Eigen::Index>(chunk) * kChunk; i < end; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int label = 0;
      for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
        const double d = (data.row(i) - centroids.row(k)).squaredNorm();
        if (d < best) {
          best = d;
          label = static_cast<int>(k);
        }
      }
      out.label[static_cast<std::size_t>(i)] = label;
      out.cost[static_cast<std::size_t>(i)] = best;
    }
  });
}

Eigen::MatrixXd plus_plus_init(const Eigen::MatrixXd& data, int k, Rng& rng) {
  const auto n = static_cast<std::size_t>(data.rows());
  Eigen::MatrixXd centroids(k, data.cols());
  centroids.row(0) = data.row(static_cast<Eigen::Index>(rng.below(n)));
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i)
    nearest[i] = (data.row(static_cast<Eigen::Index>(i)) - centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : nearest) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (acc > target && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    centroids.row(c) = data.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = std::min(nearest[i], (data.row(static_cast<Eigen::Index>(i)) - centroids.row(c)).squaredNorm());
  }
  return centroids;
}

// Returns true if any cluster had to be re-seeded.
bool repair_empty(const Eigen::MatrixXd& data, Eigen::MatrixXd& centroids, Assignment& a) {
  const int k = static_cast<int>(centroids.rows());
  bool repaired = false;
  for (int c = 0; c < k; ++c) {
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int l : a.label) ++sizes[static_cast<std::size_t>(l)];
    if (sizes[static_cast<std::size_t>(c)] > 0) continue;
    std::size_t far = a.label.size();
    for (std::size_t i = 0; i < a.label.size(); ++i) {
      if (sizes[static_cast<std::size_t>(a.label[i])] < 2) continue;
      if (far == a.label.size() || a.cost[i] > a.cost[far]) far = i;
    }
    if (far == a.label.size()) continue;  // cannot happen while K <= rows
    centroids.row(c) = data.row(static_cast<Eigen::Index>(far));
    a.label[far] = c;
    a.cost[far] = 0.0;
    repaired = true;
  }
  return repaired;
}

KMeansResult lloyd(const Eigen::MatrixXd& data, int k, const KMeansConfig& cfg, Rng& rng) {
  const auto n = static_cast<std::size_t>(data.rows());
  KMeansResult r;
  r.centroids = plus_plus_init(data, k, rng);
  Assignment a{std::vector<int>(n), std::vector<double>(n)};
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    assign(data, r.centroids, cfg.workers, a);
    repair_empty(data, r.centroids, a);
    double inertia = 0.0;
    for (double c : a.cost) inertia += c;
    r.inertia_history.push_back(inertia);
    r.iterations = iter + 1;
    if (iter > 0) {
      const double prev = r.inertia_history[r.inertia_history.size() - 2];
      if (prev - inertia <= cfg.tol * prev) break;
    }
    if (iter + 1 == cfg.max_iter) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(a.label[i]) += data.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<std::size_t>(a.label[i])];
    }
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        r.centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
  }
  r.assignment = std::move(a.label);
  r.inertia = r.inertia_history.back();
  return r;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& data, int k, const KMeansConfig& cfg) {
  const auto n = static_cast<std::size_t>(data.rows());
  require(k >= 1, ErrorKind::Config, "K must be at least 1");
  require(static_cast<std::size_t>(k) <= n, ErrorKind::Config,
          "K = " + std::to_string(k) + " exceeds the number of rows (" + std::to_string(n) + ")");
  require(cfg.max_iter >= 1, ErrorKind::Config, "max_iter must be at least 1");
  require(cfg.tol >= 0.0, ErrorKind::Config, "tol must be nonnegative");
  require(cfg.restarts >= 1, ErrorKind::Config, "restarts must be at least 1");

  KMeansResult best;
  for (int run = 0; run < cfg.restarts; ++run) {
    Rng rng(mix_seed(cfg.seed, 0x6b6d + static_cast<std::uint64_t>(run)));
    KMeansResult r = lloyd(data, k, cfg, rng);
    if (run == 0 || r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

}  // namespace tilecurate::cluster
