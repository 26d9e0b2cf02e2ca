#include "cluster/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "features/pca.hpp"

namespace tilecurate::cluster {

void ClusterConfig::validate() const {
  require(m >= 1, ErrorKind::Config, "m must be at least 1");
  require(!k || *k >= 1, ErrorKind::Config, "K must be at least 1");
  require(g >= 1, ErrorKind::Config, "g must be at least 1");
  require(sample_fraction > 0.0 && sample_fraction <= 1.0, ErrorKind::Config, "sample_fraction must lie in (0, 1]");
  require(max_iter >= 1, ErrorKind::Config, "max_iter must be at least 1");
  require(restarts >= 1, ErrorKind::Config, "restarts must be at least 1");
  require(tol >= 0.0, ErrorKind::Config, "tol must be nonnegative");
  require(k_nn >= 1, ErrorKind::Config, "k_nn must be at least 1");
}

int choose_cluster_count(std::size_t tile_count, const ClusterConfig& cfg) {
  if (cfg.k) return *cfg.k;
  const double t = static_cast<double>(tile_count);
  const double k = cfg.rule == CountRule::Sqrt ? std::round(std::sqrt(t)) : std::round(t / cfg.m);
  return std::max(1, static_cast<int>(k));
}

std::vector<double> normalize_distances(std::span<const double> raw) {
  require(!raw.empty(), ErrorKind::Contract, "cannot normalize an empty cluster");
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  std::vector<double> out(raw.size(), 0.0);
  if (*hi == *lo) return out;
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - *lo) / (*hi - *lo);
  return out;
}

std::vector<int> equal_frequency_bins(std::size_t n, int g) {
  require(n > 0, ErrorKind::Contract, "cannot bin an empty cluster");
  require(g >= 1, ErrorKind::Contract, "bin count must be at least 1");
  const std::size_t bins = std::min(n, static_cast<std::size_t>(g));
  const std::size_t small = n / bins, large_count = n % bins;
  std::vector<int> out;
  out.reserve(n);
  for (std::size_t b = 0; b < bins; ++b)
    out.insert(out.end(), b < large_count ? small + 1 : small, static_cast<int>(b));
  return out;
}

std::size_t bin_draw_count(std::size_t size, double fraction) {
  // The epsilon keeps exact products such as 0.2 * 15 from rounding up past 3.
  const double want = std::ceil(fraction * static_cast<double>(size) - 1e-9);
  return std::min(size, static_cast<std::size_t>(std::max(0.0, want)));
}

std::vector<std::string> sample_bins(const std::vector<std::vector<std::string>>& bins, double fraction,
                                     std::uint64_t seed) {
  std::vector<std::string> out;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const auto& bin = bins[b];
    const std::size_t draw = bin_draw_count(bin.size(), fraction);
    if (draw == bin.size()) {
      out.insert(out.end(), bin.begin(), bin.end());
      continue;
    }
    std::vector<std::size_t> idx(bin.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(mix_seed(seed, b));
    for (std::size_t i = 0; i < draw; ++i) {
      std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
      out.push_back(bin[idx[i]]);
    }
  }
  return out;
}

std::vector<int> neighbor_clusters(const Eigen::MatrixXd& centroids, int cluster, int k_nn) {
  const int k = static_cast<int>(centroids.rows());
  require(cluster >= 0 && cluster < k, ErrorKind::Contract, "unknown cluster id " + std::to_string(cluster));
  std::vector<std::pair<double, int>> order;
  for (int c = 0; c < k; ++c)
    if (c != cluster) order.emplace_back((centroids.row(c) - centroids.row(cluster)).norm(), c);
  std::sort(order.begin(), order.end());
  const auto keep = std::min(order.size(), static_cast<std::size_t>(std::max(0, k_nn)));
  std::vector<int> out;
  for (std::size_t i = 0; i < keep; ++i) out.push_back(order[i].second);
  return out;
}

double normalized_entropy(std::span<const std::size_t> counts, int variant_count) {
  require(variant_count >= 1, ErrorKind::Contract, "variant count must be at least 1");
  if (variant_count == 1) return 0.0;
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  require(total > 0.0, ErrorKind::Contract, "entropy of an empty group");
  double h = 0.0;
  for (auto c : counts)
    if (c > 0) {
      const double p = static_cast<double>(c) / total;
      h -= p * std::log(p);
    }
  return h / std::log(static_cast<double>(variant_count));
}

Admixture shannon_admixture(const std::vector<std::vector<int>>& groups, int variant_count) {
  require(variant_count >= 1, ErrorKind::Contract, "variant count must be at least 1");
  Admixture out;
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& group : groups) {
    if (group.empty()) {
      out.per_group.push_back(std::numeric_limits<double>::quiet_NaN());
      ++out.empty_groups;
      continue;
    }
    std::vector<std::size_t> counts(static_cast<std::size_t>(variant_count), 0);
    for (int label : group) {
      require(label >= 0 && label < variant_count, ErrorKind::Contract,
              "label " + std::to_string(label) + " outside [0, " + std::to_string(variant_count) + ")");
      ++counts[static_cast<std::size_t>(label)];
    }
    const double h = normalized_entropy(counts, variant_count);
    out.per_group.push_back(h);
    sum += h;
    ++used;
  }
  out.average = used ? sum / static_cast<double>(used) : 0.0;
  return out;
}

std::vector<std::size_t> ClusterModel::members(int cluster) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == cluster) out.push_back(i);
  std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    if (normalized[a] != normalized[b]) return normalized[a] < normalized[b];
    return tile_ids[a] < tile_ids[b];
  });
  return out;
}

std::vector<std::size_t> ClusterModel::cluster_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k()), 0);
  for (int a : assignment) ++sizes[static_cast<std::size_t>(a)];
  return sizes;
}

ClusterModel build_cluster_model(const features::EmbeddingMatrix& reduced, const ClusterConfig& cfg) {
  cfg.validate();
  reduced.validate();
  const Eigen::MatrixXd data = features::to_eigen(reduced);
  const int k = choose_cluster_count(reduced.rows, cfg);
  const KMeansResult km = kmeans(data, k, {cfg.max_iter, cfg.tol, cfg.seed, cfg.workers, cfg.restarts});
  ClusterModel model;
  model.centroids = km.centroids;
  model.tile_ids = reduced.tile_ids;
  model.assignment = km.assignment;
  model.inertia = km.inertia;
  model.inertia_history = km.inertia_history;
  const std::size_t n = reduced.rows;
  model.distance.resize(n);
  model.normalized.assign(n, 0.0);
  model.bin.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    model.distance[i] =
        (data.row(static_cast<Eigen::Index>(i)) - km.centroids.row(km.assignment[i])).norm();
  for (int c = 0; c < k; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
      if (model.assignment[i] == c) idx.push_back(i);
    if (idx.empty()) continue;
    std::vector<double> raw;
    for (auto i : idx) raw.push_back(model.distance[i]);
    const auto norm = normalize_distances(raw);
    for (std::size_t j = 0; j < idx.size(); ++j) model.normalized[idx[j]] = norm[j];
    const auto sorted = model.members(c);
    const auto bins = equal_frequency_bins(sorted.size(), cfg.g);
    for (std::size_t j = 0; j < sorted.size(); ++j) model.bin[sorted[j]] = bins[j];
  }
  for (int c = 0; c < k; ++c) model.neighbors.push_back(neighbor_clusters(model.centroids, c, cfg.k_nn));
  return model;
}

std::vector<SampledTile> sample_clusters(const ClusterModel& model, const ClusterConfig& cfg) {
  std::vector<SampledTile> out;
  for (int c = 0; c < model.k(); ++c) {
    const auto sorted = model.members(c);
    if (sorted.empty()) continue;
    std::vector<std::vector<std::string>> bins;
    for (auto i : sorted) {
      const auto b = static_cast<std::size_t>(model.bin[i]);
      if (bins.size() <= b) bins.resize(b + 1);
      bins[b].push_back(model.tile_ids[i]);
    }
    const auto picked = sample_bins(bins, cfg.sample_fraction, mix_seed(cfg.seed, static_cast<std::uint64_t>(c)));
    // Recover each pick's bin from its position: picks are grouped by bin in order.
    std::size_t pos = 0;
    for (std::size_t b = 0; b < bins.size(); ++b) {
      const std::size_t draw = bin_draw_count(bins[b].size(), cfg.sample_fraction);
      for (std::size_t j = 0; j < draw; ++j) out.push_back({picked[pos++], c, static_cast<int>(b)});
    }
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream s(line);
  std::string f;
  while (std::getline(s, f, sep)) out.push_back(f);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

void write_cluster_report(const std::filesystem::path& path, const ClusterModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "#tile_id\tcluster\traw_distance\tnormalized_distance\tbin\n";
  std::vector<double> share(static_cast<std::size_t>(model.k()), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < model.tile_ids.size(); ++i) {
    out << model.tile_ids[i] << '\t' << model.assignment[i] << '\t' << fmt(model.distance[i]) << '\t'
        << fmt(model.normalized[i]) << '\t' << model.bin[i] << '\n';
    share[static_cast<std::size_t>(model.assignment[i])] += model.distance[i] * model.distance[i];
    total += model.distance[i] * model.distance[i];
  }
  const auto sizes = model.cluster_sizes();
  out << "#cluster\tid\tsize\tinertia_share\tneighbors\n";
  for (int c = 0; c < model.k(); ++c) {
    out << "#cluster\t" << c << '\t' << sizes[static_cast<std::size_t>(c)] << '\t'
        << fmt(total > 0.0 ? share[static_cast<std::size_t>(c)] / total : 0.0) << '\t';
    const auto& nb = model.neighbors[static_cast<std::size_t>(c)];
    for (std::size_t j = 0; j < nb.size(); ++j) out << (j ? "," : "") << nb[j];
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

ClusterModel read_cluster_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  ClusterModel model;
  std::vector<std::vector<int>> neighbors;
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split(line, '\t');
      if (line.rfind("#cluster\t", 0) == 0 && f.size() == 5 && f[1] != "id") {
        const auto c = static_cast<std::size_t>(std::stoi(f[1]));
        if (neighbors.size() <= c) neighbors.resize(c + 1);
        for (const auto& id : split(f[4], ','))
          if (!id.empty()) neighbors[c].push_back(std::stoi(id));
        continue;
      }
      if (line.front() == '#') continue;
      require(f.size() == 5, ErrorKind::Io, path.string() + ": expected 5 columns per tile row");
      model.tile_ids.push_back(f[0]);
      model.assignment.push_back(std::stoi(f[1]));
      model.distance.push_back(std::stod(f[2]));
      model.normalized.push_back(std::stod(f[3]));
      model.bin.push_back(std::stoi(f[4]));
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::Io, path.string() + ": malformed number");
  }
  model.neighbors = std::move(neighbors);
  model.centroids.resize(static_cast<Eigen::Index>(model.neighbors.size()), 0);
  return model;
}

void write_samples(const std::filesystem::path& path, const std::vector<SampledTile>& samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "#tile_id\tcluster\tbin\n";
  for (const auto& s : samples) out << s.tile_id << '\t' << s.cluster << '\t' << s.bin << '\n';
}

std::vector<SampledTile> read_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<SampledTile> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto f = split(line, '\t');
    require(f.size() == 3, ErrorKind::Io, path.string() + ": expected 3 columns");
    try {
      out.push_back({f[0], std::stoi(f[1]), std::stoi(f[2])});
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Io, path.string() + ": malformed number");
    }
  }
  return out;
}

}  // namespace tilecurate::cluster
