#pragma once

#include <filesystem>
#include <json.hpp>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "cluster/sampler.hpp"
#include "curation/journal.hpp"
#include "features/embedding.hpp"
#include "tiles/extract.hpp"

namespace tilecurate::service {

inline constexpr int kDefaultPort = 8700;
inline constexpr std::size_t kPageSize = 48;

/// Immutable project artifacts the service reads.
struct ReviewData {
  std::filesystem::path root;  // tile paths are relative to this
  std::vector<tiles::TileRecord> tiles;
  cluster::ClusterModel model;  // assignment, distances, bins, neighbors
  std::vector<cluster::SampledTile> samples;
  features::EmbeddingMatrix projected;  // may be empty
  std::shared_ptr<const curation::CurationContext> context;
  std::size_t cap = 70000;
};

/// Builds the curation context (neighbor graph, per-cluster sample counts) from the artifacts.
std::shared_ptr<const curation::CurationContext> make_context(const cluster::ClusterModel& model,
                                                              const std::vector<cluster::SampledTile>& samples,
                                                              curation::ClassRegistry classes = curation::ClassRegistry::standard());

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Transport-independent request handling. Reads work on journal snapshots;
/// mutations go through the curator's single writer.
class ReviewService {
 public:
  ReviewService(ReviewData data, const std::filesystem::path& journal_path,
                std::function<std::string()> clock = curation::utc_timestamp);

  Response list_clusters(const std::map<std::string, std::string>& query) const;
  Response cluster_tiles(const std::string& cluster, const std::map<std::string, std::string>& query) const;
  Response submit_label(const std::string& cluster, const std::string& body);
  Response list_proposals(const std::map<std::string, std::string>& query) const;
  Response resolve_proposal(const std::string& proposal, const std::string& body);
  Response progress() const;
  Response scatter() const;
  Response tile_image(const std::string& tile_id) const;

  nlohmann::json progress_json() const;
  curation::CurationState snapshot() const { return curator_.snapshot(); }

 private:
  nlohmann::json summary(int cluster, const curation::CurationState& state) const;
  nlohmann::json proposal_json(const curation::Proposal& p) const;
  int parse_cluster(const std::string& text) const;

  ReviewData data_;
  curation::Curator curator_;
  std::vector<std::vector<std::size_t>> members_;  // per cluster, (normalized distance, tile id) order
  std::vector<std::set<std::string>> sampled_;
  std::map<std::string, std::size_t> tile_index_;
};

/// HTTP front end; routes map one-to-one onto ReviewService.
class ReviewServer {
 public:
  explicit ReviewServer(ReviewService& service);
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); blocking.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tilecurate::service
