#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pipeline/config.hpp"
#include "service/review.hpp"

namespace tilecurate::pipeline {

enum class Stage { Extract, TrainAe, Embed, Reduce, Cluster, Sample, Assemble, ExportQupath, RenderMap, EvalSeg, Serve };

std::string_view stage_name(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);
const std::vector<Stage>& all_stages();
/// Every stage `stage` depends on, directly or not, in pipeline order.
std::vector<Stage> ancestors(Stage stage);

/// Fixed project subpaths.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path tiles() const { return root / "tiles"; }
  std::filesystem::path embeddings() const { return root / "embeddings"; }
  std::filesystem::path clusters() const { return root / "clusters"; }
  std::filesystem::path journal() const { return root / "journal"; }
  std::filesystem::path dataset() const { return root / "dataset"; }
  std::filesystem::path exports() const { return root / "exports"; }
  std::filesystem::path markers() const { return root / ".stages"; }

  std::filesystem::path tile_manifest() const { return tiles() / "manifest.tsv"; }
  std::filesystem::path slide_info() const { return tiles() / "slide.json"; }
  std::filesystem::path checkpoint() const { return embeddings() / "checkpoint"; }
  std::filesystem::path ae_metrics() const { return embeddings() / "ae_metrics.csv"; }
  std::filesystem::path latent() const { return embeddings() / "latent.dcpp"; }
  std::filesystem::path pooled() const { return embeddings() / "pooled.dcpp"; }
  std::filesystem::path pca() const { return embeddings() / "pca.dcpp"; }
  std::filesystem::path reduced() const { return embeddings() / "reduced.dcpp"; }
  std::filesystem::path projected() const { return embeddings() / "projected.dcpp"; }
  std::filesystem::path cluster_report() const { return clusters() / "report.tsv"; }
  std::filesystem::path centroids() const { return clusters() / "centroids.dcpp"; }
  std::filesystem::path samples() const { return clusters() / "samples.tsv"; }
  std::filesystem::path events() const { return journal() / "events.ndjson"; }
  std::filesystem::path dataset_manifest() const { return dataset() / "manifest.tsv"; }
  std::filesystem::path marker(Stage stage) const;
};

/// Exclusive advisory lock on <root>/.lock; throws a Locked error if held elsewhere.
class ProjectLock {
 public:
  explicit ProjectLock(const std::filesystem::path& root);
  ~ProjectLock();
  ProjectLock(const ProjectLock&) = delete;
  ProjectLock& operator=(const ProjectLock&) = delete;

 private:
  int fd_ = -1;
};

using StageProgress = std::function<void(std::string_view stage, std::size_t done, std::size_t total)>;

enum class RunResult { Ran, UpToDate };

class Project {
 public:
  /// Uses `config_path` if given, else <root>/tilecurate.conf if present, else defaults.
  static Project open(const std::filesystem::path& root, const std::filesystem::path& config_path = {});

  ProjectConfig& config() { return config_; }
  const Layout& layout() const { return layout_; }

  /// Runs one stage under the project lock. Missing or stale upstream stages
  /// raise MissingStage naming the earliest one; an up-to-date stage is a no-op.
  RunResult run(Stage stage, const StageProgress& progress = {});

  /// A marker is current iff its outputs match their recorded checksums and
  /// its fingerprint matches the present config and upstream markers.
  bool is_current(Stage stage) const;

  /// Review API over the project's artifacts (requires a current sample stage).
  std::unique_ptr<service::ReviewService> review_service() const;

  /// Holds the project lock and serves until the server stops. `on_ready`
  /// receives the bound port.
  void serve(const std::string& host, int port, const std::function<void(int)>& on_ready = {},
             service::ReviewServer** handle = nullptr);

  /// Journal mutations and reads outside the server, under the project lock.
  service::Response label(int cluster, const std::string& tissue, const std::string& reviewer, bool override_label);
  service::Response resolve(std::int64_t proposal, const std::string& decision, const std::string& reviewer);
  service::Response progress() const;

 private:
  Project(Layout layout, ProjectConfig config) : layout_(std::move(layout)), config_(std::move(config)) {}

  std::string fingerprint(Stage stage) const;
  void require_upstream(Stage stage) const;
  std::vector<std::filesystem::path> execute(Stage stage, const StageProgress& progress);
  void write_marker(Stage stage, const std::string& fingerprint, const std::vector<std::filesystem::path>& outputs) const;

  Layout layout_;
  ProjectConfig config_;
};

}  // namespace tilecurate::pipeline
