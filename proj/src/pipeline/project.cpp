#include "pipeline/project.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ae/train.hpp"
#include "common/checksum.hpp"
#include "common/error.hpp"
#include "curation/dataset.hpp"
#include "curation/exporters.hpp"
#include "features/pca.hpp"
#include "features/pooling.hpp"

namespace tilecurate::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct StageInfo {
  Stage stage;
  const char* name;
  std::optional<Stage> parent;
};

const std::vector<StageInfo>& stage_table() {
  static const std::vector<StageInfo> table = {
      {Stage::Extract, "extract", std::nullopt},
      {Stage::TrainAe, "train-ae", Stage::Extract},
      {Stage::Embed, "embed", Stage::TrainAe},
      {Stage::Reduce, "reduce", Stage::Embed},
      {Stage::Cluster, "cluster", Stage::Reduce},
      {Stage::Sample, "sample", Stage::Cluster},
      {Stage::Assemble, "assemble", Stage::Sample},
      {Stage::ExportQupath, "export-qupath", Stage::Sample},
      {Stage::RenderMap, "render-map", Stage::Sample},
      {Stage::EvalSeg, "eval-seg", Stage::Sample},
      {Stage::Serve, "serve", Stage::Sample},
  };
  return table;
}

const StageInfo& info(Stage s) { return stage_table()[static_cast<std::size_t>(s)]; }

// Config keys whose values change each stage's outputs.
std::vector<std::string> stage_keys(Stage s) {
  switch (s) {
    case Stage::Extract:
      return {"slide_id", "tile_px", "mask_downsample", "tissue_threshold", "saturation_floor", "blank_variance_floor",
              "pen_hue_min", "pen_hue_max", "pen_saturation", "pen_fraction"};
    case Stage::TrainAe:
      return {"ae_channels", "ae_strides", "loss", "learning_rate", "weight_decay", "batch_size",
              "epochs", "max_steps", "augment", "shuffle", "seed"};
    case Stage::Reduce: return {"pca_dim"};
    case Stage::Cluster: return {"m", "K", "k_rule", "g", "max_iter", "restarts", "tol", "k_nn", "seed"};
    case Stage::Sample: return {"sample_fraction", "seed"};
    case Stage::Assemble: return {"cap_per_class", "seed"};
    case Stage::RenderMap: return {"map_scale"};
    case Stage::EvalSeg: return {"eval_class", "eval_coverage"};
    default: return {};
  }
}

bool uses_journal(Stage s) {
  return s == Stage::Assemble || s == Stage::ExportQupath || s == Stage::RenderMap || s == Stage::EvalSeg;
}

std::string file_digest(const fs::path& p) { return fs::exists(p) ? sha256_file(p) : std::string("absent"); }

std::vector<fs::path> files_under(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

void clear_directory(const fs::path& dir) {
  if (fs::exists(dir)) fs::remove_all(dir);
  fs::create_directories(dir);
}

Image load_tile(const fs::path& root, const tiles::TileRecord& r) { return to_float(read_image(root / r.path)); }

ae::TileSource tile_source(const fs::path& root, const std::vector<tiles::TileRecord>& records) {
  return {records.size(), [root, records](std::size_t i) { return load_tile(root, records[i]); }};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "short write to " + p.string());
}


}  // namespace

std::string_view stage_name(Stage stage) { return info(stage).name; }

std::optional<Stage> parse_stage(std::string_view name) {
  for (const auto& s : stage_table())
    if (name == s.name) return s.stage;
  return std::nullopt;
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = [] {
    std::vector<Stage> out;
    for (const auto& s : stage_table()) out.push_back(s.stage);
    return out;
  }();
  return stages;
}

std::vector<Stage> ancestors(Stage stage) {
  std::vector<Stage> out;
  for (auto p = info(stage).parent; p; p = info(*p).parent) out.push_back(*p);
  std::reverse(out.begin(), out.end());
  return out;
}

fs::path Layout::marker(Stage stage) const { return markers() / (std::string(stage_name(stage)) + ".done"); }

ProjectLock::ProjectLock(const fs::path& root) {
  fs::create_directories(root);
  const fs::path path = root / ".lock";
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  require(fd_ >= 0, ErrorKind::Io, "cannot open lock file " + path.string());
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorKind::Locked, "project " + root.string() + " is locked by another tilecurate process");
  }
}

ProjectLock::~ProjectLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

Project Project::open(const fs::path& root, const fs::path& config_path) {
  fs::path cfg = config_path;
  if (cfg.empty() && fs::exists(root / "tilecurate.conf")) cfg = root / "tilecurate.conf";
  ProjectConfig config = cfg.empty() ? config_from_text("", fs::absolute(root)) : load_config(cfg);
  return Project(Layout{fs::absolute(root)}, std::move(config));
}

std::string Project::fingerprint(Stage stage) const {
  json fp;
  fp["stage"] = stage_name(stage);
  for (const auto& key : stage_keys(stage)) fp["config"][key] = config_.canonical.at(key);
  if (const auto parent = info(stage).parent) fp["upstream"] = file_digest(layout_.marker(*parent));
  if (stage == Stage::Extract) {
    require(!config_.slide.empty(), ErrorKind::Config, "config key 'slide' is required by extract");
    require(fs::exists(config_.slide), ErrorKind::Config, "config key 'slide': no such file " + config_.slide.string());
    fp["slide"] = sha256_file(config_.slide);
  }
  if (stage == Stage::Reduce && !config_.pca_model.empty()) fp["pca_model"] = file_digest(config_.pca_model);
  if (stage == Stage::EvalSeg) {
    fp["eval_mask"] = config_.eval_mask.empty() ? "none" : file_digest(config_.eval_mask);
    fp["eval_predictions"] = config_.eval_predictions.empty() ? "none" : file_digest(config_.eval_predictions);
  }
  if (uses_journal(stage)) fp["journal"] = file_digest(layout_.events());
  return sha256_hex(fp.dump());
}

bool Project::is_current(Stage stage) const {
  const fs::path m = layout_.marker(stage);
  if (!fs::exists(m)) return false;
  try {
    const json marker = read_json(m);
    if (marker.at("fingerprint") != fingerprint(stage)) return false;
    for (const auto& [rel, digest] : marker.at("outputs").items()) {
      const fs::path p = layout_.root / rel;
      if (!fs::exists(p) || sha256_file(p) != digest.get<std::string>()) return false;
    }
    return true;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    return false;
  } catch (const json::exception&) {
    return false;
  }
}

void Project::require_upstream(Stage stage) const {
  std::string missing;
  std::optional<Stage> first;
  for (Stage up : ancestors(stage))
    if (!is_current(up)) {
      if (!first) first = up;
      missing += (missing.empty() ? "" : ", ") + std::string(stage_name(up));
    }
  if (first)
    throw Error(ErrorKind::MissingStage, "stage '" + std::string(stage_name(stage)) +
                                             "' needs upstream stages that are missing or out of date: " + missing +
                                             " (run '" + std::string(stage_name(*first)) + "' next)");
}

void Project::write_marker(Stage stage, const std::string& fp, const std::vector<fs::path>& outputs) const {
  fs::create_directories(layout_.markers());
  json marker;
  marker["stage"] = stage_name(stage);
  marker["fingerprint"] = fp;
  marker["outputs"] = json::object();
  for (const auto& p : outputs) marker["outputs"][fs::relative(p, layout_.root).generic_string()] = sha256_file(p);
  write_text(layout_.marker(stage), marker.dump(1) + "\n");
}

RunResult Project::run(Stage stage, const StageProgress& progress) {
  require(stage != Stage::Serve, ErrorKind::Contract, "use serve() to run the review service");
  ProjectLock lock(layout_.root);
  require_upstream(stage);
  const std::string fp = fingerprint(stage);
  if (is_current(stage)) return RunResult::UpToDate;
  fs::remove(layout_.marker(stage));
  const auto outputs = execute(stage, progress);
  write_marker(stage, fp, outputs);
  return RunResult::Ran;
}

namespace {

struct Artifacts {
  std::vector<tiles::TileRecord> tiles;
  cluster::ClusterModel model;
  std::vector<cluster::SampledTile> samples;
};

Artifacts load_artifacts(const Layout& layout) {
  Artifacts a;
  a.tiles = tiles::read_manifest(layout.tile_manifest());
  a.model = cluster::read_cluster_report(layout.cluster_report());
  a.samples = cluster::read_samples(layout.samples());
  return a;
}

// Every tile of an actively labeled cluster, in tile-manifest order.
std::vector<curation::LabeledTile> labeled_tiles(const Artifacts& a, const curation::CurationState& state) {
  std::map<std::string, int> cluster_of;
  for (std::size_t i = 0; i < a.model.tile_ids.size(); ++i) cluster_of[a.model.tile_ids[i]] = a.model.assignment[i];
  std::vector<curation::LabeledTile> out;
  for (const auto& t : a.tiles) {
    const auto it = cluster_of.find(t.tile_id);
    if (it == cluster_of.end()) continue;
    if (const auto& label = state.active_label(it->second)) out.push_back({t, label->tissue});
  }
  return out;
}

}  // namespace

std::vector<fs::path> Project::execute(Stage stage, const StageProgress& progress) {
  const auto report = [&](std::size_t done, std::size_t total) {
    if (progress) progress(stage_name(stage), done, total);
  };
  const Layout& L = layout_;
  std::vector<fs::path> outputs;
  switch (stage) {
    case Stage::Extract: {
      tiles::SlideSource slide{config_.slide_id, tiles::ImageSlideReader::open(config_.slide), std::nullopt};
      slide.validate(config_.extraction.tile_px);
      clear_directory(L.tiles());
      const auto result =
          tiles::extract_tiles(slide, config_.extraction, L.tiles(), "tiles/", config_.workers, report);
      if (result.candidates == 0) report(0, 0);
      tiles::write_manifest(L.tile_manifest(), result.records);
      const auto l0 = slide.level0();
      write_text(L.slide_info(), json{{"slide_id", slide.slide_id},
                                      {"width", l0.width},
                                      {"height", l0.height},
                                      {"candidates", result.candidates},
                                      {"kept", result.records.size()},
                                      {"rejected_blank", result.rejected_blank},
                                      {"rejected_pen_mark", result.rejected_pen}}
                                         .dump(1) + "\n");
      return files_under(L.tiles());
    }
    case Stage::TrainAe: {
      const auto records = tiles::read_manifest(L.tile_manifest());
      require(!records.empty(), ErrorKind::Config, "extract produced no tiles; lower 'tissue_threshold' or check 'slide'");
      fs::create_directories(L.embeddings());
      const int epochs = config_.training.epochs;
      const auto ck = ae::train_autoencoder(config_.architecture(), tile_source(L.root, records), config_.training,
                                            [&](const ae::EpochMetrics& m) {
                                              report(static_cast<std::size_t>(m.epoch), static_cast<std::size_t>(epochs));
                                            });
      fs::remove_all(L.checkpoint());
      ae::save_checkpoint(L.checkpoint(), ck);
      ae::write_metrics_csv(L.ae_metrics(), ck.history);
      outputs = files_under(L.checkpoint());
      outputs.push_back(L.ae_metrics());
      return outputs;
    }
    case Stage::Embed: {
      const auto records = tiles::read_manifest(L.tile_manifest());
      const auto ck = ae::load_checkpoint(L.checkpoint());
      std::vector<std::string> ids;
      for (const auto& r : records) ids.push_back(r.tile_id);
      features::EmbeddingMatrix latent(features::Stage::Latent, records.size(), ck.architecture.latent_size());
      latent.tile_ids = ids;
      constexpr std::size_t kChunk = 64;
      for (std::size_t start = 0; start < records.size(); start += kChunk) {
        const std::size_t end = std::min(records.size(), start + kChunk);
        const std::vector<tiles::TileRecord> part(records.begin() + static_cast<long>(start),
                                                  records.begin() + static_cast<long>(end));
        const auto chunk = ae::encode_tiles(ck, tile_source(L.root, part), {}, config_.embed_batch, config_.workers);
        std::copy(chunk.values.begin(), chunk.values.end(), latent.row(start).data());
        report(end, records.size());
      }
      features::save_embeddings(L.latent(), latent);
      return {L.latent(), features::ids_path(L.latent())};
    }
    case Stage::Reduce: {
      const auto latent = features::load_embeddings(L.latent());
      const auto pooled = features::global_average_pool(latent);
      const auto model = config_.pca_model.empty()
                             ? features::pca_fit(pooled, static_cast<std::size_t>(config_.pca_dim))
                             : features::load_pca(config_.pca_model);
      if (!config_.pca_model.empty())
        require(model.in_dim() == pooled.dim, ErrorKind::Config,
                "config key 'pca_model': model expects dim " + std::to_string(model.in_dim()));
      const auto reduced = features::pca_transform(model, pooled);
      const auto projected = features::project_2d(reduced);
      features::save_embeddings(L.pooled(), pooled);
      features::save_pca(L.pca(), model);
      features::save_embeddings(L.reduced(), reduced);
      features::save_embeddings(L.projected(), projected);
      report(1, 1);
      return {L.pooled(), features::ids_path(L.pooled()), L.pca(), L.reduced(), features::ids_path(L.reduced()),
              L.projected(), features::ids_path(L.projected())};
    }
    case Stage::Cluster: {
      const auto reduced = features::load_embeddings(L.reduced());
      const int k = cluster::choose_cluster_count(reduced.rows, config_.clustering);
      if (static_cast<std::size_t>(k) > reduced.rows)
        throw Error(ErrorKind::Config, "config key 'K': " + std::to_string(k) + " clusters requested for " +
                                           std::to_string(reduced.rows) + " tiles");
      const auto model = cluster::build_cluster_model(reduced, config_.clustering);
      fs::create_directories(L.clusters());
      cluster::write_cluster_report(L.cluster_report(), model);
      features::EmbeddingMatrix centroids(features::Stage::Reduced, static_cast<std::size_t>(model.k()), reduced.dim);
      for (int c = 0; c < model.k(); ++c) {
        centroids.tile_ids[static_cast<std::size_t>(c)] = "cluster:" + std::to_string(c);
        for (std::size_t d = 0; d < reduced.dim; ++d)
          centroids.row(static_cast<std::size_t>(c))[d] = static_cast<float>(model.centroids(c, static_cast<Eigen::Index>(d)));
      }
      features::save_embeddings(L.centroids(), centroids);
      report(1, 1);
      return {L.cluster_report(), L.centroids(), features::ids_path(L.centroids())};
    }
    case Stage::Sample: {
      const auto model = cluster::read_cluster_report(L.cluster_report());
      const auto samples = cluster::sample_clusters(model, config_.clustering);
      cluster::write_samples(L.samples(), samples);
      report(1, 1);
      return {L.samples()};
    }
    case Stage::Assemble: {
      const auto a = load_artifacts(L);
      const auto state = curation::replay(service::make_context(a.model, a.samples), curation::Journal(L.events()).events());
      const auto manifest = curation::assemble_dataset(state, a.samples, a.tiles, config_.cap_per_class, config_.seed);
      clear_directory(L.dataset());
      curation::write_dataset_manifest(L.dataset_manifest(), manifest);
      curation::materialize_dataset(manifest, L.root, L.dataset());
      report(manifest.entries.size(), manifest.entries.size());
      return files_under(L.dataset());
    }
    case Stage::ExportQupath: {
      const auto a = load_artifacts(L);
      const auto ctx = service::make_context(a.model, a.samples);
      const auto state = curation::replay(ctx, curation::Journal(L.events()).events());
      fs::create_directories(L.exports());
      const fs::path out = L.exports() / (config_.slide_id + ".geojson");
      write_text(out, curation::export_qupath_geojson(labeled_tiles(a, state), ctx->classes));
      report(1, 1);
      return {out};
    }
    case Stage::RenderMap: {
      const auto a = load_artifacts(L);
      const auto ctx = service::make_context(a.model, a.samples);
      const auto state = curation::replay(ctx, curation::Journal(L.events()).events());
      const json slide = read_json(L.slide_info());
      require(config_.extraction.tile_px % config_.map_scale == 0, ErrorKind::Config,
              "config key 'map_scale': must divide tile_px");
      const auto map = curation::render_tissue_map(slide.at("width"), slide.at("height"), labeled_tiles(a, state),
                                                   ctx->classes, config_.map_scale);
      fs::create_directories(L.exports());
      const fs::path out = L.exports() / (config_.slide_id + "_map.png");
      write_png(out, map);
      report(1, 1);
      return {out};
    }
    case Stage::EvalSeg: {
      require(!config_.eval_mask.empty(), ErrorKind::Config, "config key 'eval_mask' is required by eval-seg");
      require(fs::exists(config_.eval_mask), ErrorKind::Config,
              "config key 'eval_mask': no such file " + config_.eval_mask.string());
      const auto a = load_artifacts(L);
      const auto ctx = service::make_context(a.model, a.samples);
      const auto state = curation::replay(ctx, curation::Journal(L.events()).events());
      const json slide = read_json(L.slide_info());
      const int tile = config_.extraction.tile_px;
      const int width = slide.at("width"), height = slide.at("height");
      curation::PredictionGrid grid{height / tile, width / tile, {}};
      grid.cells.resize(static_cast<std::size_t>(grid.rows) * grid.cols);
      auto put = [&](const tiles::TileRecord& r, const std::string& tissue) {
        grid.cells[static_cast<std::size_t>(r.y / tile) * grid.cols + r.x / tile] = tissue;
      };
      if (config_.eval_predictions.empty()) {
        for (const auto& lt : labeled_tiles(a, state)) put(lt.tile, lt.tissue);
      } else {
        std::map<std::string, const tiles::TileRecord*> by_id;
        for (const auto& t : a.tiles) by_id[t.tile_id] = &t;
        std::ifstream in(config_.eval_predictions);
        require(static_cast<bool>(in), ErrorKind::Config, "config key 'eval_predictions': cannot read file");
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty() || line.front() == '#') continue;
          const auto tab = line.find('\t');
          require(tab != std::string::npos, ErrorKind::Config, "config key 'eval_predictions': expected tile_id<TAB>class");
          const auto it = by_id.find(line.substr(0, tab));
          require(it != by_id.end(), ErrorKind::Config,
                  "config key 'eval_predictions': unknown tile " + line.substr(0, tab));
          put(*it->second, line.substr(tab + 1));
        }
      }
      const Rgb8Image gt = read_image(config_.eval_mask);
      require(gt.width == width && gt.height == height, ErrorKind::Config,
              "config key 'eval_mask': mask is " + std::to_string(gt.width) + "x" + std::to_string(gt.height) +
                  ", slide is " + std::to_string(width) + "x" + std::to_string(height));
      curation::BinaryMask mask{grid.cols * tile, grid.rows * tile, {}};
      mask.values.resize(static_cast<std::size_t>(mask.width) * mask.height);
      for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
          const auto* p = gt.at(x, y);
          mask.values[static_cast<std::size_t>(y) * mask.width + x] = (p[0] | p[1] | p[2]) != 0;
        }
      const auto score =
          curation::eval_tile_segmentation(grid, mask, config_.eval_class, tile, config_.eval_coverage);
      fs::create_directories(L.exports());
      const fs::path out = L.exports() / "eval_seg.json";
      write_text(out, json{{"positive_class", config_.eval_class},
                           {"coverage", config_.eval_coverage},
                           {"iou", score.iou},
                           {"dice", score.dice},
                           {"tp", score.tp},
                           {"fp", score.fp},
                           {"fn", score.fn},
                           {"tn", score.tn}}
                          .dump(1) + "\n");
      report(1, 1);
      return {out};
    }
    case Stage::Serve: break;
  }
  throw Error(ErrorKind::Contract, "stage has no batch implementation");
}

std::unique_ptr<service::ReviewService> Project::review_service() const {
  require_upstream(Stage::Serve);
  auto a = load_artifacts(layout_);
  service::ReviewData data;
  data.root = layout_.root;
  data.context = service::make_context(a.model, a.samples);
  data.tiles = std::move(a.tiles);
  data.model = std::move(a.model);
  data.samples = std::move(a.samples);
  if (fs::exists(layout_.projected())) data.projected = features::load_embeddings(layout_.projected());
  data.cap = config_.cap_per_class;
  fs::create_directories(layout_.journal());
  return std::make_unique<service::ReviewService>(std::move(data), layout_.events());
}

void Project::serve(const std::string& host, int port, const std::function<void(int)>& on_ready,
                    service::ReviewServer** handle) {
  ProjectLock lock(layout_.root);
  auto svc = review_service();
  service::ReviewServer server(*svc);
  const int bound = server.bind(host, port);
  if (handle) *handle = &server;
  if (on_ready) on_ready(bound);
  server.listen();
  if (handle) *handle = nullptr;
}

service::Response Project::label(int cluster, const std::string& tissue, const std::string& reviewer,
                                 bool override_label) {
  ProjectLock lock(layout_.root);
  json body = {{"class", tissue}, {"reviewer", reviewer}, {"override", override_label}};
  return review_service()->submit_label(std::to_string(cluster), body.dump());
}

service::Response Project::resolve(std::int64_t proposal, const std::string& decision, const std::string& reviewer) {
  ProjectLock lock(layout_.root);
  json body = {{"decision", decision}, {"reviewer", reviewer}};
  return review_service()->resolve_proposal(std::to_string(proposal), body.dump());
}

service::Response Project::progress() const { return review_service()->progress(); }

}  // namespace tilecurate::pipeline
