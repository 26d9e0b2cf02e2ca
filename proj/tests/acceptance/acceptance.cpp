// One PASS/FAIL line per acceptance criterion. `tc_acceptance <name>...` runs a subset.
#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ae/checkpoint.hpp"
#include "ae/loss.hpp"
#include "ae/train.hpp"
#include "cluster/kmeans.hpp"
#include "cluster/sampler.hpp"
#include "common/rng.hpp"
#include "curation/exporters.hpp"
#include "curation/journal.hpp"
#include "features/embedding.hpp"
#include "features/pca.hpp"
#include "quality/ssim.hpp"
#include "service/review.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "tilecurate/tilecurate.h"
#include "tiles/extract.hpp"

namespace fs = std::filesystem;
using namespace tilecurate;
namespace tt = tilecurate::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tc_acceptance_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome binning() {
  for (std::size_t n = 1; n <= 200; ++n)
    for (int g = 1; g <= 10; ++g) {
      const auto bins = cluster::equal_frequency_bins(n, g);
      std::vector<std::size_t> sizes(static_cast<std::size_t>(g), 0);
      bool ordered = bins.size() == n;
      for (std::size_t i = 0; ordered && i < n; ++i) {
        if (bins[i] < 0 || bins[i] >= g || (i && bins[i] < bins[i - 1])) ordered = false;
        else ++sizes[static_cast<std::size_t>(bins[i])];
      }
      const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
      const bool larger_first = std::is_sorted(sizes.rbegin(), sizes.rend());
      if (!ordered || *hi - *lo > 1 || !larger_first)
        return {false, "n=" + std::to_string(n) + " g=" + std::to_string(g)};
    }
  return {true, "2000 (n, g) pairs"};
}

Outcome kmeans_oracle() {
  int within = 0;
  bool monotone = true;
  for (int inst = 0; inst < 100; ++inst) {
    Rng rng(mix_seed(1234, static_cast<std::uint64_t>(inst)));
    const int n = 3 + static_cast<int>(rng.below(8));
    Eigen::MatrixXd data(n, 2);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < n; ++i) {
      data(i, 0) = rng.uniform(-1, 1);
      data(i, 1) = rng.uniform(-1, 1);
      pts.push_back({data(i, 0), data(i, 1)});
    }
    cluster::KMeansConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(inst);
    const auto r = cluster::kmeans(data, 2, cfg);
    if (r.inertia <= 1.05 * tt::brute_force_inertia(pts, 2) + 1e-12) ++within;
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i)
      if (r.inertia_history[i] > r.inertia_history[i - 1] * (1 + 1e-12)) monotone = false;
  }
  return {within >= 95 && monotone,
          std::to_string(within) + "/100 within 1.05x optimum, Lloyd inertia " + (monotone ? "nonincreasing" : "INCREASED")};
}

Outcome pca_oracle() {
  double worst = 0;
  for (int inst = 0; inst < 20; ++inst) {
    Rng rng(mix_seed(77, static_cast<std::uint64_t>(inst)));
    Eigen::MatrixXd m(50, 8);
    std::vector<std::vector<double>> rows(50, std::vector<double>(8));
    for (int i = 0; i < 50; ++i)
      for (int j = 0; j < 8; ++j) rows[i][j] = m(i, j) = rng.normal() * (1.0 + j) + 0.3 * j;
    const auto model = features::pca_fit(m, 8);
    const auto oracle = tt::pca_oracle(rows, 8);
    for (int k = 0; k < 8; ++k) {
      worst = std::max(worst, std::abs(model.variances(k) - oracle.variances[k]));
      worst = std::max(worst, std::abs(model.mean(k) - oracle.mean[k]));
      for (int d = 0; d < 8; ++d) worst = std::max(worst, std::abs(model.components(k, d) - oracle.components[k][d]));
    }
  }
  return {worst <= 1e-6, "max abs deviation " + fmt("%.3g", worst)};
}

Outcome ssim_contract() {
  Rng rng(5);
  auto random_image = [&] {
    Image im(3, 24, 24);
    for (auto& v : im.data) v = static_cast<float>(rng.uniform());
    return im;
  };
  const Image a = random_image();
  const double identity = quality::ssim(a, a);
  const double closed = quality::ssim(Image(1, 32, 32, 0.2f), Image(1, 32, 32, 0.6f));
  const double expected = (2 * 0.2 * 0.6 + 1e-4) / (0.2 * 0.2 + 0.6 * 0.6 + 1e-4);
  double asym = 0;
  for (int i = 0; i < 100; ++i) {
    const Image x = random_image(), y = random_image();
    asym = std::max(asym, std::abs(quality::ssim(x, y) - quality::ssim(y, x)));
  }
  const bool ok = std::abs(identity - 1.0) <= 1e-12 && std::abs(closed - 0.6001) <= 1e-4 &&
                  std::abs(closed - expected) <= 1e-6 && asym <= 1e-12;
  return {ok, "identity " + fmt("%.15f", identity) + ", constant pair " + fmt("%.6f", closed) + ", asymmetry " +
                  fmt("%.2g", asym)};
}

// Central differences on every 7th parameter entry of a double-precision miniature.
double gradient_check() {
  ae::AeArchitecture arch;
  arch.tile_px = 16;
  arch.channels = {4, 4};
  arch.strides = {2, 1};
  arch.latent_side = 8;
  auto model = ae::Autoencoder<double>::build(arch, 3);
  const auto x = ae::to_tensor<double>(tt::texture_tiles(2, 16, 11), arch);
  auto loss_at = [&] {
    const auto y = model.forward_train(x);
    return ae::reconstruction_loss<double>(x, y, ae::LossKind::Ssim, nullptr);
  };
  model.zero_grad();
  const auto y = model.forward_train(x);
  ae::Tensor<double> grad;
  ae::reconstruction_loss<double>(x, y, ae::LossKind::Ssim, &grad);
  model.backward(grad);
  double worst = 0;
  const double h = 1e-5;
  for (auto* p : model.parameters()) {
    if (!p->trainable) continue;
    for (std::size_t i = 0; i < p->numel(); i += 7) {
      const double keep = p->value[i];
      p->value[i] = keep + h;
      const double up = loss_at();
      p->value[i] = keep - h;
      const double down = loss_at();
      p->value[i] = keep;
      const double num = (up - down) / (2 * h), an = p->grad[i];
      // Biases feeding batch norm have a true gradient of zero; the floor keeps
      // round-off in the finite difference from reading as relative error.
      worst = std::max(worst, std::abs(num - an) / std::max(std::abs(num) + std::abs(an), 1e-7));
    }
  }
  return worst;
}

ae::AeArchitecture harness_arch() {
  ae::AeArchitecture arch;
  arch.tile_px = 64;
  arch.channels = {16, 32, 64, 64, 64, 64};
  arch.strides = {2, 2, 2, 1, 1, 1};
  arch.latent_side = 8;
  return arch;
}

double mean_ssim(const ae::Checkpoint& ck, const std::vector<Image>& tiles) {
  double s = 0;
  for (const auto& t : tiles) s += ae::reconstruct(ck, t).ssim;
  return s / static_cast<double>(tiles.size());
}

Outcome autoencoder() {
  const double grad_err = gradient_check();

  ae::TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.weight_decay = 0;
  cfg.batch_size = 8;
  cfg.augment = false;
  cfg.epochs = 2000;
  cfg.max_steps = 2000;
  cfg.seed = 1;
  const auto train = tt::texture_tiles(8, 64, 21);
  const auto t0 = std::chrono::steady_clock::now();
  const auto ck = ae::train_autoencoder(harness_arch(), ae::TileSource::from_images(train), cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double overfit = mean_ssim(ck, train);

  // SSIM-trained vs MSE-trained, same seed and config, scored on held-out tiles.
  ae::TrainConfig cmp = cfg;
  cmp.epochs = 40;
  cmp.max_steps = 0;
  cmp.batch_size = 8;
  const auto corpus = tt::texture_tiles(48, 64, 31);
  const auto held_out = tt::texture_tiles(24, 64, 32);
  cmp.loss = ae::LossKind::Ssim;
  const double by_ssim = mean_ssim(ae::train_autoencoder(harness_arch(), ae::TileSource::from_images(corpus), cmp), held_out);
  cmp.loss = ae::LossKind::Mse;
  const double by_mse = mean_ssim(ae::train_autoencoder(harness_arch(), ae::TileSource::from_images(corpus), cmp), held_out);

  const bool ok = grad_err <= 1e-3 && overfit >= 0.95 && secs <= 600 && by_ssim >= by_mse;
  return {ok, "grad rel err " + fmt("%.2e", grad_err) + ", overfit SSIM " + fmt("%.4f", overfit) + " in " +
                  fmt("%.0f", secs) + " s, held-out SSIM " + fmt("%.4f", by_ssim) + " (ssim loss) vs " +
                  fmt("%.4f", by_mse) + " (mse loss)"};
}

// ---------------------------------------------------------------------------

struct CapiProject {
  tc_project* p = nullptr;
  explicit CapiProject(const fs::path& root) {
    if (tc_project_open(root.c_str(), nullptr, &p) != TC_OK) throw std::runtime_error(tc_last_error());
  }
  ~CapiProject() { tc_project_close(p); }
  void run(const char* stage) {
    if (tc_run_stage(p, stage, nullptr, nullptr, nullptr) != TC_OK)
      throw std::runtime_error(std::string(stage) + ": " + tc_last_error());
  }
};

const char* const kE2eConfig = R"(slide = slide.png
ae_channels = 8,16,32,64,128,512
ae_strides = 2,2,2,2,2,1
learning_rate = 0.001
batch_size = 16
epochs = 3
pca_dim = 16
K = 6
seed = 7
)";

std::map<std::string, std::string> tree_contents(const fs::path& root, const std::vector<std::string>& dirs) {
  std::map<std::string, std::string> out;
  for (const auto& d : dirs)
    for (const auto& e : fs::recursive_directory_iterator(root / d))
      if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

Outcome end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path base = scratch_dir("e2e");
  const auto slide = tt::make_synthetic_slide(4096, 256, 99);
  std::array<fs::path, 2> roots{base / "run1", base / "run2"};
  for (const auto& root : roots) {
    fs::create_directories(root);
    write_png(root / "slide.png", slide.image);
    std::ofstream(root / "tilecurate.conf") << kE2eConfig;
    CapiProject project(root);
    for (const char* stage : {"extract", "train-ae", "embed", "reduce", "cluster", "sample"}) project.run(stage);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::vector<std::string> dirs{"tiles", "embeddings", "clusters"};
  const bool identical = tree_contents(roots[0], dirs) == tree_contents(roots[1], dirs);

  const auto model = cluster::read_cluster_report(roots[0] / "clusters" / "report.tsv");
  const auto samples = cluster::read_samples(roots[0] / "clusters" / "samples.tsv");
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(model.k()));
  std::vector<std::vector<std::size_t>> counts(groups.size(), std::vector<std::size_t>(tt::kTextureClasses, 0));
  for (std::size_t i = 0; i < model.tile_ids.size(); ++i) {
    int x = 0, y = 0;
    const auto& id = model.tile_ids[i];
    std::sscanf(id.c_str() + id.find(':') + 1, "%d:%d", &x, &y);
    const int planted = slide.label_at(x, y);
    if (planted < 0) return {false, "tile " + id + " lies on background"};
    groups[static_cast<std::size_t>(model.assignment[i])].push_back(planted);
    ++counts[static_cast<std::size_t>(model.assignment[i])][static_cast<std::size_t>(planted)];
  }
  const auto adm = cluster::shannon_admixture(groups, tt::kTextureClasses);
  double oracle = 0;
  for (const auto& c : counts) oracle += tt::entropy_oracle(c, tt::kTextureClasses);
  oracle /= static_cast<double>(counts.size());

  std::set<std::pair<int, int>> populated, sampled;
  for (std::size_t i = 0; i < model.tile_ids.size(); ++i) populated.insert({model.assignment[i], model.bin[i]});
  for (const auto& s : samples) sampled.insert({s.cluster, s.bin});

  std::set<int> planted_seen;
  for (const auto& g : groups) planted_seen.insert(g.begin(), g.end());

  const bool ok = identical && planted_seen.size() == tt::kTextureClasses && adm.average <= 0.2 && std::abs(adm.average - oracle) < 1e-12 &&
                  populated == sampled && secs <= 900;
  if (!std::getenv("TC_KEEP")) fs::remove_all(base);
  return {ok, std::to_string(model.tile_ids.size()) + " tiles of " + std::to_string(planted_seen.size()) + " planted classes, K=" +
                  std::to_string(model.k()) + ", admixture " +
                  fmt("%.4f", adm.average) + ", " + std::to_string(sampled.size()) + "/" +
                  std::to_string(populated.size()) + " bins sampled, reruns " +
                  (identical ? "byte-identical" : "DIFFER") + ", " + fmt("%.0f", secs) + " s"};
}

// ---------------------------------------------------------------------------

Outcome segmentation() {
  const int tile = 6, side = 8 * tile;
  const std::vector<std::string> classes{"TUM", "STR", "LYM"};
  for (int inst = 0; inst < 1000; ++inst) {
    Rng rng(mix_seed(4242, static_cast<std::uint64_t>(inst)));
    curation::PredictionGrid grid{8, 8, {}};
    for (int i = 0; i < 64; ++i)
      grid.cells.push_back(rng.below(4) == 3 ? std::nullopt : std::optional<std::string>(classes[rng.below(3)]));
    curation::BinaryMask mask{side, side, std::vector<std::uint8_t>(side * side, 0)};
    std::vector<unsigned char> raw(side * side);
    for (int t = 0; t < 64; ++t) {
      const double density = rng.uniform();
      for (int y = 0; y < tile; ++y)
        for (int x = 0; x < tile; ++x) {
          const std::size_t idx = static_cast<std::size_t>((t / 8) * tile + y) * side + (t % 8) * tile + x;
          raw[idx] = mask.values[idx] = rng.uniform() < density;
        }
    }
    const double coverage = inst % 2 ? 0.5 : rng.uniform();
    const auto got = curation::eval_tile_segmentation(grid, mask, "TUM", tile, coverage);
    const auto want = tt::confusion_oracle(grid.cells, 8, 8, raw, tile, "TUM", coverage);
    const double iou = (want.tp + want.fp + want.fn) ? double(want.tp) / (want.tp + want.fp + want.fn) : 1.0;
    const double dice = (2 * want.tp + want.fp + want.fn) ? 2.0 * want.tp / (2 * want.tp + want.fp + want.fn) : 1.0;
    if (got.tp != want.tp || got.fp != want.fp || got.fn != want.fn || got.tn != want.tn || got.iou != iou ||
        got.dice != dice)
      return {false, "grid " + std::to_string(inst) + " disagrees with the oracle"};
  }
  // Worked example: 32 positive tiles all predicted, 16 extra predictions.
  curation::PredictionGrid grid{8, 8, std::vector<std::optional<std::string>>(64)};
  curation::BinaryMask mask{8 * tile, 8 * tile, std::vector<std::uint8_t>(64 * tile * tile, 0)};
  for (int t = 0; t < 48; ++t) grid.cells[t] = "TUM";
  for (int t = 0; t < 32; ++t)
    for (int y = 0; y < tile; ++y)
      for (int x = 0; x < tile; ++x) mask.values[static_cast<std::size_t>((t / 8) * tile + y) * side + (t % 8) * tile + x] = 1;
  const auto s = curation::eval_tile_segmentation(grid, mask, "TUM", tile);
  const bool ok = s.tp == 32 && s.fp == 16 && s.fn == 0 && std::abs(s.iou - 0.6667) < 5e-5 && std::abs(s.dice - 0.8) < 1e-12;
  return {ok, "1000 grids match; worked example IoU " + fmt("%.4f", s.iou) + " Dice " + fmt("%.4f", s.dice)};
}

Outcome round_trips() {
  const fs::path dir = scratch_dir("formats");
  std::vector<std::string> failures;

  // GeoJSON
  std::vector<curation::LabeledTile> labeled;
  Rng rng(8);
  const auto classes = curation::ClassRegistry::standard();
  const auto names = classes.names();
  for (int i = 0; i < 40; ++i) {
    tiles::TileRecord r;
    r.slide_id = "slide";
    r.x = static_cast<int>(rng.below(100)) * 256;
    r.y = static_cast<int>(rng.below(100)) * 256;
    r.width = r.height = 256;
    r.tile_id = tiles::make_tile_id(r.slide_id, r.x, r.y);
    labeled.push_back({r, i % 7 == 6 ? std::string("OTHER") : names[rng.below(names.size())]});
  }
  const auto parsed = curation::parse_qupath_geojson(curation::export_qupath_geojson(labeled, classes));
  bool geo_ok = parsed.size() == labeled.size();
  for (std::size_t i = 0; geo_ok && i < parsed.size(); ++i) {
    const auto& t = labeled[i].tile;
    geo_ok = parsed[i] == curation::GeoTile{t.x, t.y, t.width, t.height, labeled[i].tissue};
  }
  if (!geo_ok) failures.push_back("geojson");

  // Embedding store
  features::EmbeddingMatrix emb(features::Stage::Latent, 13, 128);
  for (std::size_t i = 0; i < emb.rows; ++i) emb.tile_ids[i] = "s:" + std::to_string(i * 256) + ":0";
  for (auto& v : emb.values) v = static_cast<float>(rng.normal());
  features::save_embeddings(dir / "emb.dcpp", emb);
  const auto back = features::load_embeddings(dir / "emb.dcpp");
  if (!(back == emb) || std::memcmp(back.values.data(), emb.values.data(), emb.values.size() * sizeof(float)) != 0)
    failures.push_back("embedding store");

  // Checkpoint
  ae::AeArchitecture arch;
  arch.tile_px = 32;
  arch.channels = {4, 8};
  arch.strides = {2, 2};
  arch.latent_side = 8;
  ae::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  auto ck = ae::train_autoencoder(arch, ae::TileSource::from_images(tt::texture_tiles(6, 32, 2)), cfg);
  ae::save_checkpoint(dir / "ck", ck);
  const auto ck_back = ae::load_checkpoint(dir / "ck");
  if (!(ck_back.tensors == ck.tensors) || !(ck_back.architecture == ck.architecture) ||
      !(ck_back.history == ck.history))
    failures.push_back("checkpoint");

  // Journal: replaying every prefix of the log reproduces the state seen after that event.
  cluster::ClusterModel model;
  const int k = 12;
  model.centroids = Eigen::MatrixXd::Zero(k, 2);
  for (int c = 0; c < k; ++c) {
    model.centroids(c, 0) = std::cos(c * 0.5) * c;
    model.centroids(c, 1) = std::sin(c * 0.5) * c;
    model.tile_ids.push_back("s:" + std::to_string(c) + ":0");
    model.assignment.push_back(c);
    model.distance.push_back(0);
    model.normalized.push_back(0);
    model.bin.push_back(0);
  }
  for (int c = 0; c < k; ++c) model.neighbors.push_back(cluster::neighbor_clusters(model.centroids, c, 3));
  const auto ctx = service::make_context(model, {});
  std::vector<curation::CurationState> after;
  {
    int tick = 0;
    curation::Curator curator(ctx, dir / "events.ndjson", [&] { return "t" + std::to_string(tick++); });
    auto record = [&] { after.push_back(curator.snapshot()); };
    curator.label(0, "TUM", "a", false), record();
    curator.label(5, "LYM", "b", false), record();
    const auto before = curator.snapshot();
    for (const auto& [id, initial] : before.proposals()) {
      const auto now = curator.snapshot();
      if (now.proposal(id).status != curation::ProposalStatus::Pending || now.active_label(initial.target)) continue;
      curator.resolve(id, id % 2 ? curation::Decision::Accept : curation::Decision::Reject, "c");
      record();
    }
    curator.label(0, "ADI", "a", true), record();
    curator.label(9, "MUS", "d", false), record();
  }
  const curation::Journal journal(dir / "events.ndjson");
  const auto& events = journal.events();
  bool replay_ok = events.size() == after.size();
  for (std::size_t n = 1; replay_ok && n <= events.size(); ++n)
    replay_ok = curation::replay(ctx, {events.begin(), events.begin() + static_cast<long>(n)}) == after[n - 1];
  if (!replay_ok) failures.push_back("journal replay");

  fs::remove_all(dir);
  std::string detail = failures.empty() ? "geojson, embedding store, checkpoint, journal replay (" +
                                              std::to_string(events.size()) + " prefixes)"
                                        : "failed:";
  for (const auto& f : failures) detail += " " + f;
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------------------

struct CliResult {
  int code = -1;
  std::string err, out;
};

CliResult cli(const fs::path& project, const std::string& args) {
  const fs::path err = project / "cli.err", out = project / "cli.out";
  const std::string cmd = std::string(TILECURATE_CLI) + " --project '" + project.string() + "' " + args + " >'" +
                          out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err), slurp(out)};
}

Outcome cli_contract() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path root = scratch_dir("cli");
  const auto slide = tt::make_synthetic_slide(512, 64, 3);
  write_png(root / "slide.png", slide.image);
  const std::string conf =
      "slide = slide.png\ntile_px = 64\nmask_downsample = 16\nae_channels = 4,4,4\nae_strides = 2,2,2\n"
      "epochs = 1\nbatch_size = 8\npca_dim = 4\nK = 2\n";
  std::ofstream(root / "tilecurate.conf") << conf;
  std::vector<std::string> failures;

  const auto first = cli(root, "extract");
  const std::string manifest = slurp(root / "tiles" / "manifest.tsv");
  const auto stamp = fs::last_write_time(root / "tiles" / "manifest.tsv");
  const auto second = cli(root, "extract");
  if (first.code != 0 || second.code != 0 || second.out.find("up to date") == std::string::npos ||
      slurp(root / "tiles" / "manifest.tsv") != manifest || fs::last_write_time(root / "tiles" / "manifest.tsv") != stamp)
    failures.push_back("extract idempotency");
  if (first.err.find("stage=extract done=") == std::string::npos) failures.push_back("progress lines");

  if (cli(root, "train-ae").code != 0) failures.push_back("train-ae");
  const auto early = cli(root, "cluster");
  if (early.code != 3 || early.err.find("embed") == std::string::npos) failures.push_back("cluster before embed");

  std::ofstream(root / "bad.conf") << conf << "g = 0\n";
  const auto bad = cli(root, "--config '" + (root / "bad.conf").string() + "' sample");
  if (bad.code != 2 || bad.err.find("'g'") == std::string::npos) failures.push_back("g = 0");

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > 10) failures.push_back("took " + fmt("%.1f", secs) + " s");
  fs::remove_all(root);
  std::string detail = failures.empty() ? "exit 3 naming embed, idempotent extract, exit 2 naming g (" +
                                              fmt("%.1f", secs) + " s)"
                                        : "failed:";
  for (const auto& f : failures) detail += " " + f;
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"binning-partition", binning},
      {"kmeans-oracle", kmeans_oracle},
      {"pca-oracle", pca_oracle},
      {"ssim-contract", ssim_contract},
      {"autoencoder-desk-scale", autoencoder},
      {"end-to-end-synthetic", end_to_end},
      {"segmentation-evaluator", segmentation},
      {"format-round-trips", round_trips},
      {"cli-contract", cli_contract},
  };
  const std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  if (!std::getenv("TC_KEEP")) fs::remove_all(fs::temp_directory_path() / ("tc_acceptance_" + std::to_string(::getpid())));
  return failed ? 1 : 0;
}
