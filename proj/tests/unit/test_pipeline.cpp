#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "common/error.hpp"
#include "pipeline/config.hpp"
#include "pipeline/project.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"
#include "tilecurate/tilecurate.h"
#include "tiles/extract.hpp"

#include <httplib.h>

#include <thread>

using namespace tilecurate;
using namespace tilecurate::pipeline;
namespace fs = std::filesystem;

namespace {

const char* const kSmallConfig =
    "slide = slide.png\ntile_px = 64\nmask_downsample = 16\nae_channels = 4,4,4\nae_strides = 2,2,2\n"
    "epochs = 1\nbatch_size = 8\npca_dim = 4\nK = 3\ng = 2\n";

void seed_project(const fs::path& root, const std::string& extra = "") {
  write_png(root / "slide.png", testing::make_synthetic_slide(512, 64, 3).image);
  testing::write_file(root / "tilecurate.conf", kSmallConfig + extra);
}

struct Cli {
  int code = -1;
  std::string out, err;
};

Cli cli(const fs::path& root, const std::string& args) {
  const std::string cmd = std::string(TILECURATE_CLI) + " --project '" + root.string() + "' " + args + " >'" +
                          (root / "cli.out").string() + "' 2>'" + (root / "cli.err").string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testing::read_file(root / "cli.out"),
          testing::read_file(root / "cli.err")};
}

}  // namespace

TEST_CASE("config parsing") {
  const auto kv = parse_key_values("# c\n\na = 1\nslide = \"x y.png\"\n");
  CHECK(kv.at("a") == "1");
  CHECK(kv.at("slide") == "x y.png");
  CHECK_THROWS_AS(parse_key_values("novalue\n"), Error);

  const auto cfg = config_from_text("slide = s.png\ntile_px = 128\nae_strides = 2,2,2,2,1,1\nseed = 9\nK = 4\n", "/base");
  CHECK(cfg.slide == fs::path("/base/s.png"));
  CHECK(cfg.slide_id == "s");
  CHECK(cfg.extraction.tile_px == 128);
  CHECK(cfg.seed == 9);
  CHECK(cfg.clustering.k == 4);
  CHECK(cfg.canonical.at("tile_px") == "128");

  for (const char* bad : {"colour = red\n", "g = 0\n", "tile_px = abc\n", "sample_fraction = 1.5\n", "pca_dim = -1\n"}) {
    try {
      config_from_text(std::string("slide = s.png\n") + bad, "/base");
      FAIL("expected config error for " << bad);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
    }
  }
  CHECK_NOTHROW(config_from_text(default_config_text(), "/base"));
}

TEST_CASE("stage graph") {
  CHECK(ancestors(Stage::Extract).empty());
  CHECK(ancestors(Stage::Cluster) ==
        std::vector<Stage>{Stage::Extract, Stage::TrainAe, Stage::Embed, Stage::Reduce});
  CHECK(ancestors(Stage::EvalSeg).back() == Stage::Sample);
  for (auto s : all_stages()) CHECK(parse_stage(stage_name(s)) == s);
  CHECK(!parse_stage("nope").has_value());
}

TEST_CASE("project stages: order, staleness and tamper detection") {
  testing::TempDir dir("proj");
  seed_project(dir.path());
  auto p = Project::open(dir.path());
  CHECK_THROWS_AS(p.run(Stage::Embed), Error);
  CHECK(p.run(Stage::Extract) == RunResult::Ran);
  CHECK(p.run(Stage::Extract) == RunResult::UpToDate);
  for (auto s : {Stage::TrainAe, Stage::Embed, Stage::Reduce, Stage::Cluster, Stage::Sample})
    CHECK(p.run(s) == RunResult::Ran);
  CHECK(p.is_current(Stage::Sample));

  // A changed clustering key invalidates cluster and below, not the earlier stages.
  testing::write_file(dir / "tilecurate.conf", std::string(kSmallConfig).replace(std::string(kSmallConfig).find("g = 2"), 5, "g = 3"));
  auto q = Project::open(dir.path());
  CHECK(q.is_current(Stage::Reduce));
  CHECK(!q.is_current(Stage::Cluster));
  try {
    q.run(Stage::Sample);
    FAIL("expected missing stage");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingStage);
    CHECK(std::string(e.what()).find("cluster") != std::string::npos);
  }
  CHECK(q.run(Stage::Cluster) == RunResult::Ran);
  CHECK(q.run(Stage::Sample) == RunResult::Ran);

  // Editing an output makes its stage stale.
  testing::write_file(q.layout().samples(), "tampered\n");
  CHECK(q.run(Stage::Sample) == RunResult::Ran);

  CHECK_THROWS_AS(q.run(Stage::Assemble), Error);  // nothing labeled yet
  CHECK_THROWS_AS(q.run(Stage::EvalSeg), Error);   // no mask configured
}

TEST_CASE("c api: status codes and curation round trip") {
  testing::TempDir dir("capi");
  seed_project(dir.path());
  tc_project* p = nullptr;
  CHECK(tc_project_open(nullptr, nullptr, &p) == TC_ERR_INVALID_ARGUMENT);
  CHECK(tc_project_open((dir / "missing").c_str(), (dir / "missing.conf").c_str(), &p) != TC_OK);
  CHECK(std::string(tc_last_error()).size() > 0);
  REQUIRE(tc_project_open(dir.path().c_str(), nullptr, &p) == TC_OK);
  int ran = -1;
  CHECK(tc_run_stage(p, "bogus", nullptr, nullptr, &ran) == TC_ERR_INVALID_ARGUMENT);
  CHECK(tc_run_stage(p, "sample", nullptr, nullptr, &ran) == TC_ERR_MISSING_STAGE);
  std::size_t calls = 0;
  auto progress = [](const char*, size_t, size_t, void* user) { ++*static_cast<std::size_t*>(user); };
  for (const char* s : {"extract", "train-ae", "embed", "reduce", "cluster", "sample"}) {
    REQUIRE(tc_run_stage(p, s, progress, &calls, &ran) == TC_OK);
    CHECK(ran == 1);
  }
  CHECK(calls > 0);
  CHECK(tc_run_stage(p, "sample", nullptr, nullptr, &ran) == TC_OK);
  CHECK(ran == 0);

  char* out = nullptr;
  REQUIRE(tc_label(p, 0, "TUM", "ann", 0, &out) == TC_OK);
  const auto labeled = nlohmann::json::parse(out);
  tc_string_free(out);
  CHECK(labeled["cluster"]["label"]["class"] == "TUM");
  CHECK(tc_label(p, 0, "NOR", "ann", 0, &out) == TC_ERR_CONFLICT);
  CHECK(tc_label(p, 0, "XYZ", "ann", 1, &out) == TC_ERR_INVALID_ARGUMENT);
  CHECK(tc_label(p, 99, "TUM", "ann", 0, &out) == TC_ERR_NOT_FOUND);
  CHECK(tc_resolve(p, 999, "accept", "ann", &out) == TC_ERR_NOT_FOUND);
  if (!labeled["proposals"].empty()) {
    const auto id = labeled["proposals"][0]["id"].get<long long>();
    CHECK(tc_resolve(p, id, "reject", "bo", &out) == TC_OK);
    tc_string_free(out);
    CHECK(tc_resolve(p, id, "reject", "bo", &out) == TC_ERR_CONFLICT);
  }
  REQUIRE(tc_progress_json(p, &out) == TC_OK);
  CHECK(nlohmann::json::parse(out)["classes"].size() == 9);
  tc_string_free(out);

  for (const char* s : {"assemble", "export-qupath", "render-map"}) CHECK(tc_run_stage(p, s, nullptr, nullptr, &ran) == TC_OK);
  CHECK(fs::exists(dir / "exports" / "slide.geojson"));
  CHECK(fs::exists(dir / "exports" / "slide_map.png"));
  CHECK(fs::exists(dir / "dataset" / "manifest.tsv"));
  CHECK(!fs::is_empty(dir / "dataset" / "TUM"));
  // A new label changes the journal, so the export is stale again.
  CHECK(tc_stage_current(p, "export-qupath") == 1);
  REQUIRE(tc_label(p, 2, "ADI", "ann", 0, &out) == TC_OK);
  tc_string_free(out);
  CHECK(tc_stage_current(p, "export-qupath") == 0);
  tc_project_close(p);
  CHECK(std::string(tc_status_string(TC_ERR_LOCKED)).size() > 0);
  CHECK(std::string(tc_version()).size() > 0);
}

TEST_CASE("cli: exit codes and lock contention") {
  testing::TempDir dir("cli");
  seed_project(dir.path());
  CHECK(cli(dir.path(), "extract").code == 0);
  {
    ProjectLock held(dir.path());
    const auto busy = cli(dir.path(), "train-ae");
    CHECK(busy.code == 4);
    CHECK(busy.err.find("lock") != std::string::npos);
  }
  CHECK(cli(dir.path(), "nonsense").code != 0);
  const auto early = cli(dir.path(), "reduce");
  CHECK(early.code == 3);
  CHECK(early.err.find("train-ae") != std::string::npos);
  CHECK(cli(dir.path(), "--config '" + (dir / "nope.conf").string() + "' extract").code == 2);
  const auto prog = cli(dir.path(), "progress");
  CHECK(prog.code == 3);
}

TEST_CASE("eval-seg with a predictions file, and serving through the c api") {
  testing::TempDir dir("eval");
  seed_project(dir.path(), "eval_mask = mask.png\neval_predictions = pred.tsv\nport = 0\n");
  Rgb8Image mask(512, 512, 0);
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 512; ++x) mask.at(x, y)[1] = 255;
  write_png(dir / "mask.png", mask);
  tc_project* p = nullptr;
  REQUIRE(tc_project_open(dir.path().c_str(), nullptr, &p) == TC_OK);
  int ran = 0;
  for (const char* s : {"extract", "train-ae", "embed", "reduce", "cluster", "sample"})
    REQUIRE(tc_run_stage(p, s, nullptr, nullptr, &ran) == TC_OK);
  std::string pred;
  std::size_t top = 0;
  for (const auto& r : tiles::read_manifest(dir / "tiles" / "manifest.tsv"))
    if (r.y < 256) {
      pred += r.tile_id + "\tTUM\n";
      ++top;
    } else {
      pred += r.tile_id + "\tNOR\n";
    }
  testing::write_file(dir / "pred.tsv", pred);
  REQUIRE(tc_run_stage(p, "eval-seg", nullptr, nullptr, &ran) == TC_OK);
  const auto score = nlohmann::json::parse(testing::read_file(dir / "exports" / "eval_seg.json"));
  CHECK(score["tp"] == top);
  CHECK(score["fp"] == 0);
  CHECK(score["fn"] == 32 - top);
  CHECK(score["iou"].get<double>() == doctest::Approx(static_cast<double>(top) / 32));

  struct Ctx {
    tc_project* p;
    std::thread t;
    int status = 0;
  } ctx{p, {}, 0};
  auto ready = [](int port, void* user) {
    auto* c = static_cast<Ctx*>(user);
    c->t = std::thread([c, port] {
      httplib::Client client("127.0.0.1", port);
      const auto res = client.Get("/progress");
      c->status = res ? res->status : -1;
      tc_serve_stop(c->p);
    });
  };
  CHECK(tc_serve(p, "127.0.0.1", -1, ready, &ctx) == TC_OK);
  ctx.t.join();
  CHECK(ctx.status == 200);
  tc_project_close(p);
}
