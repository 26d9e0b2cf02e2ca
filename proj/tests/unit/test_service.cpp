#include <doctest.h>

#include <atomic>
#include <thread>

#include "cluster/sampler.hpp"
#include "common/rng.hpp"
#include "service/review.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

// After Eigen: resolv.h defines a _res macro that clashes with Eigen parameter names.
#include <httplib.h>

using namespace tilecurate;
using nlohmann::json;

namespace {

struct Fixture {
  testing::TempDir dir{"svc"};
  std::unique_ptr<service::ReviewService> svc;
  std::unique_ptr<service::ReviewServer> server;
  std::thread thread;
  int port = 0;

  Fixture() {
    service::ReviewData data;
    data.root = dir.path();
    data.cap = 10;
    std::filesystem::create_directories(dir / "tiles");
    Rng rng(5);
    features::EmbeddingMatrix reduced(features::Stage::Reduced, 30, 3);
    data.projected = features::EmbeddingMatrix(features::Stage::Projected, 30, 2);
    for (std::size_t i = 0; i < 30; ++i) {
      tiles::TileRecord r;
      r.slide_id = "s";
      r.x = static_cast<int>(i % 6) * 32;
      r.y = static_cast<int>(i / 6) * 32;
      r.width = r.height = 32;
      r.tile_id = tiles::make_tile_id("s", r.x, r.y);
      r.path = "tiles/" + tiles::tile_file_name("s", r.x, r.y);
      r.tissue_fraction = 1.0;
      write_png(dir / r.path, testing::make_texture(static_cast<int>(i % 3), 32, i));
      data.tiles.push_back(r);
      reduced.tile_ids[i] = data.projected.tile_ids[i] = r.tile_id;
      for (std::size_t j = 0; j < 3; ++j) reduced.row(i)[j] = static_cast<float>(20.0 * (i % 3) * (j == 0) + rng.normal());
      data.projected.row(i)[0] = reduced.row(i)[0];
      data.projected.row(i)[1] = reduced.row(i)[1];
    }
    cluster::ClusterConfig cfg;
    cfg.k = 3;
    cfg.g = 2;
    cfg.k_nn = 2;
    data.model = cluster::build_cluster_model(reduced, cfg);
    data.samples = cluster::sample_clusters(data.model, cfg);
    data.context = service::make_context(data.model, data.samples);
    svc = std::make_unique<service::ReviewService>(std::move(data), dir / "journal.ndjson");
    server = std::make_unique<service::ReviewServer>(*svc);
    port = server->bind("127.0.0.1", 0);
    thread = std::thread([this] { server->listen(); });
  }
  ~Fixture() {
    server->stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(10, 0);
    return c;
  }
};

}  // namespace

TEST_CASE("service: cluster listing, pages and tile images") {
  Fixture f;
  auto c = f.client();
  auto res = c.Get("/clusters");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto clusters = json::parse(res->body)["clusters"];
  REQUIRE(clusters.size() == 3);
  CHECK(clusters[0]["size"] == 10);
  CHECK(clusters[0]["bins"] == json::array({5, 5}));
  CHECK(clusters[0]["label"].is_null());
  CHECK(clusters[0]["representatives"].size() == 2);

  res = c.Get("/clusters/1/tiles?page=0&bin=1");
  REQUIRE(res);
  const auto page = json::parse(res->body);
  CHECK(page["total"] == 5);
  CHECK(page["tiles"].size() == 5);
  for (const auto& t : page["tiles"]) CHECK(t["bin"] == 1);
  CHECK(json::parse(c.Get("/clusters/1/tiles?page=1")->body)["tiles"].empty());
  CHECK(c.Get("/clusters/7/tiles")->status == 404);
  CHECK(c.Get("/clusters/x/tiles")->status == 400);

  const std::string id = page["tiles"][0]["id"];
  res = c.Get(("/tiles/" + id + "/image").c_str());
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type") == "image/png");
  bool matched = false;
  for (const auto& entry : std::filesystem::directory_iterator(f.dir / "tiles"))
    if (testing::read_file(entry.path()) == res->body) matched = true;
  CHECK(matched);
  CHECK(c.Get("/tiles/nope/image")->status == 404);

  res = c.Get("/scatter");
  CHECK(json::parse(res->body)["points"].size() == 30);
}

TEST_CASE("service: labeling, proposals and progress") {
  Fixture f;
  auto c = f.client();
  auto res = c.Post("/clusters/0/label", R"({"class":"TUM","reviewer":"ann"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  auto body = json::parse(res->body);
  CHECK(body["cluster"]["label"]["class"] == "TUM");
  CHECK(body["proposals"].size() == 2);

  res = c.Post("/clusters/0/label", R"({"class":"NOR"})", "application/json");
  CHECK(res->status == 409);
  body = json::parse(res->body);
  CHECK(body["existing"]["class"] == "TUM");
  CHECK(c.Post("/clusters/0/label", R"({"class":"XYZ","override":true})", "application/json")->status == 400);
  CHECK(c.Post("/clusters/0/label", "not json", "application/json")->status == 400);

  res = c.Get("/proposals?status=pending");
  const auto pending = json::parse(res->body)["proposals"];
  REQUIRE(pending.size() == 2);
  const std::string pid = std::to_string(pending[0]["id"].get<long>());
  res = c.Post(("/proposals/" + pid + "/resolve").c_str(), R"({"decision":"accept","reviewer":"bo"})", "application/json");
  CHECK(res->status == 200);
  res = c.Post(("/proposals/" + pid + "/resolve").c_str(), R"({"decision":"reject"})", "application/json");
  CHECK(res->status == 409);
  CHECK(json::parse(res->body)["proposal"]["status"] == "accepted");
  CHECK(c.Post("/proposals/99/resolve", R"({"decision":"accept"})", "application/json")->status == 404);
  CHECK(c.Get("/proposals?status=bogus")->status == 400);

  res = c.Get("/clusters?filter=labeled");
  CHECK(json::parse(res->body)["clusters"].size() == 2);
  res = c.Get("/clusters?filter=unlabeled");
  CHECK(json::parse(res->body)["clusters"].size() == 1);
  res = c.Get("/clusters?class=TUM");
  CHECK(json::parse(res->body)["clusters"].size() == 2);
  CHECK(c.Get("/clusters?filter=some")->status == 400);

  res = c.Get("/progress");
  body = json::parse(res->body);
  CHECK(body["cap"] == 10);
  std::size_t tum = 0;
  for (const auto& cls : body["classes"])
    if (cls["class"] == "TUM") tum = cls["tally"];
  CHECK(tum == f.svc->snapshot().tallies().at("TUM"));
  CHECK(tum > 0);
}

TEST_CASE("service: concurrent duplicate labels yield exactly one conflict") {
  Fixture f;
  std::atomic<int> ok{0}, conflict{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 2; ++i)
    threads.emplace_back([&, i] {
      auto c = f.client();
      const auto res = c.Post("/clusters/2/label", json{{"class", i ? "ADI" : "LYM"}}.dump(), "application/json");
      if (res && res->status == 200) ++ok;
      if (res && res->status == 409) ++conflict;
    });
  for (auto& t : threads) t.join();
  CHECK(ok == 1);
  CHECK(conflict == 1);
  CHECK(curation::Journal(f.dir / "journal.ndjson").events().size() == 1);
}
