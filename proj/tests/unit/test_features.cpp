#include <doctest.h>

#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "features/embedding.hpp"
#include "features/pca.hpp"
#include "features/pooling.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace tilecurate;
using namespace tilecurate::features;

namespace {

EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed, Stage stage = Stage::Pooled) {
  Rng rng(seed);
  EmbeddingMatrix m(stage, rows, dim);
  for (std::size_t i = 0; i < rows; ++i) {
    m.tile_ids[i] = "t" + std::to_string(i);
    for (std::size_t j = 0; j < dim; ++j) m.row(i)[j] = static_cast<float>(rng.normal() * (1.0 + j));
  }
  return m;
}

}  // namespace

TEST_CASE("global average pooling") {
  EmbeddingMatrix z(Stage::Latent, 2, 128);
  z.tile_ids = {"a", "b"};
  for (std::size_t p = 0; p < 64; ++p) {
    z.row(0)[p] = 1.0f;
    z.row(0)[64 + p] = static_cast<float>(p);
    z.row(1)[p] = -2.0f;
    z.row(1)[64 + p] = p < 32 ? 1.0f : 0.0f;
  }
  const auto pooled = global_average_pool(z);
  CHECK(pooled.stage == Stage::Pooled);
  CHECK(pooled.dim == 2);
  CHECK(pooled.tile_ids == z.tile_ids);
  CHECK(pooled.row(0)[0] == 1.0f);
  CHECK(pooled.row(0)[1] == doctest::Approx(31.5));
  CHECK(pooled.row(1)[0] == -2.0f);
  CHECK(pooled.row(1)[1] == doctest::Approx(0.5));

  EmbeddingMatrix bad(Stage::Latent, 1, 100);
  CHECK_THROWS_AS(global_average_pool(bad), Error);
}

TEST_CASE("pca on collinear points") {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 1, 1, 2, 2, 3, 3;
  const auto m = pca_fit(x, 1);
  CHECK(m.components(0, 0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(m.components(0, 1) == doctest::Approx(std::sqrt(0.5)));
  CHECK(m.variances[0] == doctest::Approx(10.0 / 3.0));
  CHECK(m.explained_ratio(0) == doctest::Approx(1.0));
  CHECK(m.mean[0] == doctest::Approx(1.5));
}

TEST_CASE("pca agrees with the Jacobi oracle") {
  const auto data = random_matrix(40, 7, 3);
  const auto model = pca_fit(data, 4);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < data.rows; ++i) rows.emplace_back(data.row(i).begin(), data.row(i).end());
  const auto oracle = testing::pca_oracle(rows, 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(model.variances[k] == doctest::Approx(oracle.variances[static_cast<std::size_t>(k)]).epsilon(1e-9));
    for (int j = 0; j < 7; ++j)
      CHECK(std::abs(model.components(k, j) - oracle.components[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]) < 1e-8);
  }
  const auto reduced = pca_transform(model, data);
  CHECK(reduced.stage == Stage::Reduced);
  CHECK(reduced.dim == 4);
  // Reduced coordinates are centred with the component variances.
  for (std::size_t k = 0; k < 4; ++k) {
    double s = 0, ss = 0;
    for (std::size_t i = 0; i < reduced.rows; ++i) s += reduced.row(i)[k];
    const double mean = s / static_cast<double>(reduced.rows);
    for (std::size_t i = 0; i < reduced.rows; ++i) ss += std::pow(reduced.row(i)[k] - mean, 2);
    CHECK(std::abs(mean) < 1e-4);
    CHECK(ss / 39.0 == doctest::Approx(model.variances[static_cast<Eigen::Index>(k)]).epsilon(1e-4));
  }
}

TEST_CASE("project_2d matches an oracle fit on the reduced matrix") {
  const auto reduced = pca_transform(pca_fit(random_matrix(30, 6, 8), 5), random_matrix(30, 6, 8));
  const auto p = project_2d(reduced);
  CHECK(p.stage == Stage::Projected);
  CHECK(p.dim == 2);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < reduced.rows; ++i) rows.emplace_back(reduced.row(i).begin(), reduced.row(i).end());
  const auto oracle = testing::pca_oracle(rows, 2);
  for (std::size_t i = 0; i < reduced.rows; ++i)
    for (std::size_t k = 0; k < 2; ++k) {
      double v = 0;
      for (std::size_t j = 0; j < 5; ++j) v += (rows[i][j] - oracle.mean[j]) * oracle.components[k][j];
      CHECK(p.row(i)[k] == doctest::Approx(v).epsilon(1e-4));
    }
}

TEST_CASE("pca dimension errors") {
  const auto small = random_matrix(3, 6, 1);
  try {
    pca_fit(small, 5);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("choose a smaller pca_dim") != std::string::npos);
  }
  CHECK_THROWS_AS(pca_fit(small, 7), Error);
  CHECK_THROWS_AS(pca_fit(small, 0), Error);
  const auto model = pca_fit(random_matrix(10, 6, 2), 2);
  CHECK_THROWS_AS(pca_transform(model, random_matrix(10, 5, 2)), Error);
}

TEST_CASE("embedding store and pca model round trips") {
  testing::TempDir dir;
  const auto m = random_matrix(11, 5, 4, Stage::Reduced);
  save_embeddings(dir / "r.bin", m);
  CHECK(load_embeddings(dir / "r.bin") == m);
  CHECK(std::filesystem::exists(ids_path(dir / "r.bin")));
  const std::string raw = testing::read_file(dir / "r.bin");
  CHECK(raw.substr(0, 4) == "DCPP");
  testing::write_file(dir / "bad.bin", "XXXX" + raw.substr(4));
  testing::write_file(ids_path(dir / "bad.bin"), testing::read_file(ids_path(dir / "r.bin")));
  CHECK_THROWS_AS(load_embeddings(dir / "bad.bin"), Error);
  std::filesystem::remove(ids_path(dir / "r.bin"));
  CHECK_THROWS_AS(load_embeddings(dir / "r.bin"), Error);

  const auto model = pca_fit(random_matrix(20, 6, 5), 3);
  save_pca(dir / "pca.bin", model);
  CHECK(load_pca(dir / "pca.bin") == model);
  CHECK_THROWS_AS(load_pca(dir / "r.bin"), Error);
}

TEST_CASE("embedding validation") {
  EmbeddingMatrix m(Stage::Projected, 2, 3);
  CHECK_THROWS_AS(m.validate(), Error);
  EmbeddingMatrix n(Stage::Pooled, 2, 3);
  n.values[1] = std::nanf("");
  CHECK_THROWS_AS(n.validate(), Error);
}
