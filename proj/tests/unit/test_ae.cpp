#include <doctest.h>

#include <cmath>
#include <limits>

#include "ae/autoencoder.hpp"
#include "ae/checkpoint.hpp"
#include "ae/loss.hpp"
#include "ae/train.hpp"
#include "common/error.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace tilecurate;
using namespace tilecurate::ae;

namespace {

AeArchitecture tiny(int tile = 32) {
  AeArchitecture a;
  a.tile_px = tile;
  a.channels = {4, 8, 8};
  a.strides = tile == 32 ? std::vector<int>{2, 2, 1} : std::vector<int>{2, 1, 1};
  a.latent_side = 8;
  return a;
}

TrainConfig quick() {
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.batch_size = 4;
  c.epochs = 2;
  c.augment = false;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("architecture validation") {
  CHECK_NOTHROW(tiny().validate());
  AeArchitecture a = tiny();
  a.strides = {2, 2, 2};
  CHECK_THROWS_AS(a.validate(), Error);
  a = tiny();
  a.strides = {3, 1, 1};
  CHECK_THROWS_AS(a.validate(), Error);
  a = tiny();
  a.strides.pop_back();
  CHECK_THROWS_AS(a.validate(), Error);
  AeArchitecture full;
  CHECK_NOTHROW(full.validate());
  CHECK(full.latent_size() == 512u * 64u);
}

TEST_CASE("shape probes through encoder and decoder") {
  const auto arch = tiny();
  auto model = Autoencoder<float>::build(arch, 1);
  const auto x = to_tensor<float>(testing::texture_tiles(3, 32, 2), arch);
  CHECK(x.n == 3);
  const auto z = model.encode(x);
  CHECK(z.c == 8);
  CHECK(z.h == 8);
  CHECK(z.w == 8);
  const auto y = model.decode(z);
  CHECK(y.same_shape(x));
  for (float v : y.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  const auto t = model.forward_train(x);
  CHECK(t.same_shape(x));
}

TEST_CASE("mse loss gradient matches central differences") {
  AeArchitecture arch;
  arch.tile_px = 16;
  arch.channels = {3, 4};
  arch.strides = {2, 1};
  auto model = Autoencoder<double>::build(arch, 9);
  const auto x = to_tensor<double>(testing::texture_tiles(2, 16, 4), arch);
  model.zero_grad();
  Tensor<double> grad;
  reconstruction_loss<double>(x, model.forward_train(x), LossKind::Mse, &grad);
  model.backward(grad);
  const double h = 1e-5;
  double worst = 0;
  for (auto* p : model.parameters()) {
    if (!p->trainable) continue;
    for (std::size_t i = 0; i < p->numel(); i += 5) {
      const double keep = p->value[i];
      p->value[i] = keep + h;
      const double up = reconstruction_loss<double>(x, model.forward_train(x), LossKind::Mse, nullptr);
      p->value[i] = keep - h;
      const double down = reconstruction_loss<double>(x, model.forward_train(x), LossKind::Mse, nullptr);
      p->value[i] = keep;
      const double num = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(num - p->grad[i]) / std::max(std::abs(num) + std::abs(p->grad[i]), 1e-7));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("loss values at identity") {
  const auto arch = tiny();
  const auto x = to_tensor<double>(testing::texture_tiles(2, 32, 3), arch);
  CHECK(reconstruction_loss<double>(x, x, LossKind::Ssim, nullptr) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(reconstruction_loss<double>(x, x, LossKind::Mse, nullptr) == 0.0);
  CHECK(parse_loss_kind("mse") == LossKind::Mse);
  CHECK(to_string(LossKind::Ssim) == "ssim");
  CHECK_THROWS_AS(parse_loss_kind("l1"), Error);
}

TEST_CASE("training is reproducible and the loss falls") {
  const auto arch = tiny();
  const auto tiles = TileSource::from_images(testing::texture_tiles(12, 32, 6));
  auto cfg = quick();
  cfg.epochs = 4;
  const auto a = train_autoencoder(arch, tiles, cfg);
  const auto b = train_autoencoder(arch, tiles, cfg);
  CHECK(a.tensors == b.tensors);
  CHECK(a.history == b.history);
  REQUIRE(a.history.size() == 4);
  CHECK(a.history.back().loss < a.history.front().loss);

  cfg.max_steps = 3;
  int epochs_seen = 0;
  const auto c = train_autoencoder(arch, tiles, cfg, [&](const EpochMetrics&) { ++epochs_seen; });
  CHECK(c.epoch == 1);
  CHECK(epochs_seen == 1);
}

TEST_CASE("non-finite input stops training with a typed error") {
  const auto arch = tiny();
  TileSource bad{4, [](std::size_t) { return Image(3, 32, 32, std::numeric_limits<float>::quiet_NaN()); }};
  try {
    train_autoencoder(arch, bad, quick());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFinite);
  }
}

TEST_CASE("encode_tiles is independent of batch size and worker count") {
  const auto arch = tiny();
  const auto imgs = testing::texture_tiles(9, 32, 8);
  const auto ck = train_autoencoder(arch, TileSource::from_images(imgs), quick());
  const auto tiles = TileSource::from_images(imgs);
  std::vector<std::string> ids;
  for (int i = 0; i < 9; ++i) ids.push_back("t" + std::to_string(i));
  const auto a = encode_tiles(ck, tiles, ids, 1, 1);
  const auto b = encode_tiles(ck, tiles, ids, 4, 3);
  const auto c = encode_tiles(ck, tiles, ids, 16, 2);
  CHECK(a.values == b.values);
  CHECK(a.values == c.values);
  CHECK(a.dim == arch.latent_size());
  CHECK(a.tile_ids == ids);
  CHECK(a.stage == features::Stage::Latent);
}

TEST_CASE("checkpoint round trip preserves encodings") {
  testing::TempDir dir;
  const auto arch = tiny();
  const auto imgs = testing::texture_tiles(6, 32, 12);
  const auto ck = train_autoencoder(arch, TileSource::from_images(imgs), quick());
  save_checkpoint(dir / "ck", ck);
  const auto back = load_checkpoint(dir / "ck");
  CHECK(back.architecture == ck.architecture);
  CHECK(back.tensors == ck.tensors);
  CHECK(back.epoch == ck.epoch);
  CHECK(back.history == ck.history);
  CHECK(back.config.learning_rate == ck.config.learning_rate);
  const auto tiles = TileSource::from_images(imgs);
  CHECK(encode_tiles(ck, tiles, {}).values == encode_tiles(back, tiles, {}).values);
  const auto r = reconstruct(back, imgs[0]);
  CHECK(r.image.same_shape(imgs[0]));
  CHECK(r.ssim <= 1.0);

  write_metrics_csv(dir / "m.csv", ck.history);
  CHECK(testing::read_file(dir / "m.csv").rfind("epoch,loss,ssim,psnr,mse\n", 0) == 0);

  auto model = Autoencoder<float>::build(arch, 0);
  auto tensors = ck.tensors;
  tensors.pop_back();
  CHECK_THROWS_AS(model.import_tensors(tensors), Error);
}

TEST_CASE("training config validation") {
  auto c = quick();
  c.learning_rate = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = quick();
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK_THROWS_AS(to_tensor<float>({Image(3, 16, 16)}, tiny()), Error);
}
