#include "ae/train.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "ae/optimizer.hpp"
#include "common/error.hpp"
#include "common/parallel.hpp"
#include "common/rng.hpp"
#include "quality/metrics.hpp"
#include "quality/ssim.hpp"

namespace tilecurate::ae {

TileSource TileSource::from_images(std::vector<Image> images) {
  auto shared = std::make_shared<const std::vector<Image>>(std::move(images));
  return {shared->size(), [shared](std::size_t i) { return (*shared)[i]; }};
}

template <class T>
Tensor<T> to_tensor(const std::vector<Image>& images, const AeArchitecture& arch) {
  Tensor<T> x(static_cast<int>(images.size()), arch.in_channels, arch.tile_px, arch.tile_px);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& im = images[i];
    require(im.channels == arch.in_channels && im.height == arch.tile_px && im.width == arch.tile_px,
            ErrorKind::Config,
            "tile is " + std::to_string(im.channels) + "x" + std::to_string(im.height) + "x" +
                std::to_string(im.width) + " but the model expects " + std::to_string(arch.in_channels) + "x" +
                std::to_string(arch.tile_px) + "x" + std::to_string(arch.tile_px));
    std::copy(im.data.begin(), im.data.end(), x.sample(static_cast<int>(i)));
  }
  return x;
}

template Tensor<float> to_tensor<float>(const std::vector<Image>&, const AeArchitecture&);
template Tensor<double> to_tensor<double>(const std::vector<Image>&, const AeArchitecture&);

Checkpoint train_autoencoder(const AeArchitecture& arch, const TileSource& tiles, const TrainConfig& config,
                             const EpochCallback& on_epoch) {
  config.validate();
  require(tiles.count > 0, ErrorKind::Contract, "train_autoencoder: no tiles");
  auto model = Autoencoder<float>::build(arch, config.seed);
  Adam<float> adam(config.learning_rate, config.weight_decay);
  const auto params = model.parameters();

  Checkpoint ck;
  ck.architecture = arch;
  ck.config = config;

  std::vector<std::size_t> order(tiles.count);
  long steps = 0;
  long batch_index = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (config.shuffle) {
      Rng rng(mix_seed(config.seed, 2 * static_cast<std::uint64_t>(epoch)));
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }
    quality::AugmentationPolicy policy = config.augmentation;
    policy.seed = mix_seed(config.seed, 2 * static_cast<std::uint64_t>(epoch) + 1);

    double loss_sum = 0.0, ssim_sum = 0.0, mse_sum = 0.0;
    std::size_t seen = 0;
    bool stopped = false;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<Image> batch;
      batch.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        Image im = tiles.load(order[k]);
        if (config.augment) im = quality::apply_augmentation(im, policy, order[k]);
        batch.push_back(std::move(im));
      }
      const Tensor<float> x = to_tensor<float>(batch, arch);
      model.zero_grad();
      const Tensor<float> y = model.forward_train(x);
      Tensor<float> grad;
      const double loss = reconstruction_loss(x, y, config.loss, &grad);
      if (!std::isfinite(loss))
        throw Error(ErrorKind::NonFinite, "non-finite training loss at batch " + std::to_string(batch_index) +
                                              " (epoch " + std::to_string(epoch) + ")");
      model.backward(grad);
      adam.step(params);
      ++steps;
      ++batch_index;

      const std::size_t n = end - start;
      loss_sum += loss * static_cast<double>(n);
      for (const auto& q : sample_quality(x, y)) {
        ssim_sum += q.ssim;
        mse_sum += q.mse;
      }
      seen += n;
      if (config.max_steps > 0 && steps >= config.max_steps) {
        stopped = true;
        break;
      }
    }
    const double count = static_cast<double>(seen);
    EpochMetrics m{epoch, loss_sum / count, ssim_sum / count, 0.0, mse_sum / count};
    m.psnr = quality::psnr_from_mse(m.mse);
    ck.history.push_back(m);
    ck.epoch = epoch;
    if (on_epoch) on_epoch(m);
    if (stopped) break;
  }
  ck.tensors = model.export_tensors();
  return ck;
}

features::EmbeddingMatrix encode_tiles(const Checkpoint& checkpoint, const TileSource& tiles,
                                       const std::vector<std::string>& tile_ids, int batch_size, int workers) {
  require(batch_size > 0, ErrorKind::Config, "encode: batch size must be positive");
  require(tile_ids.empty() || tile_ids.size() == tiles.count, ErrorKind::Contract,
          "encode: tile id count does not match tile count");
  const auto model = model_from_checkpoint<float>(checkpoint);
  const AeArchitecture& arch = checkpoint.architecture;
  features::EmbeddingMatrix out(features::Stage::Latent, tiles.count, arch.latent_size());
  if (!tile_ids.empty()) out.tile_ids = tile_ids;
  const std::size_t bs = static_cast<std::size_t>(batch_size);
  const std::size_t batches = (tiles.count + bs - 1) / bs;
  parallel_for(batches, workers, [&](std::size_t b) {
    const std::size_t start = b * bs;
    const std::size_t end = std::min(tiles.count, start + bs);
    std::vector<Image> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(tiles.load(i));
    const Tensor<float> z = model.encode(to_tensor<float>(batch, arch));
    std::copy(z.data.begin(), z.data.end(), out.row(start).data());
  });
  return out;
}

Reconstruction reconstruct(const Checkpoint& checkpoint, const Image& tile) {
  const auto model = model_from_checkpoint<float>(checkpoint);
  const Tensor<float> y = model.reconstruct(to_tensor<float>({tile}, checkpoint.architecture));
  Reconstruction r;
  r.image = Image(tile.channels, tile.height, tile.width);
  std::copy(y.data.begin(), y.data.end(), r.image.data.begin());
  r.ssim = quality::ssim(tile, r.image);
  const auto pm = quality::pixel_metrics(tile, r.image);
  r.mse = pm.mse;
  r.psnr = pm.psnr;
  return r;
}

}  // namespace tilecurate::ae
