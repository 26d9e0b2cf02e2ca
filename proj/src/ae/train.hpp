#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ae/checkpoint.hpp"
#include "common/image.hpp"
#include "features/embedding.hpp"

namespace tilecurate::ae {

/// Random-access tile provider; load(i) must return the same image for the same i.
struct TileSource {
  std::size_t count = 0;
  std::function<Image(std::size_t)> load;

  static TileSource from_images(std::vector<Image> images);
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Trains a float model from seeded initialization. Each epoch shuffles with
/// a generator seeded from (seed, epoch) and, with augmentation on, draws
/// per-tile transforms from (seed, epoch, index). Epoch metrics (loss, SSIM,
/// PSNR, MSE) are averaged over the training-mode reconstructions of that
/// epoch's batches. Stops early once max_steps optimizer steps have run.
Checkpoint train_autoencoder(const AeArchitecture& arch, const TileSource& tiles, const TrainConfig& config,
                             const EpochCallback& on_epoch = {});

/// Latent rows (channel-major) for every tile, using frozen batch-norm
/// statistics. Batches are encoded in parallel; rows do not depend on the
/// batch size or worker count.
features::EmbeddingMatrix encode_tiles(const Checkpoint& checkpoint, const TileSource& tiles,
                                       const std::vector<std::string>& tile_ids, int batch_size = 16,
                                       int workers = 1);

struct Reconstruction {
  Image image;
  double ssim = 0.0;
  double psnr = 0.0;
  double mse = 0.0;
};

Reconstruction reconstruct(const Checkpoint& checkpoint, const Image& tile);

/// Packs images into an NCHW tensor; all must match the architecture's tile shape.
template <class T>
Tensor<T> to_tensor(const std::vector<Image>& images, const AeArchitecture& arch);

}  // namespace tilecurate::ae
