#include "features/pooling.hpp"

#include "common/error.hpp"

namespace tilecurate::features {

EmbeddingMatrix global_average_pool(const EmbeddingMatrix& latent) {
  require(latent.stage == Stage::Latent, ErrorKind::Contract, "pooling expects a latent matrix");
  require(latent.dim > 0 && latent.dim % kLatentPositions == 0, ErrorKind::Contract,
          "latent dim " + std::to_string(latent.dim) + " is not channels x 64");
  const std::size_t channels = latent.dim / kLatentPositions;
  EmbeddingMatrix pooled(Stage::Pooled, latent.rows, channels);
  pooled.tile_ids = latent.tile_ids;
  for (std::size_t r = 0; r < latent.rows; ++r) {
    const auto in = latent.row(r);
    auto out = pooled.row(r);
    for (std::size_t c = 0; c < channels; ++c) {
      double sum = 0.0;
      for (std::size_t p = 0; p < kLatentPositions; ++p) sum += in[c * kLatentPositions + p];
      out[c] = static_cast<float>(sum / kLatentPositions);
    }
  }
  return pooled;
}

}  // namespace tilecurate::features
