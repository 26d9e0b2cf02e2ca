#pragma once

#include "features/embedding.hpp"

namespace tilecurate::features {

inline constexpr std::size_t kLatentPositions = 64;  // 8x8 spatial grid

/// Channel-wise mean over the 64 spatial positions of a channel-major latent.
EmbeddingMatrix global_average_pool(const EmbeddingMatrix& latent);

}  // namespace tilecurate::features
