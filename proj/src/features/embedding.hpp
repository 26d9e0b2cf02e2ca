#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tilecurate::features {

/// Pipeline stage an embedding matrix belongs to; stored as the container's tag byte.
enum class Stage : std::uint8_t { Latent = 0, Pooled = 1, Reduced = 2, Projected = 3 };

std::string_view to_string(Stage stage);

/// Row-major float matrix of per-tile feature vectors, rows aligned with tile_ids.
struct EmbeddingMatrix {
  Stage stage = Stage::Latent;
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> values;
  std::vector<std::string> tile_ids;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(Stage s, std::size_t r, std::size_t d)
      : stage(s), rows(r), dim(d), values(r * d, 0.0f), tile_ids(r) {}

  std::span<float> row(std::size_t i) { return {values.data() + i * dim, dim}; }
  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }

  /// Shape, finiteness and stage/dim consistency (latent: multiple of 64
  /// spatial positions per channel; projected: 2 columns).
  void validate() const;
  bool operator==(const EmbeddingMatrix&) const = default;
};

inline constexpr char kStoreMagic[4] = {'D', 'C', 'P', 'P'};
inline constexpr std::uint32_t kStoreVersion = 1;

/// Writes the binary store to `path` and the tile-id list to `path` + ".ids".
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

std::filesystem::path ids_path(const std::filesystem::path& store_path);

}  // namespace tilecurate::features
