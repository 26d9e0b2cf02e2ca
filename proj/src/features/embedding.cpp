#include "features/embedding.hpp"

#include <cmath>
#include <fstream>

#include "common/binio.hpp"
#include "common/error.hpp"

namespace tilecurate::features {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Latent: return "latent";
    case Stage::Pooled: return "pooled";
    case Stage::Reduced: return "reduced";
    case Stage::Projected: return "projected";
  }
  return "unknown";
}

void EmbeddingMatrix::validate() const {
  require(values.size() == rows * dim, ErrorKind::Contract, "embedding matrix: payload size mismatch");
  require(tile_ids.size() == rows, ErrorKind::Contract, "embedding matrix: tile-id count mismatch");
  if (stage == Stage::Latent)
    require(dim > 0 && dim % 64 == 0, ErrorKind::Contract, "embedding matrix: latent dim must be channels x 64");
  if (stage == Stage::Projected)
    require(dim == 2, ErrorKind::Contract, "embedding matrix: projected stage must be 2-D");
  for (float v : values)
    require(std::isfinite(v), ErrorKind::Contract, "embedding matrix: non-finite value");
}

std::filesystem::path ids_path(const std::filesystem::path& store_path) {
  return store_path.string() + ".ids";
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  m.validate();
  require(m.rows <= UINT32_MAX && m.dim <= UINT32_MAX, ErrorKind::Contract, "embedding store: matrix too large");
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out.write(kStoreMagic, 4);
    binio::write_le<std::uint32_t>(out, kStoreVersion);
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows));
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim));
    binio::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(m.stage));
    binio::write_array_le<float>(out, m.values);
    if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
  }
  std::ofstream ids(ids_path(path), std::ios::binary | std::ios::trunc);
  if (!ids) throw Error(ErrorKind::Io, "cannot write " + ids_path(path).string());
  for (const auto& id : m.tile_ids) ids << id << '\n';
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  require(in && std::equal(magic, magic + 4, kStoreMagic), ErrorKind::Io, path.string() + ": bad magic");
  const auto version = binio::read_le<std::uint32_t>(in);
  require(version == kStoreVersion, ErrorKind::Io, path.string() + ": unsupported version");
  const auto rows = binio::read_le<std::uint32_t>(in);
  const auto dim = binio::read_le<std::uint32_t>(in);
  const auto tag = binio::read_le<std::uint8_t>(in);
  require(tag <= 3, ErrorKind::Io, path.string() + ": unknown stage tag");
  EmbeddingMatrix m(static_cast<Stage>(tag), rows, dim);
  binio::read_array_le<float>(in, m.values);
  std::ifstream ids(ids_path(path));
  if (!ids) throw Error(ErrorKind::Io, "missing tile-id list " + ids_path(path).string());
  std::string line;
  std::size_t i = 0;
  while (std::getline(ids, line)) {
    require(i < rows, ErrorKind::Io, "tile-id list longer than store");
    m.tile_ids[i++] = line;
  }
  require(i == rows, ErrorKind::Io, "tile-id list shorter than store");
  m.validate();
  return m;
}

}  // namespace tilecurate::features
