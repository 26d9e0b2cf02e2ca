#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cluster/sampler.hpp"
#include "curation/state.hpp"
#include "tiles/extract.hpp"

namespace tilecurate::curation {

inline constexpr std::size_t kDefaultClassCap = 70000;

struct DatasetEntry {
  std::string tissue;
  tiles::TileRecord tile;
  bool operator==(const DatasetEntry&) const = default;
};

struct DatasetManifest {
  std::vector<DatasetEntry> entries;  // class registry order, then sample order
  std::size_t cap = kDefaultClassCap;
  std::uint64_t seed = 0;
  std::map<std::string, std::size_t> shortfall;  // classes below cap: missing count
  std::string checksum;                          // SHA-256 of the manifest listing

  std::map<std::string, std::size_t> counts() const;
};

/// Per class: sampled tiles of every actively labeled cluster of that class
/// (cluster id order), deduplicated by tile id across the whole manifest, then
/// subsampled to exactly `cap` with a generator seeded from (seed, class index).
DatasetManifest assemble_dataset(const CurationState& state, const std::vector<cluster::SampledTile>& samples,
                                 const std::vector<tiles::TileRecord>& records, std::size_t cap, std::uint64_t seed);

/// The tile manifest schema with a leading class column.
std::string manifest_listing(const DatasetManifest& manifest);
void write_dataset_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
std::vector<DatasetEntry> read_dataset_manifest(const std::filesystem::path& path);

/// Copies each tile image from `project_root`/path into `dataset_dir`/<class>/.
void materialize_dataset(const DatasetManifest& manifest, const std::filesystem::path& project_root,
                         const std::filesystem::path& dataset_dir);

}  // namespace tilecurate::curation
