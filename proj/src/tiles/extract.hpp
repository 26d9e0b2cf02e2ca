#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "tiles/slide.hpp"

namespace tilecurate::tiles {

struct ExtractionConfig {
  int tile_px = 256;
  int mask_downsample = 32;
  double tissue_threshold = 0.25;
  double saturation_floor = 0.05;
  double blank_variance_floor = 1e-4;
  // Pen-mark heuristic: strongly saturated pixels in the blue/green hue band.
  double pen_hue_min = 75.0;
  double pen_hue_max = 255.0;
  double pen_saturation = 0.7;
  double pen_fraction = 0.5;

  void validate() const;
};

struct TissueMask {
  int width = 0;
  int height = 0;
  int downsample = 1;
  int otsu_bin = 0;  // saturation bin (of 256) at which tissue starts; 256 for an all-background mask
  std::vector<std::uint8_t> tissue;

  bool at(int x, int y) const { return tissue[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t count() const;
};

struct TileRecord {
  std::string slide_id;
  std::string tile_id;
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  double tissue_fraction = 0.0;
  std::string path;
  bool operator==(const TileRecord&) const = default;
};

std::string make_tile_id(std::string_view slide_id, int x, int y);
std::string tile_file_name(std::string_view slide_id, int x, int y);

/// Otsu threshold over a 256-bin histogram: the first bin of the upper class.
/// Returns 256 when fewer than two bins are populated.
int otsu_threshold(const std::array<std::uint64_t, 256>& histogram);

TissueMask compute_tissue_mask(const SlideSource& slide, const ExtractionConfig& cfg);

/// Grid-aligned candidate tiles whose mask footprint meets the tissue threshold, sorted by (y, x).
std::vector<TileRecord> extract_tile_grid(const SlideSource& slide, const TissueMask& mask,
                                          const ExtractionConfig& cfg);

enum class TileVerdict { Keep, Blank, PenMark };
std::string_view to_string(TileVerdict verdict);

TileVerdict filter_tile(const Image& tile, const ExtractionConfig& cfg);

struct ExtractionResult {
  std::vector<TileRecord> records;
  std::size_t candidates = 0;
  std::size_t rejected_blank = 0;
  std::size_t rejected_pen = 0;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Mask, grid, per-tile filtering, and PNG output into `tile_dir`. Record
/// paths are `path_prefix` + file name. Tiles are processed by `workers`
/// threads; results are merged in grid order.
ExtractionResult extract_tiles(const SlideSource& slide, const ExtractionConfig& cfg,
                               const std::filesystem::path& tile_dir, const std::string& path_prefix,
                               int workers = 1, const ProgressFn& progress = {});

/// Tab-separated manifest with a "#" header line.
void write_manifest(const std::filesystem::path& path, const std::vector<TileRecord>& records);
std::vector<TileRecord> read_manifest(const std::filesystem::path& path);

}  // namespace tilecurate::tiles
