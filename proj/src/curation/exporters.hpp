#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "common/image.hpp"
#include "curation/classes.hpp"
#include "tiles/extract.hpp"

namespace tilecurate::curation {

struct LabeledTile {
  tiles::TileRecord tile;
  std::string tissue;
};

/// QuPath-compatible FeatureCollection: one Polygon feature per tile (level-0
/// corners, closed ring) with properties.classification = {name, color}.
std::string export_qupath_geojson(const std::vector<LabeledTile>& tiles, const ClassRegistry& classes);

struct GeoTile {
  int x = 0, y = 0, width = 0, height = 0;
  std::string tissue;
  bool operator==(const GeoTile&) const = default;
};

/// Parses export_qupath_geojson output; each ring must be an axis-aligned rectangle.
std::vector<GeoTile> parse_qupath_geojson(const std::string& text);

/// White canvas of ceil(width / scale) x ceil(height / scale); each tile
/// paints a (tile side / scale)-pixel block in its class colour, black for
/// unregistered classes.
Rgb8Image render_tissue_map(int slide_width, int slide_height, const std::vector<LabeledTile>& tiles,
                            const ClassRegistry& classes, int scale);

struct SegmentationScore {
  double iou = 0.0;
  double dice = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  bool operator==(const SegmentationScore&) const = default;
};

/// Per-tile predicted classes, row-major; nullopt for unpredicted tiles.
struct PredictionGrid {
  int rows = 0;
  int cols = 0;
  std::vector<std::optional<std::string>> cells;
};

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;  // nonzero = positive
};

/// A tile is ground-truth positive iff the positive fraction of the mask
/// under it is at least `coverage`. IoU and Dice are 1 when tp + fp + fn = 0.
SegmentationScore eval_tile_segmentation(const PredictionGrid& pred, const BinaryMask& mask,
                                         const std::string& positive_class, int tile_px, double coverage = 0.5);

SegmentationScore score_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn = 0);

}  // namespace tilecurate::curation
