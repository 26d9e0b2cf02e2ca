#include "curation/exporters.hpp"

#include <json.hpp>

#include "common/error.hpp"

namespace tilecurate::curation {

using nlohmann::json;

std::string export_qupath_geojson(const std::vector<LabeledTile>& tiles, const ClassRegistry& classes) {
  json features = json::array();
  for (const auto& t : tiles) {
    require(t.tile.slide_id == tiles.front().tile.slide_id, ErrorKind::Contract,
            "GeoJSON export mixes slides " + tiles.front().tile.slide_id + " and " + t.tile.slide_id);
    const int x0 = t.tile.x, y0 = t.tile.y, x1 = x0 + t.tile.width, y1 = y0 + t.tile.height;
    const Color c = classes.color_of(t.tissue);
    features.push_back(
        {{"type", "Feature"},
         {"id", t.tile.tile_id},
         {"geometry",
          {{"type", "Polygon"}, {"coordinates", json::array({{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}})}}},
         {"properties",
          {{"objectType", "annotation"},
           {"classification", {{"name", t.tissue}, {"color", {c.r, c.g, c.b}}}}}}});
  }
  return json{{"type", "FeatureCollection"}, {"features", features}}.dump(1) + "\n";
}

std::vector<GeoTile> parse_qupath_geojson(const std::string& text) {
  std::vector<GeoTile> out;
  try {
    const json doc = json::parse(text);
    require(doc.at("type") == "FeatureCollection", ErrorKind::Io, "GeoJSON root is not a FeatureCollection");
    for (const auto& f : doc.at("features")) {
      const auto& geom = f.at("geometry");
      require(geom.at("type") == "Polygon", ErrorKind::Io, "GeoJSON feature is not a Polygon");
      const auto& ring = geom.at("coordinates").at(0);
      require(ring.size() == 5 && ring[0] == ring[4], ErrorKind::Io, "GeoJSON ring is not a closed rectangle");
      const int x0 = ring[0][0], y0 = ring[0][1], x1 = ring[2][0], y1 = ring[2][1];
      require(ring[1][0] == x1 && ring[1][1] == y0 && ring[3][0] == x0 && ring[3][1] == y1, ErrorKind::Io,
              "GeoJSON ring is not axis aligned");
      out.push_back({x0, y0, x1 - x0, y1 - y0, f.at("properties").at("classification").at("name")});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("malformed GeoJSON: ") + e.what());
  }
  return out;
}

Rgb8Image render_tissue_map(int slide_width, int slide_height, const std::vector<LabeledTile>& tiles,
                            const ClassRegistry& classes, int scale) {
  require(scale >= 1, ErrorKind::Contract, "map scale must be positive");
  require(slide_width > 0 && slide_height > 0, ErrorKind::Contract, "slide dimensions must be positive");
  Rgb8Image map((slide_width + scale - 1) / scale, (slide_height + scale - 1) / scale, 255);
  for (const auto& t : tiles) {
    const auto& r = t.tile;
    require(r.width % scale == 0 && r.height % scale == 0, ErrorKind::Contract,
            "map scale " + std::to_string(scale) + " does not divide the tile size");
    require(r.x >= 0 && r.y >= 0 && r.x + r.width <= slide_width && r.y + r.height <= slide_height,
            ErrorKind::Contract, "tile " + r.tile_id + " lies outside the slide");
    const Color c = classes.color_of(t.tissue);
    for (int y = r.y / scale; y < (r.y + r.height) / scale; ++y)
      for (int x = r.x / scale; x < (r.x + r.width) / scale; ++x) {
        auto* p = map.at(x, y);
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
      }
  }
  return map;
}

SegmentationScore score_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  SegmentationScore s{1.0, 1.0, tp, fp, fn, tn};
  const double t = static_cast<double>(tp);
  if (tp + fp + fn > 0) {
    s.iou = t / static_cast<double>(tp + fp + fn);
    s.dice = 2.0 * t / static_cast<double>(2 * tp + fp + fn);
  }
  return s;
}

SegmentationScore eval_tile_segmentation(const PredictionGrid& pred, const BinaryMask& mask,
                                         const std::string& positive_class, int tile_px, double coverage) {
  require(tile_px > 0, ErrorKind::Contract, "tile size must be positive");
  require(pred.rows > 0 && pred.cols > 0 && pred.cells.size() == static_cast<std::size_t>(pred.rows) * pred.cols,
          ErrorKind::Contract, "prediction grid is malformed");
  require(mask.width == pred.cols * tile_px && mask.height == pred.rows * tile_px &&
              mask.values.size() == static_cast<std::size_t>(mask.width) * mask.height,
          ErrorKind::Contract,
          "mask is " + std::to_string(mask.width) + "x" + std::to_string(mask.height) + " but the grid needs " +
              std::to_string(pred.cols * tile_px) + "x" + std::to_string(pred.rows * tile_px));
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  const double area = static_cast<double>(tile_px) * tile_px;
  for (int r = 0; r < pred.rows; ++r)
    for (int c = 0; c < pred.cols; ++c) {
      std::size_t hits = 0;
      for (int y = r * tile_px; y < (r + 1) * tile_px; ++y)
        for (int x = c * tile_px; x < (c + 1) * tile_px; ++x)
          hits += mask.values[static_cast<std::size_t>(y) * mask.width + x] != 0;
      const bool truth = static_cast<double>(hits) >= coverage * area;
      const auto& cell = pred.cells[static_cast<std::size_t>(r) * pred.cols + c];
      const bool positive = cell && *cell == positive_class;
      tp += truth && positive;
      fp += !truth && positive;
      fn += truth && !positive;
      tn += !truth && !positive;
    }
  return score_from_counts(tp, fp, fn, tn);
}

}  // namespace tilecurate::curation
