#include "tiles/extract.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "common/error.hpp"
#include "common/parallel.hpp"

namespace tilecurate::tiles {

void ExtractionConfig::validate() const {
  require(tile_px > 0, ErrorKind::Config, "tile_px must be positive");
  require(mask_downsample > 0, ErrorKind::Config, "mask_downsample must be positive");
  require(tissue_threshold >= 0.0 && tissue_threshold <= 1.0, ErrorKind::Config,
          "tissue_threshold must lie in [0, 1]");
  require(saturation_floor >= 0.0 && saturation_floor <= 1.0, ErrorKind::Config,
          "saturation_floor must lie in [0, 1]");
  require(blank_variance_floor >= 0.0, ErrorKind::Config, "blank_variance_floor must be nonnegative");
  require(pen_hue_min <= pen_hue_max, ErrorKind::Config, "pen_hue_min must not exceed pen_hue_max");
  require(pen_fraction >= 0.0 && pen_fraction <= 1.0, ErrorKind::Config, "pen_fraction must lie in [0, 1]");
}

std::size_t TissueMask::count() const {
  return static_cast<std::size_t>(std::count(tissue.begin(), tissue.end(), std::uint8_t{1}));
}

std::string make_tile_id(std::string_view slide_id, int x, int y) {
  return std::string(slide_id) + ":" + std::to_string(x) + ":" + std::to_string(y);
}

std::string tile_file_name(std::string_view slide_id, int x, int y) {
  return std::string(slide_id) + "_" + std::to_string(x) + "_" + std::to_string(y) + ".png";
}

int otsu_threshold(const std::array<std::uint64_t, 256>& hist) {
  double total = 0.0, weighted = 0.0;
  int populated = 0;
  for (int i = 0; i < 256; ++i) {
    total += static_cast<double>(hist[i]);
    weighted += static_cast<double>(i) * static_cast<double>(hist[i]);
    populated += hist[i] > 0;
  }
  if (populated < 2) return 256;
  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int best_t = 256;
  for (int t = 1; t < 256; ++t) {
    w0 += static_cast<double>(hist[t - 1]);
    sum0 += static_cast<double>(t - 1) * static_cast<double>(hist[t - 1]);
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double d = sum0 / w0 - (weighted - sum0) / w1;
    const double between = w0 * w1 * d * d;
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

namespace {

int saturation_bin(double s) { return std::min(255, static_cast<int>(s * 256.0)); }

// Coarsest level whose downsample does not exceed the mask factor.
int mask_level(const std::vector<LevelInfo>& levels, int downsample) {
  int best = 0;
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i].downsample <= downsample) best = static_cast<int>(i);
  return best;
}

}  // namespace

TissueMask compute_tissue_mask(const SlideSource& slide, const ExtractionConfig& cfg) {
  cfg.validate();
  slide.validate(1);
  const auto levels = slide.reader->levels();
  const LevelInfo l0 = levels.front();
  const int ds = cfg.mask_downsample;
  TissueMask mask;
  mask.downsample = ds;
  mask.width = (l0.width + ds - 1) / ds;
  mask.height = (l0.height + ds - 1) / ds;

  const int level = mask_level(levels, ds);
  const LevelInfo lv = levels[static_cast<std::size_t>(level)];
  const double scale = lv.downsample;
  auto to_level = [&](long v0, int limit) {
    return std::clamp(static_cast<int>(std::floor(static_cast<double>(v0) / scale)), 0, limit);
  };

  // Box average each mask cell's level-0 footprint, mapped onto the read level.
  std::vector<double> saturation(static_cast<std::size_t>(mask.width) * mask.height);
  for (int my = 0; my < mask.height; ++my) {
    const int y0 = to_level(static_cast<long>(my) * ds, lv.height - 1);
    const int y1 = std::max(y0 + 1, to_level(std::min<long>(static_cast<long>(my + 1) * ds, l0.height), lv.height));
    const Rgb8Image strip = slide.reader->read_region(level, 0, y0, lv.width, y1 - y0);
    for (int mx = 0; mx < mask.width; ++mx) {
      const int x0 = to_level(static_cast<long>(mx) * ds, lv.width - 1);
      const int x1 =
          std::max(x0 + 1, to_level(std::min<long>(static_cast<long>(mx + 1) * ds, l0.width), lv.width));
      double sum[3] = {0, 0, 0};
      for (int y = 0; y < y1 - y0; ++y)
        for (int x = x0; x < x1; ++x) {
          const auto* p = strip.at(x, y);
          for (int c = 0; c < 3; ++c) sum[c] += p[c];
        }
      const double n = 255.0 * (x1 - x0) * (y1 - y0);
      saturation[static_cast<std::size_t>(my) * mask.width + mx] = hsv_saturation(sum[0] / n, sum[1] / n, sum[2] / n);
    }
  }

  std::array<std::uint64_t, 256> hist{};
  for (double s : saturation) ++hist[static_cast<std::size_t>(saturation_bin(s))];
  mask.otsu_bin = otsu_threshold(hist);
  mask.tissue.resize(saturation.size());
  for (std::size_t i = 0; i < saturation.size(); ++i)
    mask.tissue[i] = saturation_bin(saturation[i]) >= mask.otsu_bin && saturation[i] >= cfg.saturation_floor;
  return mask;
}

std::vector<TileRecord> extract_tile_grid(const SlideSource& slide, const TissueMask& mask,
                                          const ExtractionConfig& cfg) {
  cfg.validate();
  slide.validate(cfg.tile_px);
  const LevelInfo l0 = slide.level0();
  const int ds = mask.downsample;
  require(ds == cfg.mask_downsample, ErrorKind::Config, "mask downsample differs from mask_downsample");
  require(mask.width == (l0.width + ds - 1) / ds && mask.height == (l0.height + ds - 1) / ds &&
              mask.tissue.size() == static_cast<std::size_t>(mask.width) * mask.height,
          ErrorKind::Config, "tissue mask dimensions do not match slide '" + slide.slide_id + "'");
  std::vector<TileRecord> out;
  const int t = cfg.tile_px;
  for (int y = 0; y + t <= l0.height; y += t)
    for (int x = 0; x + t <= l0.width; x += t) {
      const int mx0 = x / ds, mx1 = std::min(mask.width, (x + t + ds - 1) / ds);
      const int my0 = y / ds, my1 = std::min(mask.height, (y + t + ds - 1) / ds);
      std::size_t hits = 0;
      for (int my = my0; my < my1; ++my)
        for (int mx = mx0; mx < mx1; ++mx) hits += mask.at(mx, my);
      const double fraction = static_cast<double>(hits) / static_cast<double>((mx1 - mx0) * (my1 - my0));
      if (fraction < cfg.tissue_threshold) continue;
      out.push_back({slide.slide_id, make_tile_id(slide.slide_id, x, y), x, y, t, t, fraction,
                     tile_file_name(slide.slide_id, x, y)});
    }
  return out;
}

std::string_view to_string(TileVerdict verdict) {
  switch (verdict) {
    case TileVerdict::Keep: return "keep";
    case TileVerdict::Blank: return "blank";
    case TileVerdict::PenMark: return "pen_mark";
  }
  return "unknown";
}

TileVerdict filter_tile(const Image& tile, const ExtractionConfig& cfg) {
  require(tile.channels == 3 && tile.height == cfg.tile_px && tile.width == cfg.tile_px, ErrorKind::Contract,
          "filter_tile expects a 3x" + std::to_string(cfg.tile_px) + "x" + std::to_string(cfg.tile_px) + " tile");
  const std::size_t plane = tile.plane();
  bool blank = true;
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      const double v = tile.data[c * plane + i];
      sum += v;
      sq += v * v;
    }
    const double mean = sum / plane;
    if (sq / plane - mean * mean >= cfg.blank_variance_floor) blank = false;
  }
  if (blank) return TileVerdict::Blank;
  std::size_t pen = 0;
  for (std::size_t i = 0; i < plane; ++i) {
    const double r = tile.data[i], g = tile.data[plane + i], b = tile.data[2 * plane + i];
    if (hsv_saturation(r, g, b) <= cfg.pen_saturation) continue;
    const double h = hsv_hue(r, g, b);
    if (h >= cfg.pen_hue_min && h <= cfg.pen_hue_max) ++pen;
  }
  if (static_cast<double>(pen) > cfg.pen_fraction * static_cast<double>(plane)) return TileVerdict::PenMark;
  return TileVerdict::Keep;
}

ExtractionResult extract_tiles(const SlideSource& slide, const ExtractionConfig& cfg,
                               const std::filesystem::path& tile_dir, const std::string& path_prefix, int workers,
                               const ProgressFn& progress) {
  const TissueMask mask = compute_tissue_mask(slide, cfg);
  std::vector<TileRecord> candidates = extract_tile_grid(slide, mask, cfg);
  std::filesystem::create_directories(tile_dir);
  std::vector<TileVerdict> verdicts(candidates.size());
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(candidates.size(), workers, [&](std::size_t i) {
    TileRecord& rec = candidates[i];
    const Rgb8Image pixels = slide.reader->read_region(0, rec.x, rec.y, rec.width, rec.height);
    verdicts[i] = filter_tile(to_float(pixels), cfg);
    if (verdicts[i] == TileVerdict::Keep) write_png(tile_dir / rec.path, pixels);
    rec.path = path_prefix + rec.path;
    const std::size_t n = ++done;
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(n, candidates.size());
    }
  });
  ExtractionResult result;
  result.candidates = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (verdicts[i] == TileVerdict::Keep) result.records.push_back(std::move(candidates[i]));
    result.rejected_blank += verdicts[i] == TileVerdict::Blank;
    result.rejected_pen += verdicts[i] == TileVerdict::PenMark;
  }
  return result;
}

void write_manifest(const std::filesystem::path& path, const std::vector<TileRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "#slide_id\ttile_id\tx\ty\twidth\theight\ttissue_fraction\tpath\n";
  char fraction[32];
  for (const auto& r : records) {
    std::snprintf(fraction, sizeof fraction, "%.6f", r.tissue_fraction);
    out << r.slide_id << '\t' << r.tile_id << '\t' << r.x << '\t' << r.y << '\t' << r.width << '\t' << r.height
        << '\t' << fraction << '\t' << r.path << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

std::vector<TileRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<TileRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> f;
    std::stringstream s(line);
    std::string field;
    while (std::getline(s, field, '\t')) f.push_back(field);
    require(f.size() == 8, ErrorKind::Io, path.string() + ":" + std::to_string(lineno) + ": expected 8 columns");
    try {
      out.push_back({f[0], f[1], std::stoi(f[2]), std::stoi(f[3]), std::stoi(f[4]), std::stoi(f[5]),
                     std::stod(f[6]), f[7]});
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Io, path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return out;
}

}  // namespace tilecurate::tiles
