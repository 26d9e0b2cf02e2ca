#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "common/image.hpp"

namespace tilecurate::tiles {

struct LevelInfo {
  int width = 0;
  int height = 0;
  double downsample = 1.0;
};

/// Pluggable multi-resolution reader. Implementations must allow concurrent
/// read_region calls.
class SlideReader {
 public:
  virtual ~SlideReader() = default;
  virtual std::vector<LevelInfo> levels() const = 0;
  /// Pixel rectangle in level coordinates; parts outside the level are white.
  virtual Rgb8Image read_region(int level, int x, int y, int width, int height) const = 0;
};

/// A plain image served as a one-level pyramid.
class ImageSlideReader final : public SlideReader {
 public:
  explicit ImageSlideReader(Rgb8Image image);
  static std::shared_ptr<ImageSlideReader> open(const std::filesystem::path& path);

  std::vector<LevelInfo> levels() const override;
  Rgb8Image read_region(int level, int x, int y, int width, int height) const override;

 private:
  Rgb8Image image_;
};

/// In-memory pyramid built from a level-0 image by box averaging at the
/// given integer factors (first factor must be 1).
class PyramidSlideReader final : public SlideReader {
 public:
  PyramidSlideReader(const Rgb8Image& level0, const std::vector<int>& factors);

  std::vector<LevelInfo> levels() const override;
  Rgb8Image read_region(int level, int x, int y, int width, int height) const override;

 private:
  std::vector<Rgb8Image> images_;
  std::vector<int> factors_;
};

struct SlideSource {
  std::string slide_id;
  std::shared_ptr<const SlideReader> reader;
  std::optional<double> mpp;

  /// Checks the id (non-empty, usable in file names and TSV) and the level
  /// invariants: level-0 at least `min_side` on both axes, downsamples increasing.
  void validate(int min_side) const;
  LevelInfo level0() const { return reader->levels().front(); }
};

Rgb8Image crop(const Rgb8Image& image, int x, int y, int width, int height);
Rgb8Image box_downsample(const Rgb8Image& image, int factor);

}  // namespace tilecurate::tiles
