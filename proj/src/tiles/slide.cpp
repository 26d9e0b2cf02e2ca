#include "tiles/slide.hpp"

#include <algorithm>
#include <cstring>

#include "common/error.hpp"

namespace tilecurate::tiles {

Rgb8Image crop(const Rgb8Image& image, int x, int y, int width, int height) {
  require(width > 0 && height > 0, ErrorKind::Contract, "region must be non-empty");
  Rgb8Image out(width, height, 255);
  const int x0 = std::max(0, x), x1 = std::min(image.width, x + width);
  const int y0 = std::max(0, y), y1 = std::min(image.height, y + height);
  if (x0 >= x1) return out;
  for (int yy = y0; yy < y1; ++yy)
    std::memcpy(out.at(x0 - x, yy - y), image.at(x0, yy), static_cast<std::size_t>(x1 - x0) * 3);
  return out;
}

Rgb8Image box_downsample(const Rgb8Image& image, int factor) {
  require(factor >= 1, ErrorKind::Contract, "downsample factor must be positive");
  if (factor == 1) return image;
  const int w = (image.width + factor - 1) / factor;
  const int h = (image.height + factor - 1) / factor;
  Rgb8Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      unsigned sum[3] = {0, 0, 0};
      unsigned count = 0;
      for (int yy = y * factor; yy < std::min(image.height, (y + 1) * factor); ++yy)
        for (int xx = x * factor; xx < std::min(image.width, (x + 1) * factor); ++xx) {
          const auto* p = image.at(xx, yy);
          for (int c = 0; c < 3; ++c) sum[c] += p[c];
          ++count;
        }
      for (int c = 0; c < 3; ++c) out.at(x, y)[c] = static_cast<std::uint8_t>((sum[c] + count / 2) / count);
    }
  return out;
}

ImageSlideReader::ImageSlideReader(Rgb8Image image) : image_(std::move(image)) {}

std::shared_ptr<ImageSlideReader> ImageSlideReader::open(const std::filesystem::path& path) {
  return std::make_shared<ImageSlideReader>(read_image(path));
}

std::vector<LevelInfo> ImageSlideReader::levels() const { return {{image_.width, image_.height, 1.0}}; }

Rgb8Image ImageSlideReader::read_region(int level, int x, int y, int width, int height) const {
  require(level == 0, ErrorKind::Contract, "plain image has a single level");
  return crop(image_, x, y, width, height);
}

PyramidSlideReader::PyramidSlideReader(const Rgb8Image& level0, const std::vector<int>& factors)
    : factors_(factors) {
  require(!factors.empty() && factors.front() == 1, ErrorKind::Contract, "pyramid must start at factor 1");
  for (int f : factors) images_.push_back(box_downsample(level0, f));
}

std::vector<LevelInfo> PyramidSlideReader::levels() const {
  std::vector<LevelInfo> out;
  for (std::size_t i = 0; i < images_.size(); ++i)
    out.push_back({images_[i].width, images_[i].height, static_cast<double>(factors_[i])});
  return out;
}

Rgb8Image PyramidSlideReader::read_region(int level, int x, int y, int width, int height) const {
  require(level >= 0 && level < static_cast<int>(images_.size()), ErrorKind::Contract, "no such pyramid level");
  return crop(images_[static_cast<std::size_t>(level)], x, y, width, height);
}

void SlideSource::validate(int min_side) const {
  require(!slide_id.empty(), ErrorKind::Config, "slide_id must not be empty");
  require(slide_id.find_first_of("\t\n\r/\\:") == std::string::npos, ErrorKind::Config,
          "slide_id '" + slide_id + "' contains a tab, newline, colon or path separator");
  require(reader != nullptr, ErrorKind::Source, "slide '" + slide_id + "' has no reader");
  const auto lv = reader->levels();
  require(!lv.empty(), ErrorKind::Source, "slide '" + slide_id + "' has no levels");
  require(lv.front().width >= min_side && lv.front().height >= min_side, ErrorKind::Source,
          "slide '" + slide_id + "' is smaller than one tile");
  for (std::size_t i = 1; i < lv.size(); ++i)
    require(lv[i].downsample > lv[i - 1].downsample, ErrorKind::Source,
            "slide '" + slide_id + "': level downsamples must increase");
}

}  // namespace tilecurate::tiles
