#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace tilecurate {

/// 8-bit RGB raster, interleaved, row-major.
struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Rgb8Image() = default;
  Rgb8Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t* at(int x, int y) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  bool operator==(const Rgb8Image&) const = default;
};

/// Planar (channel-major) float image with intensities in [0, 1].
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Image() = default;
  Image(int c, int h, int w, float fill = 0.0f)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return data.size(); }
  float& at(int c, int y, int x) { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  float at(int c, int y, int x) const { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  bool same_shape(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
  bool operator==(const Image&) const = default;
};

Image to_float(const Rgb8Image& rgb);
/// Rounds to nearest and clamps to [0, 255].
Rgb8Image to_rgb8(const Image& image);

/// HSV saturation in [0, 1] of an RGB triple in [0, 1].
inline double hsv_saturation(double r, double g, double b) {
  const double mx = r > g ? (r > b ? r : b) : (g > b ? g : b);
  const double mn = r < g ? (r < b ? r : b) : (g < b ? g : b);
  return mx <= 0.0 ? 0.0 : (mx - mn) / mx;
}

/// HSV hue in degrees [0, 360); 0 for achromatic pixels.
double hsv_hue(double r, double g, double b);

Rgb8Image read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Rgb8Image& image);
/// Encodes to an in-memory PNG byte stream.
std::vector<std::uint8_t> encode_png(const Rgb8Image& image);

}  // namespace tilecurate
