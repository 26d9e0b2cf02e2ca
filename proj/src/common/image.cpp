#include "common/image.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "common/error.hpp"

namespace tilecurate {

Image to_float(const Rgb8Image& rgb) {
  Image out(3, rgb.height, rgb.width);
  const std::size_t plane = out.plane();
  for (std::size_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) out.data[c * plane + i] = rgb.pixels[i * 3 + c] / 255.0f;
  return out;
}

Rgb8Image to_rgb8(const Image& image) {
  if (image.channels != 3) throw Error(ErrorKind::Contract, "to_rgb8: expected 3 channels");
  Rgb8Image out(image.width, image.height);
  const std::size_t plane = image.plane();
  for (std::size_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(image.data[c * plane + i], 0.0f, 1.0f);
      out.pixels[i * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  return out;
}

double hsv_hue(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  if (delta <= 0.0) return 0.0;
  double h;
  if (mx == r)
    h = 60.0 * std::fmod((g - b) / delta, 6.0);
  else if (mx == g)
    h = 60.0 * ((b - r) / delta + 2.0);
  else
    h = 60.0 * ((r - g) / delta + 4.0);
  return h < 0.0 ? h + 360.0 : h;
}

Rgb8Image read_image(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (mat.empty()) throw Error(ErrorKind::Source, "cannot read image " + path.string());
  if (mat.depth() != CV_8U) throw Error(ErrorKind::Source, "unsupported bit depth in " + path.string());
  Rgb8Image out(mat.cols, mat.rows);
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = mat.ptr<std::uint8_t>(y);
    std::uint8_t* dst = out.at(0, y);
    for (int x = 0; x < mat.cols; ++x) {
      dst[x * 3 + 0] = row[x * 3 + 2];
      dst[x * 3 + 1] = row[x * 3 + 1];
      dst[x * 3 + 2] = row[x * 3 + 0];
    }
  }
  return out;
}

namespace {

cv::Mat to_bgr_mat(const Rgb8Image& image) {
  cv::Mat mat(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    auto* row = mat.ptr<std::uint8_t>(y);
    const std::uint8_t* src = image.at(0, y);
    for (int x = 0; x < image.width; ++x) {
      row[x * 3 + 0] = src[x * 3 + 2];
      row[x * 3 + 1] = src[x * 3 + 1];
      row[x * 3 + 2] = src[x * 3 + 0];
    }
  }
  return mat;
}

const std::vector<int> kPngParams{cv::IMWRITE_PNG_COMPRESSION, 6};

}  // namespace

void write_png(const std::filesystem::path& path, const Rgb8Image& image) {
  if (image.width <= 0 || image.height <= 0) throw Error(ErrorKind::Contract, "write_png: empty image");
  if (!cv::imwrite(path.string(), to_bgr_mat(image), kPngParams))
    throw Error(ErrorKind::Io, "cannot write " + path.string());
}

std::vector<std::uint8_t> encode_png(const Rgb8Image& image) {
  std::vector<std::uint8_t> bytes;
  if (!cv::imencode(".png", to_bgr_mat(image), bytes, kPngParams))
    throw Error(ErrorKind::Io, "png encoding failed");
  return bytes;
}

}  // namespace tilecurate
