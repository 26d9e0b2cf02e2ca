#include "quality/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace tilecurate::quality {

AugmentationPolicy AugmentationPolicy::none() {
  AugmentationPolicy p;
  p.rotate90 = p.small_rotation = p.flip_horizontal = p.flip_vertical = false;
  p.shear = p.color_jitter = p.blur = false;
  return p;
}

bool AugmentationPolicy::any_enabled() const {
  return rotate90 || small_rotation || flip_horizontal || flip_vertical || shear || color_jitter || blur;
}

Image flip_horizontal(const Image& image) {
  Image out(image.channels, image.height, image.width);
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) out.at(c, y, x) = image.at(c, y, image.width - 1 - x);
  return out;
}

Image flip_vertical(const Image& image) {
  Image out(image.channels, image.height, image.width);
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) out.at(c, y, x) = image.at(c, image.height - 1 - y, x);
  return out;
}

Image rotate90(const Image& image, int quarter_turns) {
  require(image.width == image.height, ErrorKind::Contract, "rotate90: image must be square");
  const int turns = ((quarter_turns % 4) + 4) % 4;
  if (turns == 0) return image;
  const int n = image.width;
  Image out(image.channels, n, n);
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        int sx = x, sy = y;
        switch (turns) {
          case 1: sx = n - 1 - y; sy = x; break;
          case 2: sx = n - 1 - x; sy = n - 1 - y; break;
          case 3: sx = y; sy = n - 1 - x; break;
        }
        out.at(c, y, x) = image.at(c, sy, sx);
      }
  return out;
}

namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

}  // namespace

Image affine(const Image& image, double rotation_deg, double shear_deg) {
  const double theta = rotation_deg * std::numbers::pi / 180.0;
  const double shear = std::tan(shear_deg * std::numbers::pi / 180.0);
  // Forward map: p' = R * S * p about the centre, S = [[1, shear], [0, 1]].
  const double ct = std::cos(theta), st = std::sin(theta);
  const double f00 = ct, f01 = ct * shear - st, f10 = st, f11 = st * shear + ct;
  const double det = f00 * f11 - f01 * f10;
  const double i00 = f11 / det, i01 = -f01 / det, i10 = -f10 / det, i11 = f00 / det;
  const double cx = (image.width - 1) / 2.0, cy = (image.height - 1) / 2.0;
  Image out(image.channels, image.height, image.width);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double sx = i00 * dx + i01 * dy + cx;
      const double sy = i10 * dx + i11 * dy + cy;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0, fy = sy - y0;
      const int xa = reflect(x0, image.width), xb = reflect(x0 + 1, image.width);
      const int ya = reflect(y0, image.height), yb = reflect(y0 + 1, image.height);
      for (int c = 0; c < image.channels; ++c) {
        const double v = (1 - fy) * ((1 - fx) * image.at(c, ya, xa) + fx * image.at(c, ya, xb)) +
                         fy * ((1 - fx) * image.at(c, yb, xa) + fx * image.at(c, yb, xb));
        out.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  return out;
}

Image jitter_color(const Image& image, double brightness, double contrast, double saturation) {
  require(image.channels == 3, ErrorKind::Contract, "jitter_color: expected an RGB image");
  Image out = image;
  const std::size_t plane = image.plane();
  float* r = out.data.data();
  float* g = r + plane;
  float* b = g + plane;
  auto luminance = [&](std::size_t i) { return 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]; };
  for (float& v : out.data) v = static_cast<float>(std::clamp(v * brightness, 0.0, 1.0));
  double mean = 0.0;
  for (std::size_t i = 0; i < plane; ++i) mean += luminance(i);
  mean /= static_cast<double>(plane);
  for (float& v : out.data) v = static_cast<float>(std::clamp((v - mean) * contrast + mean, 0.0, 1.0));
  for (std::size_t i = 0; i < plane; ++i) {
    const double l = luminance(i);
    for (float* ch : {r, g, b})
      ch[i] = static_cast<float>(std::clamp(l + (ch[i] - l) * saturation, 0.0, 1.0));
  }
  return out;
}

Image gaussian_blur(const Image& image, double sigma) {
  if (sigma < 0.05) return image;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += taps[i + radius] = std::exp(-(i * i) / (2 * sigma * sigma));
  for (double& t : taps) t /= sum;
  Image tmp(image.channels, image.height, image.width);
  Image out(image.channels, image.height, image.width);
  for (int c = 0; c < image.channels; ++c) {
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * image.at(c, y, reflect(x + k, image.width));
        tmp.at(c, y, x) = static_cast<float>(acc);
      }
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * tmp.at(c, reflect(y + k, image.height), x);
        out.at(c, y, x) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
  }
  return out;
}

Image apply_augmentation(const Image& tile, const AugmentationPolicy& policy, std::uint64_t index) {
  require(tile.width == tile.height, ErrorKind::Contract, "apply_augmentation: tile must be square");
  if (!policy.any_enabled()) return tile;
  Rng rng(mix_seed(policy.seed, index));
  // Draw every parameter up front in a fixed order so that toggling one
  // family does not shift the draws of the others.
  const int turns = static_cast<int>(rng.below(4));
  const bool hflip = rng.uniform() < 0.5;
  const bool vflip = rng.uniform() < 0.5;
  const double angle = rng.uniform(-policy.max_rotation_deg, policy.max_rotation_deg);
  const double shear = rng.uniform(-policy.max_shear_deg, policy.max_shear_deg);
  const double fb = rng.uniform(1.0 - policy.brightness, 1.0 + policy.brightness);
  const double fc = rng.uniform(1.0 - policy.contrast, 1.0 + policy.contrast);
  const double fs = rng.uniform(1.0 - policy.saturation, 1.0 + policy.saturation);
  const double sigma = rng.uniform(0.0, policy.max_blur_sigma);

  Image out = tile;
  if (policy.rotate90) out = rotate90(out, turns);
  if (policy.flip_horizontal && hflip) out = flip_horizontal(out);
  if (policy.flip_vertical && vflip) out = flip_vertical(out);
  const double a = policy.small_rotation ? angle : 0.0;
  const double s = policy.shear ? shear : 0.0;
  if (a != 0.0 || s != 0.0) out = affine(out, a, s);
  if (policy.color_jitter && out.channels == 3) out = jitter_color(out, fb, fc, fs);
  if (policy.blur) out = gaussian_blur(out, sigma);
  return out;
}

}  // namespace tilecurate::quality
