#pragma once

#include <cstdint>

#include "common/image.hpp"

namespace tilecurate::quality {

/// Transform families and ranges for training-time augmentation. Every draw
/// comes from a generator seeded with (seed, index), so a given sample index
/// always receives the same transform.
struct AugmentationPolicy {
  bool rotate90 = true;
  bool small_rotation = true;
  double max_rotation_deg = 10.0;
  bool flip_horizontal = true;
  bool flip_vertical = true;
  bool shear = true;
  double max_shear_deg = 5.0;
  bool color_jitter = true;
  double brightness = 0.1;
  double contrast = 0.1;
  double saturation = 0.1;
  bool blur = true;
  double max_blur_sigma = 1.0;
  std::uint64_t seed = 0;

  static AugmentationPolicy none();
  bool any_enabled() const;
};

Image apply_augmentation(const Image& tile, const AugmentationPolicy& policy, std::uint64_t index);

Image flip_horizontal(const Image& image);
Image flip_vertical(const Image& image);
/// Counter-clockwise rotation by quarter_turns * 90 degrees. Square images only.
Image rotate90(const Image& image, int quarter_turns);
/// Rotation about the image centre followed by horizontal shear; bilinear,
/// reflected borders.
Image affine(const Image& image, double rotation_deg, double shear_deg);
/// Multiplicative brightness, contrast about the mean luminance and
/// saturation about per-pixel luminance; factors near 1 are mild. Clamped to [0,1].
Image jitter_color(const Image& image, double brightness, double contrast, double saturation);
Image gaussian_blur(const Image& image, double sigma);

}  // namespace tilecurate::quality
