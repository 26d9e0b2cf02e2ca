#pragma once

#include <limits>

#include "common/image.hpp"

namespace tilecurate::quality {

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

struct PixelMetrics {
  double mse = 0.0;
  double psnr = kInfinitePsnr;  // +inf when mse == 0
};

PixelMetrics pixel_metrics(const Image& a, const Image& b, double dynamic_range = 1.0);

/// 10 log10(L^2 / mse); kInfinitePsnr for mse == 0.
double psnr_from_mse(double mse, double dynamic_range = 1.0);

}  // namespace tilecurate::quality
