#pragma once

#include <vector>

#include "common/image.hpp"

namespace tilecurate::quality {

/// Gaussian-window SSIM constants. C1 = (k1 L)^2, C2 = (k2 L)^2.
struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  void validate() const;
};

/// Normalised 1-D Gaussian taps of length params.window.
std::vector<double> gaussian_taps(int window, double sigma);

/// Mean SSIM of a single plane over the valid region of the Gaussian window.
/// When grad_b is non-null, adds scale * d(mean SSIM)/d(b) into it.
template <class T>
double ssim_plane(const T* a, const T* b, int height, int width, const SsimParams& params,
                  T* grad_b = nullptr, double scale = 1.0);

/// Mean of per-channel SSIM. Images must share shape and be at least window x window.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

}  // namespace tilecurate::quality
