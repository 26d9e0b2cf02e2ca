#include "quality/metrics.hpp"

#include <cmath>

#include "common/error.hpp"

namespace tilecurate::quality {

double psnr_from_mse(double mse, double dynamic_range) {
  if (mse <= 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(dynamic_range * dynamic_range / mse);
}

PixelMetrics pixel_metrics(const Image& a, const Image& b, double dynamic_range) {
  require(a.same_shape(b), ErrorKind::Contract, "pixel_metrics: image dimensions differ");
  require(!a.data.empty(), ErrorKind::Contract, "pixel_metrics: empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    sum += d * d;
  }
  PixelMetrics m;
  m.mse = sum / static_cast<double>(a.data.size());
  m.psnr = psnr_from_mse(m.mse, dynamic_range);
  return m;
}

}  // namespace tilecurate::quality
