#include "quality/ssim.hpp"

#include <cmath>
#include <string>

#include "common/error.hpp"

namespace tilecurate::quality {

void SsimParams::validate() const {
  require(window > 0 && window % 2 == 1, ErrorKind::Contract, "ssim: window size must be odd");
  require(sigma > 0.0, ErrorKind::Contract, "ssim: sigma must be positive");
  require(c1() > 0.0 && c2() > 0.0, ErrorKind::Contract, "ssim: C1 and C2 must be positive");
}

std::vector<double> gaussian_taps(int window, double sigma) {
  std::vector<double> taps(window);
  const int r = window / 2;
  double sum = 0.0;
  for (int i = 0; i < window; ++i) {
    const double d = i - r;
    taps[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

namespace {

// Separable valid-mode correlation: (h, w) -> (h - n + 1, w - n + 1).
void filter_valid(const std::vector<double>& src, int h, int w, const std::vector<double>& taps,
                  std::vector<double>& tmp, std::vector<double>& dst) {
  const int n = static_cast<int>(taps.size());
  const int ow = w - n + 1;
  const int oh = h - n + 1;
  tmp.assign(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    const double* row = src.data() + static_cast<std::size_t>(y) * w;
    double* out = tmp.data() + static_cast<std::size_t>(y) * ow;
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += taps[k] * row[x + k];
      out[x] = acc;
    }
  }
  dst.assign(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    double* out = dst.data() + static_cast<std::size_t>(y) * ow;
    for (int k = 0; k < n; ++k) {
      const double t = taps[k];
      const double* row = tmp.data() + static_cast<std::size_t>(y + k) * ow;
      for (int x = 0; x < ow; ++x) out[x] += t * row[x];
    }
  }
}

// Adjoint of filter_valid: scatters an (oh, ow) map back onto (h, w).
void filter_adjoint(const std::vector<double>& src, int h, int w, const std::vector<double>& taps,
                    std::vector<double>& tmp, std::vector<double>& dst) {
  const int n = static_cast<int>(taps.size());
  const int ow = w - n + 1;
  const int oh = h - n + 1;
  tmp.assign(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    const double* in = src.data() + static_cast<std::size_t>(y) * ow;
    for (int k = 0; k < n; ++k) {
      const double t = taps[k];
      double* row = tmp.data() + static_cast<std::size_t>(y + k) * ow;
      for (int x = 0; x < ow; ++x) row[x] += t * in[x];
    }
  }
  dst.assign(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y) {
    const double* in = tmp.data() + static_cast<std::size_t>(y) * ow;
    double* row = dst.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < ow; ++x) {
      const double v = in[x];
      for (int k = 0; k < n; ++k) row[x + k] += taps[k] * v;
    }
  }
}

}  // namespace

template <class T>
double ssim_plane(const T* a, const T* b, int height, int width, const SsimParams& params, T* grad_b,
                  double scale) {
  params.validate();
  require(height >= params.window && width >= params.window, ErrorKind::Contract,
          "ssim: image smaller than the " + std::to_string(params.window) + "-pixel window");
  const auto taps = gaussian_taps(params.window, params.sigma);
  const std::size_t n = static_cast<std::size_t>(height) * width;
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(a[i]);
    y[i] = static_cast<double>(b[i]);
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  std::vector<double> tmp, mx, my, exx, eyy, exy;
  filter_valid(x, height, width, taps, tmp, mx);
  filter_valid(y, height, width, taps, tmp, my);
  filter_valid(xx, height, width, taps, tmp, exx);
  filter_valid(yy, height, width, taps, tmp, eyy);
  filter_valid(xy, height, width, taps, tmp, exy);

  const double c1 = params.c1();
  const double c2 = params.c2();
  const std::size_t positions = mx.size();
  std::vector<double> d_my, d_eyy, d_exy;
  if (grad_b) {
    d_my.resize(positions);
    d_eyy.resize(positions);
    d_exy.resize(positions);
  }
  double total = 0.0;
  for (std::size_t p = 0; p < positions; ++p) {
    const double ux = mx[p], uy = my[p];
    const double sxx = exx[p] - ux * ux;
    const double syy = eyy[p] - uy * uy;
    const double sxy = exy[p] - ux * uy;
    const double a1 = 2.0 * ux * uy + c1;
    const double a2 = 2.0 * sxy + c2;
    const double b1 = ux * ux + uy * uy + c1;
    const double b2 = sxx + syy + c2;
    const double num = a1 * a2;
    const double den = b1 * b2;
    total += num / den;
    if (grad_b) {
      const double dnum = 2.0 * ux * a2 - 2.0 * ux * a1;
      const double dden = 2.0 * uy * b2 - 2.0 * uy * b1;
      d_my[p] = (dnum * den - num * dden) / (den * den);
      d_exy[p] = 2.0 * a1 / den;
      d_eyy[p] = -num / (b1 * b2 * b2);
    }
  }
  const double mean = total / static_cast<double>(positions);
  if (grad_b) {
    std::vector<double> g_my, g_eyy, g_exy;
    filter_adjoint(d_my, height, width, taps, tmp, g_my);
    filter_adjoint(d_eyy, height, width, taps, tmp, g_eyy);
    filter_adjoint(d_exy, height, width, taps, tmp, g_exy);
    const double s = scale / static_cast<double>(positions);
    for (std::size_t i = 0; i < n; ++i)
      grad_b[i] += static_cast<T>(s * (g_my[i] + 2.0 * y[i] * g_eyy[i] + x[i] * g_exy[i]));
  }
  return mean;
}

template double ssim_plane<float>(const float*, const float*, int, int, const SsimParams&, float*, double);
template double ssim_plane<double>(const double*, const double*, int, int, const SsimParams&, double*,
                                   double);

double ssim(const Image& a, const Image& b, const SsimParams& params) {
  require(a.same_shape(b), ErrorKind::Contract, "ssim: image dimensions differ");
  require(a.channels > 0, ErrorKind::Contract, "ssim: empty image");
  double sum = 0.0;
  const std::size_t plane = a.plane();
  for (int c = 0; c < a.channels; ++c)
    sum += ssim_plane(a.data.data() + c * plane, b.data.data() + c * plane, a.height, a.width, params);
  return sum / a.channels;
}

}  // namespace tilecurate::quality
