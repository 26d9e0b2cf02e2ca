#include "ae/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"

namespace tilecurate::ae {
namespace {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

// Unfolds a (channels, height, width) plane stack into (channels*k*k, gh*gw)
// columns, where (gh, gw) is the convolution output grid.
template <class T>
void im2col(const T* x, int channels, int height, int width, int gh, int gw, const ConvGeometry& g, T* cols) {
  const int k = g.kernel;
  for (int c = 0; c < channels; ++c)
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        T* row = cols + (static_cast<std::size_t>(c * k + ki) * k + kj) * gh * gw;
        const T* plane = x + static_cast<std::size_t>(c) * height * width;
        for (int oy = 0; oy < gh; ++oy) {
          const int iy = oy * g.stride - g.padding + ki;
          T* out = row + static_cast<std::size_t>(oy) * gw;
          if (iy < 0 || iy >= height) {
            std::fill(out, out + gw, T(0));
            continue;
          }
          const T* in = plane + static_cast<std::size_t>(iy) * width;
          for (int ox = 0; ox < gw; ++ox) {
            const int ix = ox * g.stride - g.padding + kj;
            out[ox] = (ix >= 0 && ix < width) ? in[ix] : T(0);
          }
        }
      }
}

// Adjoint of im2col: accumulates columns back into the plane stack (zeroed here).
template <class T>
void col2im(const T* cols, int channels, int height, int width, int gh, int gw, const ConvGeometry& g, T* x) {
  const int k = g.kernel;
  std::fill(x, x + static_cast<std::size_t>(channels) * height * width, T(0));
  for (int c = 0; c < channels; ++c)
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        const T* row = cols + (static_cast<std::size_t>(c * k + ki) * k + kj) * gh * gw;
        T* plane = x + static_cast<std::size_t>(c) * height * width;
        for (int oy = 0; oy < gh; ++oy) {
          const int iy = oy * g.stride - g.padding + ki;
          if (iy < 0 || iy >= height) continue;
          const T* in = row + static_cast<std::size_t>(oy) * gw;
          T* out = plane + static_cast<std::size_t>(iy) * width;
          for (int ox = 0; ox < gw; ++ox) {
            const int ix = ox * g.stride - g.padding + kj;
            if (ix >= 0 && ix < width) out[ix] += in[ox];
          }
        }
      }
}

template <class T>
Parameter<T> make_param(std::string name, std::vector<int> shape, bool trainable = true, T fill = T(0)) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  Parameter<T> p;
  p.name = std::move(name);
  p.shape = std::move(shape);
  p.value.assign(n, fill);
  p.grad.assign(trainable ? n : 0, T(0));
  p.trainable = trainable;
  return p;
}

template <class T>
void uniform_fill(AlignedVector<T>& v, Rng& rng, double bound) {
  for (T& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

template <class T>
Conv2d<T>::Conv2d(std::string name, int in_channels, int out_channels, ConvGeometry geometry)
    : cin_(in_channels),
      cout_(out_channels),
      geom_(geometry),
      weight_(make_param<T>(name + ".weight", {out_channels, in_channels, geometry.kernel, geometry.kernel})),
      bias_(make_param<T>(name + ".bias", {out_channels})) {}

template <class T>
void Conv2d<T>::initialize(Rng& rng, double gain) {
  const double fan_in = static_cast<double>(cin_) * geom_.kernel * geom_.kernel;
  uniform_fill(weight_.value, rng, gain * std::sqrt(3.0 / fan_in));
  uniform_fill(bias_.value, rng, 1.0 / std::sqrt(fan_in));
}

template <class T>
Tensor<T> Conv2d<T>::infer(const Tensor<T>& x) const {
  require(x.c == cin_, ErrorKind::Contract, weight_.name + ": channel mismatch");
  const int oh = output_size(x.h), ow = output_size(x.w);
  const int kk = cin_ * geom_.kernel * geom_.kernel;
  Tensor<T> y(x.n, cout_, oh, ow);
  AlignedVector<T> cols(static_cast<std::size_t>(kk) * oh * ow);
  ConstMatMap<T> w(weight_.value.data(), cout_, kk);
  for (int i = 0; i < x.n; ++i) {
    im2col(x.sample(i), cin_, x.h, x.w, oh, ow, geom_, cols.data());
    MatMap<T> out(y.sample(i), cout_, oh * ow);
    out.noalias() = w * ConstMatMap<T>(cols.data(), kk, oh * ow);
    for (int c = 0; c < cout_; ++c) out.row(c).array() += bias_.value[c];
  }
  return y;
}

template <class T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) {
  input_ = x;
  return infer(x);
}

template <class T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& dy) {
  const Tensor<T>& x = input_;
  const int oh = dy.h, ow = dy.w;
  const int kk = cin_ * geom_.kernel * geom_.kernel;
  Tensor<T> dx(x.n, x.c, x.h, x.w);
  AlignedVector<T> cols(static_cast<std::size_t>(kk) * oh * ow);
  AlignedVector<T> dcols(cols.size());
  ConstMatMap<T> w(weight_.value.data(), cout_, kk);
  MatMap<T> dw(weight_.grad.data(), cout_, kk);
  for (int i = 0; i < x.n; ++i) {
    ConstMatMap<T> g(dy.sample(i), cout_, oh * ow);
    im2col(x.sample(i), cin_, x.h, x.w, oh, ow, geom_, cols.data());
    dw.noalias() += g * ConstMatMap<T>(cols.data(), kk, oh * ow).transpose();
    for (int c = 0; c < cout_; ++c) bias_.grad[c] += g.row(c).sum();
    MatMap<T>(dcols.data(), kk, oh * ow).noalias() = w.transpose() * g;
    col2im(dcols.data(), cin_, x.h, x.w, oh, ow, geom_, dx.sample(i));
  }
  return dx;
}

// ------------------------------------------------------- ConvTranspose2d

template <class T>
ConvTranspose2d<T>::ConvTranspose2d(std::string name, int in_channels, int out_channels, ConvGeometry geometry)
    : cin_(in_channels),
      cout_(out_channels),
      geom_(geometry),
      weight_(make_param<T>(name + ".weight", {in_channels, out_channels, geometry.kernel, geometry.kernel})),
      bias_(make_param<T>(name + ".bias", {out_channels})) {}

template <class T>
void ConvTranspose2d<T>::initialize(Rng& rng, double gain) {
  const double fan_in = static_cast<double>(cout_) * geom_.kernel * geom_.kernel;
  uniform_fill(weight_.value, rng, gain * std::sqrt(3.0 / fan_in));
  uniform_fill(bias_.value, rng, 1.0 / std::sqrt(fan_in));
}

template <class T>
Tensor<T> ConvTranspose2d<T>::infer(const Tensor<T>& x) const {
  require(x.c == cin_, ErrorKind::Contract, weight_.name + ": channel mismatch");
  const int oh = output_size(x.h), ow = output_size(x.w);
  const int kk = cout_ * geom_.kernel * geom_.kernel;
  Tensor<T> y(x.n, cout_, oh, ow);
  AlignedVector<T> cols(static_cast<std::size_t>(kk) * x.h * x.w);
  ConstMatMap<T> w(weight_.value.data(), cin_, kk);
  for (int i = 0; i < x.n; ++i) {
    MatMap<T>(cols.data(), kk, x.h * x.w).noalias() =
        w.transpose() * ConstMatMap<T>(x.sample(i), cin_, x.h * x.w);
    col2im(cols.data(), cout_, oh, ow, x.h, x.w, geom_, y.sample(i));
    T* out = y.sample(i);
    for (int c = 0; c < cout_; ++c) {
      T* p = out + static_cast<std::size_t>(c) * oh * ow;
      const T b = bias_.value[c];
      for (int j = 0; j < oh * ow; ++j) p[j] += b;
    }
  }
  return y;
}

template <class T>
Tensor<T> ConvTranspose2d<T>::forward(const Tensor<T>& x) {
  input_ = x;
  return infer(x);
}

template <class T>
Tensor<T> ConvTranspose2d<T>::backward(const Tensor<T>& dy) {
  const Tensor<T>& x = input_;
  const int kk = cout_ * geom_.kernel * geom_.kernel;
  Tensor<T> dx(x.n, x.c, x.h, x.w);
  AlignedVector<T> dcols(static_cast<std::size_t>(kk) * x.h * x.w);
  ConstMatMap<T> w(weight_.value.data(), cin_, kk);
  MatMap<T> dw(weight_.grad.data(), cin_, kk);
  for (int i = 0; i < x.n; ++i) {
    im2col(dy.sample(i), cout_, dy.h, dy.w, x.h, x.w, geom_, dcols.data());
    ConstMatMap<T> dc(dcols.data(), kk, x.h * x.w);
    MatMap<T>(dx.sample(i), cin_, x.h * x.w).noalias() = w * dc;
    dw.noalias() += ConstMatMap<T>(x.sample(i), cin_, x.h * x.w) * dc.transpose();
    const T* g = dy.sample(i);
    for (int c = 0; c < cout_; ++c) {
      const T* p = g + static_cast<std::size_t>(c) * dy.h * dy.w;
      T acc = 0;
      for (int j = 0; j < dy.h * dy.w; ++j) acc += p[j];
      bias_.grad[c] += acc;
    }
  }
  return dx;
}

// ----------------------------------------------------------- BatchNorm2d

template <class T>
BatchNorm2d<T>::BatchNorm2d(std::string name, int channels, double momentum, double eps)
    : channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_(make_param<T>(name + ".weight", {channels}, true, T(1))),
      beta_(make_param<T>(name + ".bias", {channels})),
      running_mean_(make_param<T>(name + ".running_mean", {channels}, false)),
      running_var_(make_param<T>(name + ".running_var", {channels}, false, T(1))) {}

template <class T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x) {
  require(x.c == channels_, ErrorKind::Contract, gamma_.name + ": channel mismatch");
  const std::size_t plane = x.plane();
  const double count = static_cast<double>(x.n) * static_cast<double>(plane);
  Tensor<T> y(x.n, x.c, x.h, x.w);
  normalized_ = Tensor<T>(x.n, x.c, x.h, x.w);
  inv_std_.assign(channels_, T(0));
  for (int c = 0; c < channels_; ++c) {
    double sum = 0.0;
    for (int i = 0; i < x.n; ++i) {
      const T* p = x.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) sum += p[j];
    }
    const double mean = sum / count;
    double sq = 0.0;
    for (int i = 0; i < x.n; ++i) {
      const T* p = x.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) sq += (p[j] - mean) * (p[j] - mean);
    }
    const double var = sq / count;
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = static_cast<T>(inv);
    const double g = gamma_.value[c], b = beta_.value[c];
    for (int i = 0; i < x.n; ++i) {
      const T* p = x.sample(i) + c * plane;
      T* xn = normalized_.sample(i) + c * plane;
      T* out = y.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        const double v = (p[j] - mean) * inv;
        xn[j] = static_cast<T>(v);
        out[j] = static_cast<T>(g * v + b);
      }
    }
    const double unbiased = count > 1 ? var * count / (count - 1) : var;
    running_mean_.value[c] = static_cast<T>((1 - momentum_) * running_mean_.value[c] + momentum_ * mean);
    running_var_.value[c] = static_cast<T>((1 - momentum_) * running_var_.value[c] + momentum_ * unbiased);
  }
  return y;
}

template <class T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& dy) {
  const std::size_t plane = dy.plane();
  const double count = static_cast<double>(dy.n) * static_cast<double>(plane);
  Tensor<T> dx(dy.n, dy.c, dy.h, dy.w);
  for (int c = 0; c < channels_; ++c) {
    double sum_dy = 0.0, sum_dy_xn = 0.0;
    for (int i = 0; i < dy.n; ++i) {
      const T* g = dy.sample(i) + c * plane;
      const T* xn = normalized_.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        sum_dy += g[j];
        sum_dy_xn += static_cast<double>(g[j]) * xn[j];
      }
    }
    gamma_.grad[c] += static_cast<T>(sum_dy_xn);
    beta_.grad[c] += static_cast<T>(sum_dy);
    const double scale = gamma_.value[c] * static_cast<double>(inv_std_[c]) / count;
    for (int i = 0; i < dy.n; ++i) {
      const T* g = dy.sample(i) + c * plane;
      const T* xn = normalized_.sample(i) + c * plane;
      T* out = dx.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j)
        out[j] = static_cast<T>(scale * (count * g[j] - sum_dy - xn[j] * sum_dy_xn));
    }
  }
  return dx;
}

template <class T>
Tensor<T> BatchNorm2d<T>::infer(const Tensor<T>& x) const {
  require(x.c == channels_, ErrorKind::Contract, gamma_.name + ": channel mismatch");
  const std::size_t plane = x.plane();
  Tensor<T> y(x.n, x.c, x.h, x.w);
  for (int c = 0; c < channels_; ++c) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(running_var_.value[c]) + eps_);
    const double scale = gamma_.value[c] * inv;
    const double shift = beta_.value[c] - running_mean_.value[c] * scale;
    for (int i = 0; i < x.n; ++i) {
      const T* p = x.sample(i) + c * plane;
      T* out = y.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) out[j] = static_cast<T>(p[j] * scale + shift);
    }
  }
  return y;
}

// ------------------------------------------------------ activations

template <class T>
Tensor<T> LeakyRelu<T>::infer(const Tensor<T>& x) const {
  Tensor<T> y = x;
  const T slope = static_cast<T>(slope_);
  for (T& v : y.data)
    if (v < T(0)) v *= slope;
  return y;
}

template <class T>
Tensor<T> LeakyRelu<T>::forward(const Tensor<T>& x) {
  input_ = x;
  return infer(x);
}

template <class T>
Tensor<T> LeakyRelu<T>::backward(const Tensor<T>& dy) {
  Tensor<T> dx = dy;
  const T slope = static_cast<T>(slope_);
  for (std::size_t i = 0; i < dx.data.size(); ++i)
    if (input_.data[i] < T(0)) dx.data[i] *= slope;
  return dx;
}

template <class T>
Tensor<T> Sigmoid<T>::infer(const Tensor<T>& x) const {
  // Clamped so outputs stay strictly inside (0, 1) at the type's precision.
  constexpr T lo = std::numeric_limits<T>::min();
  constexpr T hi = T(1) - std::numeric_limits<T>::epsilon() / 2;
  Tensor<T> y = x;
  for (T& v : y.data)
    v = std::clamp(static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(v)))), lo, hi);
  return y;
}

template <class T>
Tensor<T> Sigmoid<T>::forward(const Tensor<T>& x) {
  output_ = infer(x);
  return output_;
}

template <class T>
Tensor<T> Sigmoid<T>::backward(const Tensor<T>& dy) {
  Tensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.data.size(); ++i) {
    const T s = output_.data[i];
    dx.data[i] *= s * (T(1) - s);
  }
  return dx;
}

template class Conv2d<float>;
template class Conv2d<double>;
template class ConvTranspose2d<float>;
template class ConvTranspose2d<double>;
template class BatchNorm2d<float>;
template class BatchNorm2d<double>;
template class LeakyRelu<float>;
template class LeakyRelu<double>;
template class Sigmoid<float>;
template class Sigmoid<double>;

}  // namespace tilecurate::ae
