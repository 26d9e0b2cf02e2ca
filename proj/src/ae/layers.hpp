#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ae/tensor.hpp"
#include "common/rng.hpp"

namespace tilecurate::ae {

template <class T>
class Layer {
 public:
  virtual ~Layer() = default;
  /// Training-mode forward; caches what backward needs.
  virtual Tensor<T> forward(const Tensor<T>& x) = 0;
  /// Gradient w.r.t. the input of the last forward; accumulates parameter grads.
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  /// Inference-mode forward without caching; safe for concurrent callers.
  virtual Tensor<T> infer(const Tensor<T>& x) const = 0;
  virtual std::vector<Parameter<T>*> parameters() { return {}; }
  virtual std::unique_ptr<Layer<T>> clone() const = 0;
};

struct ConvGeometry {
  int kernel = 3;
  int stride = 1;
  int padding = 1;
  int output_padding = 0;  // transposed convolution only
};

template <class T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(std::string name, int in_channels, int out_channels, ConvGeometry geometry);
  void initialize(Rng& rng, double gain);
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2d>(*this); }

  int output_size(int input) const { return (input + 2 * geom_.padding - geom_.kernel) / geom_.stride + 1; }

 private:
  int cin_, cout_;
  ConvGeometry geom_;
  Parameter<T> weight_;  // (cout, cin, k, k)
  Parameter<T> bias_;
  Tensor<T> input_;
};

/// Transposed convolution with PyTorch weight layout (cin, cout, k, k).
template <class T>
class ConvTranspose2d final : public Layer<T> {
 public:
  ConvTranspose2d(std::string name, int in_channels, int out_channels, ConvGeometry geometry);
  void initialize(Rng& rng, double gain);
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ConvTranspose2d>(*this); }

  int output_size(int input) const {
    return (input - 1) * geom_.stride - 2 * geom_.padding + geom_.kernel + geom_.output_padding;
  }

 private:
  int cin_, cout_;
  ConvGeometry geom_;
  Parameter<T> weight_;
  Parameter<T> bias_;
  Tensor<T> input_;
};

template <class T>
class BatchNorm2d final : public Layer<T> {
 public:
  BatchNorm2d(std::string name, int channels, double momentum = 0.1, double eps = 1e-5);
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  std::vector<Parameter<T>*> parameters() override {
    return {&gamma_, &beta_, &running_mean_, &running_var_};
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<BatchNorm2d>(*this); }

 private:
  int channels_;
  double momentum_, eps_;
  Parameter<T> gamma_, beta_, running_mean_, running_var_;
  Tensor<T> normalized_;
  std::vector<T> inv_std_;
};

template <class T>
class LeakyRelu final : public Layer<T> {
 public:
  explicit LeakyRelu(double slope) : slope_(slope) {}
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<LeakyRelu>(*this); }

 private:
  double slope_;
  Tensor<T> input_;
};

template <class T>
class Sigmoid final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Sigmoid>(*this); }

 private:
  Tensor<T> output_;
};

}  // namespace tilecurate::ae
