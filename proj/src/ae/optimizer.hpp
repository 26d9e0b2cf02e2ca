#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ae/tensor.hpp"

namespace tilecurate::ae {

/// Adam with L2 weight decay folded into the gradient.
template <class T>
class Adam {
 public:
  Adam(double learning_rate, double weight_decay, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(learning_rate), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Parameter<T>*>& params) {
    if (first_.empty()) {
      for (const auto* p : params) {
        first_.emplace_back(p->trainable ? p->numel() : 0, 0.0);
        second_.emplace_back(p->trainable ? p->numel() : 0, 0.0);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Parameter<T>& p = *params[k];
      if (!p.trainable) continue;
      auto& m = first_[k];
      auto& v = second_[k];
      for (std::size_t i = 0; i < p.numel(); ++i) {
        const double g = static_cast<double>(p.grad[i]) + wd_ * p.value[i];
        m[i] = beta1_ * m[i] + (1 - beta1_) * g;
        v[i] = beta2_ * v[i] + (1 - beta2_) * g * g;
        p.value[i] -= static_cast<T>(lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_));
      }
    }
  }

  long steps() const { return t_; }

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> first_, second_;
};

}  // namespace tilecurate::ae
