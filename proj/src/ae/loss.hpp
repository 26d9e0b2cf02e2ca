#pragma once

#include <string_view>
#include <vector>

#include "ae/tensor.hpp"
#include "quality/ssim.hpp"

namespace tilecurate::ae {

enum class LossKind { Ssim, Mse };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// Batch reconstruction loss: 1 - mean per-plane SSIM, or mean squared error.
/// When grad is non-null it receives d(loss)/d(reconstruction).
template <class T>
double reconstruction_loss(const Tensor<T>& input, const Tensor<T>& reconstruction, LossKind kind,
                           Tensor<T>* grad, const quality::SsimParams& params = {});

struct SampleQuality {
  double ssim = 0.0;
  double mse = 0.0;
};

/// Per-sample SSIM (channel mean) and MSE.
template <class T>
std::vector<SampleQuality> sample_quality(const Tensor<T>& input, const Tensor<T>& reconstruction,
                                          const quality::SsimParams& params = {});

}  // namespace tilecurate::ae
