#include "ae/loss.hpp"

#include <string>

#include "common/error.hpp"

namespace tilecurate::ae {

std::string_view to_string(LossKind kind) { return kind == LossKind::Ssim ? "ssim" : "mse"; }

LossKind parse_loss_kind(std::string_view name) {
  if (name == "ssim") return LossKind::Ssim;
  if (name == "mse") return LossKind::Mse;
  throw Error(ErrorKind::Config, "loss must be 'ssim' or 'mse', got '" + std::string(name) + "'");
}

template <class T>
double reconstruction_loss(const Tensor<T>& input, const Tensor<T>& recon, LossKind kind, Tensor<T>* grad,
                           const quality::SsimParams& params) {
  require(input.same_shape(recon), ErrorKind::Contract, "loss: input and reconstruction shapes differ");
  if (grad) *grad = Tensor<T>(recon.n, recon.c, recon.h, recon.w);
  if (kind == LossKind::Mse) {
    const double count = static_cast<double>(input.data.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < input.data.size(); ++i) {
      const double d = static_cast<double>(recon.data[i]) - input.data[i];
      sum += d * d;
      if (grad) grad->data[i] = static_cast<T>(2.0 * d / count);
    }
    return sum / count;
  }
  const std::size_t plane = input.plane();
  const double planes = static_cast<double>(input.n) * input.c;
  double total = 0.0;
  for (int i = 0; i < input.n; ++i)
    for (int c = 0; c < input.c; ++c) {
      const std::size_t off = static_cast<std::size_t>(i) * input.sample_size() + c * plane;
      total += quality::ssim_plane(input.data.data() + off, recon.data.data() + off, input.h, input.w, params,
                                   grad ? grad->data.data() + off : nullptr, -1.0 / planes);
    }
  return 1.0 - total / planes;
}

template <class T>
std::vector<SampleQuality> sample_quality(const Tensor<T>& input, const Tensor<T>& recon,
                                          const quality::SsimParams& params) {
  require(input.same_shape(recon), ErrorKind::Contract, "sample_quality: shapes differ");
  std::vector<SampleQuality> out(input.n);
  const std::size_t plane = input.plane();
  for (int i = 0; i < input.n; ++i) {
    double s = 0.0;
    for (int c = 0; c < input.c; ++c) {
      const std::size_t off = static_cast<std::size_t>(i) * input.sample_size() + c * plane;
      s += quality::ssim_plane(input.data.data() + off, recon.data.data() + off, input.h, input.w, params);
    }
    double sq = 0.0;
    const T* a = input.sample(i);
    const T* b = recon.sample(i);
    for (std::size_t j = 0; j < input.sample_size(); ++j) {
      const double d = static_cast<double>(a[j]) - b[j];
      sq += d * d;
    }
    out[i] = {s / input.c, sq / static_cast<double>(input.sample_size())};
  }
  return out;
}

template double reconstruction_loss<float>(const Tensor<float>&, const Tensor<float>&, LossKind, Tensor<float>*,
                                           const quality::SsimParams&);
template double reconstruction_loss<double>(const Tensor<double>&, const Tensor<double>&, LossKind,
                                            Tensor<double>*, const quality::SsimParams&);
template std::vector<SampleQuality> sample_quality<float>(const Tensor<float>&, const Tensor<float>&,
                                                          const quality::SsimParams&);
template std::vector<SampleQuality> sample_quality<double>(const Tensor<double>&, const Tensor<double>&,
                                                           const quality::SsimParams&);

}  // namespace tilecurate::ae
