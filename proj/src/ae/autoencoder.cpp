#include "ae/autoencoder.hpp"

#include <cmath>
#include <map>
#include <string>

#include "common/error.hpp"

namespace tilecurate::ae {

void AeArchitecture::validate() const {
  require(tile_px > 0, ErrorKind::Config, "autoencoder: tile_px must be positive");
  require(in_channels > 0, ErrorKind::Config, "autoencoder: in_channels must be positive");
  require(!channels.empty(), ErrorKind::Config, "autoencoder: empty channel plan");
  require(channels.size() == strides.size(), ErrorKind::Config,
          "autoencoder: channel plan and stride plan differ in length");
  require(kernel == 3, ErrorKind::Config, "autoencoder: only 3x3 kernels are supported");
  for (int c : channels) require(c > 0, ErrorKind::Config, "autoencoder: channel counts must be positive");
  int side = tile_px;
  for (int s : strides) {
    require(s == 1 || s == 2, ErrorKind::Config, "autoencoder: strides must be 1 or 2");
    require(side % s == 0, ErrorKind::Config,
            "autoencoder: stride plan does not divide tile size " + std::to_string(tile_px));
    side /= s;
  }
  require(side == latent_side, ErrorKind::Config,
          "autoencoder: stride plan maps " + std::to_string(tile_px) + " px to " + std::to_string(side) + "x" +
              std::to_string(side) + ", expected " + std::to_string(latent_side) + "x" +
              std::to_string(latent_side));
}

template <class T>
Autoencoder<T> Autoencoder<T>::build(const AeArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  Autoencoder model(arch);
  Rng rng(seed);
  const double leaky_gain = std::sqrt(2.0 / (1.0 + arch.leaky_slope * arch.leaky_slope));
  const std::size_t depth = arch.channels.size();
  int in = arch.in_channels;
  for (std::size_t i = 0; i < depth; ++i) {
    const std::string prefix = "encoder." + std::to_string(i);
    auto conv = std::make_unique<Conv2d<T>>(prefix + ".conv", in, arch.channels[i],
                                            ConvGeometry{arch.kernel, arch.strides[i], 1, 0});
    conv->initialize(rng, leaky_gain);
    model.encoder_.push_back(std::move(conv));
    model.encoder_.push_back(std::make_unique<BatchNorm2d<T>>(prefix + ".bn", arch.channels[i]));
    model.encoder_.push_back(std::make_unique<LeakyRelu<T>>(arch.leaky_slope));
    in = arch.channels[i];
  }
  for (std::size_t j = 0; j < depth; ++j) {
    const std::size_t level = depth - 1 - j;
    const int out = level == 0 ? arch.in_channels : arch.channels[level - 1];
    const int stride = arch.strides[level];
    const std::string prefix = "decoder." + std::to_string(j);
    auto deconv = std::make_unique<ConvTranspose2d<T>>(prefix + ".deconv", arch.channels[level], out,
                                                       ConvGeometry{arch.kernel, stride, 1, stride - 1});
    const bool last = level == 0;
    deconv->initialize(rng, last ? 1.0 : leaky_gain);
    model.decoder_.push_back(std::move(deconv));
    if (last) {
      model.decoder_.push_back(std::make_unique<Sigmoid<T>>());
    } else {
      model.decoder_.push_back(std::make_unique<BatchNorm2d<T>>(prefix + ".bn", out));
      model.decoder_.push_back(std::make_unique<LeakyRelu<T>>(arch.leaky_slope));
    }
  }
  return model;
}

template <class T>
Autoencoder<T>::Autoencoder(const Autoencoder& other) : arch_(other.arch_) {
  for (const auto& l : other.encoder_) encoder_.push_back(l->clone());
  for (const auto& l : other.decoder_) decoder_.push_back(l->clone());
}

template <class T>
Autoencoder<T>& Autoencoder<T>::operator=(const Autoencoder& other) {
  if (this != &other) *this = Autoencoder(other);
  return *this;
}

template <class T>
Tensor<T> Autoencoder<T>::encode(const Tensor<T>& x) const {
  require(x.c == arch_.in_channels && x.h == arch_.tile_px && x.w == arch_.tile_px, ErrorKind::Config,
          "autoencoder: input shape does not match the architecture's tile size");
  Tensor<T> h = x;
  for (const auto& l : encoder_) h = l->infer(h);
  return h;
}

template <class T>
Tensor<T> Autoencoder<T>::decode(const Tensor<T>& z) const {
  Tensor<T> h = z;
  for (const auto& l : decoder_) h = l->infer(h);
  return h;
}

template <class T>
Tensor<T> Autoencoder<T>::forward_train(const Tensor<T>& x) {
  require(x.c == arch_.in_channels && x.h == arch_.tile_px && x.w == arch_.tile_px, ErrorKind::Config,
          "autoencoder: input shape does not match the architecture's tile size");
  Tensor<T> h = x;
  for (auto& l : encoder_) h = l->forward(h);
  for (auto& l : decoder_) h = l->forward(h);
  return h;
}

template <class T>
void Autoencoder<T>::backward(const Tensor<T>& grad) {
  Tensor<T> g = grad;
  for (auto it = decoder_.rbegin(); it != decoder_.rend(); ++it) g = (*it)->backward(g);
  for (auto it = encoder_.rbegin(); it != encoder_.rend(); ++it) g = (*it)->backward(g);
}

template <class T>
void Autoencoder<T>::zero_grad() {
  for (auto* p : parameters()) std::fill(p->grad.begin(), p->grad.end(), T(0));
}

template <class T>
std::vector<Parameter<T>*> Autoencoder<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (auto* stack : {&encoder_, &decoder_})
    for (auto& l : *stack)
      for (auto* p : l->parameters()) out.push_back(p);
  return out;
}

template <class T>
std::vector<NamedTensor> Autoencoder<T>::export_tensors() const {
  std::vector<NamedTensor> out;
  auto& self = const_cast<Autoencoder&>(*this);
  for (const auto* p : self.parameters()) {
    NamedTensor t{p->name, p->shape, {}};
    t.values.assign(p->value.begin(), p->value.end());
    out.push_back(std::move(t));
  }
  return out;
}

template <class T>
void Autoencoder<T>::import_tensors(const std::vector<NamedTensor>& tensors) {
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : tensors)
    require(by_name.emplace(t.name, &t).second, ErrorKind::Config, "checkpoint: duplicate tensor " + t.name);
  auto params = parameters();
  require(params.size() == tensors.size(), ErrorKind::Config,
          "checkpoint: expected " + std::to_string(params.size()) + " tensors, found " +
              std::to_string(tensors.size()));
  for (auto* p : params) {
    auto it = by_name.find(p->name);
    require(it != by_name.end(), ErrorKind::Config, "checkpoint: missing tensor " + p->name);
    require(it->second->shape == p->shape, ErrorKind::Config, "checkpoint: shape mismatch for " + p->name);
    p->value.assign(it->second->values.begin(), it->second->values.end());
  }
}

template class Autoencoder<float>;
template class Autoencoder<double>;

}  // namespace tilecurate::ae
