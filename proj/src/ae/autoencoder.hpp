#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ae/layers.hpp"
#include "ae/tensor.hpp"

namespace tilecurate::ae {

/// Encoder: one (conv 3x3 -> batch norm -> leaky ReLU) block per entry of
/// `channels`, with the matching stride. Decoder mirrors it with transposed
/// convolutions and ends in a sigmoid. The flattened final encoder feature
/// map (channels.back() x latent_side x latent_side) is the latent vector.
struct AeArchitecture {
  int tile_px = 256;
  int in_channels = 3;
  std::vector<int> channels{32, 64, 128, 256, 512, 512};
  std::vector<int> strides{2, 2, 2, 2, 2, 1};
  int kernel = 3;
  double leaky_slope = 0.2;
  int latent_side = 8;

  /// Throws a configuration error if the stride plan does not take
  /// tile_px to exactly latent_side.
  void validate() const;
  int latent_channels() const { return channels.back(); }
  std::size_t latent_size() const {
    return static_cast<std::size_t>(latent_channels()) * latent_side * latent_side;
  }
  bool operator==(const AeArchitecture&) const = default;
};

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;
  bool operator==(const NamedTensor&) const = default;
};

template <class T>
class Autoencoder {
 public:
  static Autoencoder build(const AeArchitecture& arch, std::uint64_t seed);

  Autoencoder(const Autoencoder& other);
  Autoencoder& operator=(const Autoencoder& other);
  Autoencoder(Autoencoder&&) noexcept = default;
  Autoencoder& operator=(Autoencoder&&) noexcept = default;

  const AeArchitecture& architecture() const { return arch_; }

  // Inference mode (running statistics); const and safe to share across threads.
  Tensor<T> encode(const Tensor<T>& x) const;
  Tensor<T> decode(const Tensor<T>& z) const;
  Tensor<T> reconstruct(const Tensor<T>& x) const { return decode(encode(x)); }

  // Training mode (batch statistics).
  Tensor<T> forward_train(const Tensor<T>& x);
  void backward(const Tensor<T>& grad_reconstruction);
  void zero_grad();

  std::vector<Parameter<T>*> parameters();
  std::vector<NamedTensor> export_tensors() const;
  /// Loads values by name; every parameter must be present exactly once.
  void import_tensors(const std::vector<NamedTensor>& tensors);

 private:
  explicit Autoencoder(AeArchitecture arch) : arch_(std::move(arch)) {}

  AeArchitecture arch_;
  std::vector<std::unique_ptr<Layer<T>>> encoder_;
  std::vector<std::unique_ptr<Layer<T>>> decoder_;
};

extern template class Autoencoder<float>;
extern template class Autoencoder<double>;

}  // namespace tilecurate::ae
