#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ae/autoencoder.hpp"
#include "ae/loss.hpp"
#include "quality/augment.hpp"

namespace tilecurate::ae {

struct TrainConfig {
  LossKind loss = LossKind::Ssim;
  double learning_rate = 1e-4;
  double weight_decay = 1e-5;
  int batch_size = 32;
  int epochs = 10;
  long max_steps = 0;  // 0: no step limit
  std::uint64_t seed = 0;
  bool shuffle = true;
  bool augment = true;
  quality::AugmentationPolicy augmentation;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;
  double ssim = 0.0;
  double psnr = 0.0;
  double mse = 0.0;
  bool operator==(const EpochMetrics&) const = default;
};

/// Named-tensor archive of a trained model plus its training metadata.
struct Checkpoint {
  AeArchitecture architecture;
  std::vector<NamedTensor> tensors;
  TrainConfig config;
  int epoch = 0;
  std::vector<EpochMetrics> history;
};

/// Directory layout: "index" (one "name f32 d0xd1x..." line per tensor),
/// "blobs/<name>.bin" (raw little-endian f32), "meta" (JSON: architecture,
/// training config, epoch, metric history).
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

template <class T>
Autoencoder<T> model_from_checkpoint(const Checkpoint& checkpoint) {
  auto model = Autoencoder<T>::build(checkpoint.architecture, 0);
  model.import_tensors(checkpoint.tensors);
  return model;
}

/// CSV with header "epoch,loss,ssim,psnr,mse".
void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& history);

}  // namespace tilecurate::ae
