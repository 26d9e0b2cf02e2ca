#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ae/autoencoder.hpp"
#include "ae/checkpoint.hpp"
#include "cluster/sampler.hpp"
#include "tiles/extract.hpp"

namespace tilecurate::pipeline {

/// Flat "key = value" file. Blank lines and "#" comments are ignored; values
/// may be double-quoted. Every key must be known.
std::map<std::string, std::string> parse_key_values(const std::string& text);

struct ProjectConfig {
  // Inputs; relative paths resolve against the config file's directory.
  std::filesystem::path slide;
  std::string slide_id;  // defaults to the slide file stem

  tiles::ExtractionConfig extraction;

  std::vector<int> ae_channels{32, 64, 128, 256, 512, 512};
  std::vector<int> ae_strides{2, 2, 2, 2, 2, 1};
  ae::TrainConfig training;
  int embed_batch = 16;

  int pca_dim = 256;
  std::filesystem::path pca_model;  // optional: reuse a fitted model instead of fitting per slide

  cluster::ClusterConfig clustering;

  std::size_t cap_per_class = 70000;
  int map_scale = 16;

  std::filesystem::path eval_mask;
  std::filesystem::path eval_predictions;  // optional "tile_id<TAB>class" file
  std::string eval_class = "TUM";
  double eval_coverage = 0.5;

  std::string host = "127.0.0.1";
  int port = 8700;

  std::uint64_t seed = 0;
  int workers = 1;

  /// Canonical "key=value" lines of the parsed values, for fingerprints.
  std::map<std::string, std::string> canonical;

  ae::AeArchitecture architecture() const;
  void set_seed(std::uint64_t s);
  void set_workers(int w);
  void validate() const;
};

ProjectConfig load_config(const std::filesystem::path& path);
ProjectConfig config_from_text(const std::string& text, const std::filesystem::path& base_dir);
/// Keys and default values, one "key = value" per line.
std::string default_config_text();

}  // namespace tilecurate::pipeline
