#include "ae/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "common/binio.hpp"
#include "common/error.hpp"

namespace tilecurate::ae {

using nlohmann::json;

void TrainConfig::validate() const {
  require(learning_rate > 0.0, ErrorKind::Config, "learning_rate must be positive");
  require(weight_decay >= 0.0, ErrorKind::Config, "weight_decay must be nonnegative");
  require(batch_size > 0, ErrorKind::Config, "batch_size must be positive");
  require(epochs > 0, ErrorKind::Config, "epochs must be positive");
  require(max_steps >= 0, ErrorKind::Config, "max_steps must be nonnegative");
}

namespace {

json to_json(const AeArchitecture& a) {
  return {{"tile_px", a.tile_px},   {"in_channels", a.in_channels}, {"channels", a.channels},
          {"strides", a.strides},   {"kernel", a.kernel},           {"leaky_slope", a.leaky_slope},
          {"latent_side", a.latent_side}};
}

AeArchitecture architecture_from_json(const json& j) {
  AeArchitecture a;
  a.tile_px = j.at("tile_px");
  a.in_channels = j.at("in_channels");
  a.channels = j.at("channels").get<std::vector<int>>();
  a.strides = j.at("strides").get<std::vector<int>>();
  a.kernel = j.at("kernel");
  a.leaky_slope = j.at("leaky_slope");
  a.latent_side = j.at("latent_side");
  return a;
}

json to_json(const quality::AugmentationPolicy& p) {
  return {{"rotate90", p.rotate90},
          {"small_rotation", p.small_rotation},
          {"max_rotation_deg", p.max_rotation_deg},
          {"flip_horizontal", p.flip_horizontal},
          {"flip_vertical", p.flip_vertical},
          {"shear", p.shear},
          {"max_shear_deg", p.max_shear_deg},
          {"color_jitter", p.color_jitter},
          {"brightness", p.brightness},
          {"contrast", p.contrast},
          {"saturation", p.saturation},
          {"blur", p.blur},
          {"max_blur_sigma", p.max_blur_sigma},
          {"seed", p.seed}};
}

quality::AugmentationPolicy policy_from_json(const json& j) {
  quality::AugmentationPolicy p;
  p.rotate90 = j.at("rotate90");
  p.small_rotation = j.at("small_rotation");
  p.max_rotation_deg = j.at("max_rotation_deg");
  p.flip_horizontal = j.at("flip_horizontal");
  p.flip_vertical = j.at("flip_vertical");
  p.shear = j.at("shear");
  p.max_shear_deg = j.at("max_shear_deg");
  p.color_jitter = j.at("color_jitter");
  p.brightness = j.at("brightness");
  p.contrast = j.at("contrast");
  p.saturation = j.at("saturation");
  p.blur = j.at("blur");
  p.max_blur_sigma = j.at("max_blur_sigma");
  p.seed = j.at("seed");
  return p;
}

json to_json(const TrainConfig& c) {
  return {{"loss", std::string(to_string(c.loss))},
          {"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"max_steps", c.max_steps},
          {"seed", c.seed},
          {"shuffle", c.shuffle},
          {"augment", c.augment},
          {"augmentation", to_json(c.augmentation)}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.loss = parse_loss_kind(j.at("loss").get<std::string>());
  c.learning_rate = j.at("learning_rate");
  c.weight_decay = j.at("weight_decay");
  c.batch_size = j.at("batch_size");
  c.epochs = j.at("epochs");
  c.max_steps = j.at("max_steps");
  c.seed = j.at("seed");
  c.shuffle = j.at("shuffle");
  c.augment = j.at("augment");
  c.augmentation = policy_from_json(j.at("augmentation"));
  return c;
}

// Metric values can be +inf (PSNR of a perfect reconstruction); JSON has no
// infinity, so those are written as null.
json metric(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double metric(const json& j) { return j.is_null() ? INFINITY : j.get<double>(); }

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream s;
  for (std::size_t i = 0; i < shape.size(); ++i) s << (i ? "x" : "") << shape[i];
  return s.str();
}

std::vector<int> parse_shape(const std::string& text) {
  std::vector<int> shape;
  std::stringstream s(text);
  std::string part;
  while (std::getline(s, part, 'x')) shape.push_back(std::stoi(part));
  return shape;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ck) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "blobs");
  std::ofstream index(dir / "index", std::ios::trunc);
  if (!index) throw Error(ErrorKind::Io, "cannot write checkpoint index in " + dir.string());
  for (const auto& t : ck.tensors) {
    index << t.name << " f32 " << shape_string(t.shape) << '\n';
    std::ofstream blob(dir / "blobs" / (t.name + ".bin"), std::ios::binary | std::ios::trunc);
    if (!blob) throw Error(ErrorKind::Io, "cannot write blob for " + t.name);
    binio::write_array_le<float>(blob, t.values);
  }
  json history = json::array();
  for (const auto& m : ck.history)
    history.push_back({{"epoch", m.epoch},
                       {"loss", metric(m.loss)},
                       {"ssim", metric(m.ssim)},
                       {"psnr", metric(m.psnr)},
                       {"mse", metric(m.mse)}});
  json meta = {{"architecture", to_json(ck.architecture)},
               {"config", to_json(ck.config)},
               {"epoch", ck.epoch},
               {"history", history}};
  std::ofstream out(dir / "meta", std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write checkpoint meta in " + dir.string());
  out << meta.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "meta");
  if (!meta_in) throw Error(ErrorKind::Config, "checkpoint meta missing in " + dir.string());
  Checkpoint ck;
  try {
    const json meta = json::parse(meta_in);
    ck.architecture = architecture_from_json(meta.at("architecture"));
    ck.config = config_from_json(meta.at("config"));
    ck.epoch = meta.at("epoch");
    for (const auto& m : meta.at("history"))
      ck.history.push_back({m.at("epoch").get<int>(), metric(m.at("loss")), metric(m.at("ssim")),
                            metric(m.at("psnr")), metric(m.at("mse"))});
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, "checkpoint meta in " + dir.string() + " is malformed: " + e.what());
  }
  std::ifstream index(dir / "index");
  if (!index) throw Error(ErrorKind::Config, "checkpoint index missing in " + dir.string());
  std::string line;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    NamedTensor t;
    std::string dtype, shape;
    fields >> t.name >> dtype >> shape;
    require(dtype == "f32", ErrorKind::Config, "checkpoint: unsupported dtype " + dtype + " for " + t.name);
    t.shape = parse_shape(shape);
    std::size_t count = 1;
    for (int d : t.shape) count *= static_cast<std::size_t>(d);
    t.values.resize(count);
    std::ifstream blob(dir / "blobs" / (t.name + ".bin"), std::ios::binary);
    if (!blob) throw Error(ErrorKind::Config, "checkpoint: missing blob for " + t.name);
    binio::read_array_le<float>(blob, t.values);
    ck.tensors.push_back(std::move(t));
  }
  ck.architecture.validate();
  return ck;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "epoch,loss,ssim,psnr,mse\n" << std::setprecision(9);
  for (const auto& m : history)
    out << m.epoch << ',' << m.loss << ',' << m.ssim << ',' << m.psnr << ',' << m.mse << '\n';
}

}  // namespace tilecurate::ae
