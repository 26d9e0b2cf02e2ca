#include "pipeline/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "common/error.hpp"

namespace tilecurate::pipeline {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(ErrorKind::Config, "config key '" + key + "': " + why);
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, "expected an integer, got '" + v + "'");
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size() && std::isfinite(out)) return out;
  } catch (const std::logic_error&) {
  }
  bad(key, "expected a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad(key, "expected true or false, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream s(v);
  std::string part;
  while (std::getline(s, part, ',')) out.push_back(static_cast<int>(to_int(key, trim(part))));
  if (out.empty()) bad(key, "expected a comma-separated list");
  return out;
}

int int_at_least(const std::string& key, const std::string& v, long long lo) {
  const long long x = to_int(key, v);
  if (x < lo) bad(key, "must be at least " + std::to_string(lo));
  if (x > INT32_MAX) bad(key, "too large");
  return static_cast<int>(x);
}

double real_in(const std::string& key, const std::string& v, double lo, double hi, bool open_lo = false) {
  const double x = to_real(key, v);
  if (x < lo || x > hi || (open_lo && x == lo))
    bad(key, "must lie in " + std::string(open_lo ? "(" : "[") + trim(std::to_string(lo)) + ", " +
                 trim(std::to_string(hi)) + "]");
  return x;
}

using Setter = std::function<void(ProjectConfig&, const std::string& key, const std::string& value,
                                  const std::filesystem::path& base)>;

struct Key {
  const char* name;
  const char* fallback;
  Setter set;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  if (v.empty()) return {};
  const std::filesystem::path p(v);
  return p.is_absolute() ? p : base / p;
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"slide", "", [](auto& c, auto&, auto& v, auto& b) { c.slide = resolve(b, v); }},
      {"slide_id", "", [](auto& c, auto&, auto& v, auto&) { c.slide_id = v; }},
      {"tile_px", "256", [](auto& c, auto& k, auto& v, auto&) { c.extraction.tile_px = int_at_least(k, v, 1); }},
      {"mask_downsample", "32",
       [](auto& c, auto& k, auto& v, auto&) { c.extraction.mask_downsample = int_at_least(k, v, 1); }},
      {"tissue_threshold", "0.25",
       [](auto& c, auto& k, auto& v, auto&) { c.extraction.tissue_threshold = real_in(k, v, 0, 1); }},
      {"saturation_floor", "0.05",
       [](auto& c, auto& k, auto& v, auto&) { c.extraction.saturation_floor = real_in(k, v, 0, 1); }},
      {"blank_variance_floor", "0.0001",
       [](auto& c, auto& k, auto& v, auto&) { c.extraction.blank_variance_floor = real_in(k, v, 0, 1); }},
      {"pen_hue_min", "75", [](auto& c, auto& k, auto& v, auto&) { c.extraction.pen_hue_min = real_in(k, v, 0, 360); }},
      {"pen_hue_max", "255", [](auto& c, auto& k, auto& v, auto&) { c.extraction.pen_hue_max = real_in(k, v, 0, 360); }},
      {"pen_saturation", "0.7",
       [](auto& c, auto& k, auto& v, auto&) { c.extraction.pen_saturation = real_in(k, v, 0, 1); }},
      {"pen_fraction", "0.5", [](auto& c, auto& k, auto& v, auto&) { c.extraction.pen_fraction = real_in(k, v, 0, 1); }},
      {"ae_channels", "32,64,128,256,512,512",
       [](auto& c, auto& k, auto& v, auto&) { c.ae_channels = to_int_list(k, v); }},
      {"ae_strides", "2,2,2,2,2,1", [](auto& c, auto& k, auto& v, auto&) { c.ae_strides = to_int_list(k, v); }},
      {"loss", "ssim",
       [](auto& c, auto& k, auto& v, auto&) {
         if (v != "ssim" && v != "mse") bad(k, "must be 'ssim' or 'mse'");
         c.training.loss = ae::parse_loss_kind(v);
       }},
      {"learning_rate", "0.0001",
       [](auto& c, auto& k, auto& v, auto&) { c.training.learning_rate = real_in(k, v, 0, 1e3, true); }},
      {"weight_decay", "0.00001",
       [](auto& c, auto& k, auto& v, auto&) { c.training.weight_decay = real_in(k, v, 0, 1e3); }},
      {"batch_size", "32", [](auto& c, auto& k, auto& v, auto&) { c.training.batch_size = int_at_least(k, v, 1); }},
      {"epochs", "10", [](auto& c, auto& k, auto& v, auto&) { c.training.epochs = int_at_least(k, v, 1); }},
      {"max_steps", "0", [](auto& c, auto& k, auto& v, auto&) { c.training.max_steps = int_at_least(k, v, 0); }},
      {"augment", "true", [](auto& c, auto& k, auto& v, auto&) { c.training.augment = to_bool(k, v); }},
      {"shuffle", "true", [](auto& c, auto& k, auto& v, auto&) { c.training.shuffle = to_bool(k, v); }},
      {"embed_batch", "16", [](auto& c, auto& k, auto& v, auto&) { c.embed_batch = int_at_least(k, v, 1); }},
      {"pca_dim", "256", [](auto& c, auto& k, auto& v, auto&) { c.pca_dim = int_at_least(k, v, 1); }},
      {"pca_model", "", [](auto& c, auto&, auto& v, auto& b) { c.pca_model = resolve(b, v); }},
      {"m", "400", [](auto& c, auto& k, auto& v, auto&) { c.clustering.m = int_at_least(k, v, 1); }},
      {"K", "0",
       [](auto& c, auto& k, auto& v, auto&) {
         const int x = int_at_least(k, v, 0);
         c.clustering.k = x == 0 ? std::nullopt : std::optional<int>(x);
       }},
      {"k_rule", "ratio",
       [](auto& c, auto& k, auto& v, auto&) {
         if (v != "ratio" && v != "sqrt") bad(k, "must be 'ratio' or 'sqrt'");
         c.clustering.rule = v == "sqrt" ? cluster::CountRule::Sqrt : cluster::CountRule::Ratio;
       }},
      {"g", "5", [](auto& c, auto& k, auto& v, auto&) { c.clustering.g = int_at_least(k, v, 1); }},
      {"sample_fraction", "0.2",
       [](auto& c, auto& k, auto& v, auto&) { c.clustering.sample_fraction = real_in(k, v, 0, 1, true); }},
      {"max_iter", "300", [](auto& c, auto& k, auto& v, auto&) { c.clustering.max_iter = int_at_least(k, v, 1); }},
      {"restarts", "10", [](auto& c, auto& k, auto& v, auto&) { c.clustering.restarts = int_at_least(k, v, 1); }},
      {"tol", "0.000001", [](auto& c, auto& k, auto& v, auto&) { c.clustering.tol = real_in(k, v, 0, 1); }},
      {"k_nn", "4", [](auto& c, auto& k, auto& v, auto&) { c.clustering.k_nn = int_at_least(k, v, 1); }},
      {"cap_per_class", "70000",
       [](auto& c, auto& k, auto& v, auto&) { c.cap_per_class = static_cast<std::size_t>(int_at_least(k, v, 1)); }},
      {"map_scale", "16", [](auto& c, auto& k, auto& v, auto&) { c.map_scale = int_at_least(k, v, 1); }},
      {"eval_mask", "", [](auto& c, auto&, auto& v, auto& b) { c.eval_mask = resolve(b, v); }},
      {"eval_predictions", "", [](auto& c, auto&, auto& v, auto& b) { c.eval_predictions = resolve(b, v); }},
      {"eval_class", "TUM", [](auto& c, auto&, auto& v, auto&) { c.eval_class = v; }},
      {"eval_coverage", "0.5", [](auto& c, auto& k, auto& v, auto&) { c.eval_coverage = real_in(k, v, 0, 1); }},
      {"host", "127.0.0.1", [](auto& c, auto&, auto& v, auto&) { c.host = v; }},
      {"port", "8700",
       [](auto& c, auto& k, auto& v, auto&) {
         c.port = int_at_least(k, v, 0);
         if (c.port > 65535) bad(k, "must be at most 65535");
       }},
      {"seed", "0",
       [](auto& c, auto& k, auto& v, auto&) { c.set_seed(static_cast<std::uint64_t>(int_at_least(k, v, 0))); }},
      {"workers", "1", [](auto& c, auto& k, auto& v, auto&) { c.set_workers(int_at_least(k, v, 1)); }},
  };
  return table;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Config, "config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else if (const auto hash = value.find(" #"); hash != std::string::npos) {
      value = trim(value.substr(0, hash));
    }
    if (key.empty()) throw Error(ErrorKind::Config, "config line " + std::to_string(lineno) + ": empty key");
    if (out.count(key)) bad(key, "set twice");
    out[key] = value;
  }
  return out;
}

ProjectConfig config_from_text(const std::string& text, const std::filesystem::path& base_dir) {
  auto given = parse_key_values(text);
  for (const auto& [k, v] : given) {
    bool known = false;
    for (const auto& key : keys()) known = known || k == key.name;
    if (!known) bad(k, "unknown key");
  }
  ProjectConfig c;
  for (const auto& key : keys()) {
    const auto it = given.find(key.name);
    const std::string value = it == given.end() ? key.fallback : it->second;
    key.set(c, key.name, value, base_dir);
    c.canonical[key.name] = value;
  }
  if (c.slide_id.empty() && !c.slide.empty()) c.slide_id = c.slide.stem().string();
  c.canonical["slide_id"] = c.slide_id;
  if (!c.slide.empty()) c.canonical["slide"] = c.slide.string();
  c.validate();
  return c;
}

ProjectConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot read config file " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return config_from_text(text.str(), std::filesystem::absolute(path).parent_path());
}

std::string default_config_text() {
  std::string out;
  for (const auto& key : keys()) out += std::string(key.name) + " = " + key.fallback + "\n";
  return out;
}

ae::AeArchitecture ProjectConfig::architecture() const {
  ae::AeArchitecture a;
  a.tile_px = extraction.tile_px;
  a.channels = ae_channels;
  a.strides = ae_strides;
  return a;
}

void ProjectConfig::set_seed(std::uint64_t s) {
  seed = s;
  training.seed = s;
  training.augmentation.seed = s;
  clustering.seed = s;
  canonical["seed"] = std::to_string(s);
}

void ProjectConfig::set_workers(int w) {
  require(w >= 1, ErrorKind::Config, "config key 'workers': must be at least 1");
  workers = w;
  clustering.workers = w;
  canonical["workers"] = std::to_string(w);
}

void ProjectConfig::validate() const {
  if (ae_channels.size() != ae_strides.size()) bad("ae_strides", "must have as many entries as ae_channels");
  if (extraction.pen_hue_min > extraction.pen_hue_max) bad("pen_hue_min", "must not exceed pen_hue_max");
  try {
    architecture().validate();
  } catch (const Error& e) {
    bad("ae_strides", e.what());
  }
  if (pca_dim > ae_channels.back()) bad("pca_dim", "exceeds the pooled dimension " + std::to_string(ae_channels.back()));
  if (!slide_id.empty() && slide_id.find_first_of("\t\n\r/\\:") != std::string::npos)
    bad("slide_id", "must not contain tabs, newlines, colons or path separators");
}

}  // namespace tilecurate::pipeline
