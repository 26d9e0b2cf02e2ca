#include "curation/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "common/checksum.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace tilecurate::curation {

std::map<std::string, std::size_t> DatasetManifest::counts() const {
  std::map<std::string, std::size_t> out;
  for (const auto& e : entries) ++out[e.tissue];
  return out;
}

DatasetManifest assemble_dataset(const CurationState& state, const std::vector<cluster::SampledTile>& samples,
                                 const std::vector<tiles::TileRecord>& records, std::size_t cap,
                                 std::uint64_t seed) {
  require(cap >= 1, ErrorKind::Config, "cap_per_class must be at least 1");
  const auto& ctx = state.context();
  bool any = false;
  for (std::size_t c = 0; c < ctx.cluster_count(); ++c) any = any || state.active_label(static_cast<int>(c));
  require(any, ErrorKind::Config, "no labeled clusters; label at least one cluster before assembling");

  std::unordered_map<std::string, const tiles::TileRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.tile_id, &r);

  std::vector<std::vector<const cluster::SampledTile*>> by_cluster(ctx.cluster_count());
  for (const auto& s : samples) {
    require(s.cluster >= 0 && static_cast<std::size_t>(s.cluster) < by_cluster.size(), ErrorKind::State,
            "sample " + s.tile_id + " references unknown cluster " + std::to_string(s.cluster));
    by_cluster[static_cast<std::size_t>(s.cluster)].push_back(&s);
  }

  DatasetManifest m;
  m.cap = cap;
  m.seed = seed;
  std::set<std::string> used;
  const auto& names = ctx.classes.names();
  for (std::size_t k = 0; k < names.size(); ++k) {
    std::vector<const tiles::TileRecord*> pool;
    for (std::size_t c = 0; c < ctx.cluster_count(); ++c) {
      const auto& label = state.active_label(static_cast<int>(c));
      if (!label || label->tissue != names[k]) continue;
      for (const auto* s : by_cluster[c]) {
        if (used.count(s->tile_id)) continue;
        const auto it = by_id.find(s->tile_id);
        require(it != by_id.end(), ErrorKind::State,
                "sampled tile " + s->tile_id + " is missing from the tile manifest");
        used.insert(s->tile_id);
        pool.push_back(it->second);
      }
    }
    if (pool.empty()) continue;
    std::vector<std::size_t> keep(pool.size());
    std::iota(keep.begin(), keep.end(), std::size_t{0});
    if (pool.size() > cap) {
      Rng rng(mix_seed(seed, k));
      for (std::size_t i = 0; i < cap; ++i) std::swap(keep[i], keep[i + rng.below(keep.size() - i)]);
      keep.resize(cap);
      std::sort(keep.begin(), keep.end());
    } else if (pool.size() < cap) {
      m.shortfall[names[k]] = cap - pool.size();
    }
    for (auto i : keep) m.entries.push_back({names[k], *pool[i]});
  }
  m.checksum = sha256_hex(manifest_listing(m));
  return m;
}

std::string manifest_listing(const DatasetManifest& m) {
  std::ostringstream out;
  out << "#class\tslide_id\ttile_id\tx\ty\twidth\theight\ttissue_fraction\tpath\n";
  char fraction[32];
  for (const auto& e : m.entries) {
    const auto& r = e.tile;
    std::snprintf(fraction, sizeof fraction, "%.6f", r.tissue_fraction);
    out << e.tissue << '\t' << r.slide_id << '\t' << r.tile_id << '\t' << r.x << '\t' << r.y << '\t' << r.width
        << '\t' << r.height << '\t' << fraction << '\t' << r.path << '\n';
  }
  return out.str();
}

void write_dataset_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << manifest_listing(m);
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

std::vector<DatasetEntry> read_dataset_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<DatasetEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> f;
    std::stringstream s(line);
    std::string field;
    while (std::getline(s, field, '\t')) f.push_back(field);
    require(f.size() == 9, ErrorKind::Io, path.string() + ": expected 9 columns");
    try {
      out.push_back({f[0], {f[1], f[2], std::stoi(f[3]), std::stoi(f[4]), std::stoi(f[5]), std::stoi(f[6]),
                            std::stod(f[7]), f[8]}});
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Io, path.string() + ": malformed number");
    }
  }
  return out;
}

void materialize_dataset(const DatasetManifest& m, const std::filesystem::path& project_root,
                         const std::filesystem::path& dataset_dir) {
  namespace fs = std::filesystem;
  for (const auto& e : m.entries) {
    const fs::path dir = dataset_dir / e.tissue;
    fs::create_directories(dir);
    const fs::path src = project_root / e.tile.path;
    require(fs::exists(src), ErrorKind::Io, "tile image missing: " + src.string());
    fs::copy_file(src, dir / src.filename(), fs::copy_options::overwrite_existing);
  }
}

}  // namespace tilecurate::curation
