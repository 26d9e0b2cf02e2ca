#include "curation/classes.hpp"

#include "common/error.hpp"

namespace tilecurate::curation {

ClassRegistry ClassRegistry::standard() {
  ClassRegistry r;
  r.add("ADI", {255, 230, 153});
  r.add("LYM", {51, 102, 204});
  r.add("MUS", {204, 51, 51});
  r.add("FCT", {255, 153, 204});
  r.add("MUC", {102, 204, 204});
  r.add("NCS", {153, 102, 51});
  r.add("BLD", {153, 0, 51});
  r.add("TUM", {102, 51, 153});
  r.add("NOR", {51, 153, 51});
  return r;
}

void ClassRegistry::add(std::string name, Color color) {
  require(!name.empty(), ErrorKind::Config, "class name must not be empty");
  require(name.find_first_of(" \t\n\r/\\,") == std::string::npos, ErrorKind::Config,
          "class name '" + name + "' contains whitespace, a comma or a path separator");
  require(!contains(name), ErrorKind::Config, "class '" + name + "' registered twice");
  require(color != kUnregisteredColor, ErrorKind::Config, "black is reserved for unregistered classes");
  names_.push_back(std::move(name));
  colors_.push_back(color);
}

std::optional<std::size_t> ClassRegistry::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

Color ClassRegistry::color_of(std::string_view name) const {
  const auto i = index_of(name);
  return i ? colors_[*i] : kUnregisteredColor;
}

std::string ClassRegistry::listing() const {
  std::string out;
  for (std::size_t i = 0; i < names_.size(); ++i) out += (i ? ", " : "") + names_[i];
  return out;
}

}  // namespace tilecurate::curation
