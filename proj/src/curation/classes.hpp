#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tilecurate::curation {

struct Color {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Color&) const = default;
};

inline constexpr Color kUnregisteredColor{0, 0, 0};

/// Tissue-class vocabulary with one display colour per class. Names that are
/// not registered render in kUnregisteredColor.
class ClassRegistry {
 public:
  /// ADI, LYM, MUS, FCT, MUC, NCS, BLD, TUM, NOR.
  static ClassRegistry standard();

  void add(std::string name, Color color);
  bool contains(std::string_view name) const { return index_of(name).has_value(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  Color color_of(std::string_view name) const;
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  /// "ADI, LYM, ..." for error messages.
  std::string listing() const;

 private:
  std::vector<std::string> names_;
  std::vector<Color> colors_;
};

}  // namespace tilecurate::curation
