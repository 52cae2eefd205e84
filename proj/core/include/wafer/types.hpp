#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace wafer {

// Street segment classes. Anomalies are reported but merged into "good" for
// all accuracy figures.
enum class StreetClass : int { kGood = 0, kAnomaly = 1, kBad = 2 };

inline constexpr int kStreetClassCount = 3;

// Binary label used by the classifiers after merging anomalies into good.
inline int merged_label(int street_class) { return street_class == 2 ? 1 : 0; }

// Chip sides in image coordinates (row 0 at the top): N is the street above
// the chip, S the one below.
enum class Side : int { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

inline constexpr std::array<Side, 4> kAllSides{Side::kNorth, Side::kEast, Side::kSouth,
                                               Side::kWest};

enum class Orientation : int { kHorizontal = 0, kVertical = 1 };

inline Orientation street_orientation(Side s) {
  return (s == Side::kNorth || s == Side::kSouth) ? Orientation::kHorizontal
                                                  : Orientation::kVertical;
}

inline std::string_view side_name(Side s) {
  constexpr std::array<std::string_view, 4> names{"N", "E", "S", "W"};
  return names[static_cast<int>(s)];
}

inline std::optional<Side> parse_side(std::string_view s) {
  if (s == "N") return Side::kNorth;
  if (s == "E") return Side::kEast;
  if (s == "S") return Side::kSouth;
  if (s == "W") return Side::kWest;
  return std::nullopt;
}

enum class Polarity : int { kDarkStreet = 0, kLightStreet = 1 };

inline std::string_view polarity_name(Polarity p) {
  return p == Polarity::kDarkStreet ? "dark-street" : "light-street";
}

}  // namespace wafer
