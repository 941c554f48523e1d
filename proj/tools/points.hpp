#pragma once

#include <charconv>
#include <optional>
#include <string_view>
#include <vector>

namespace m2n2::cli {

struct Click {
  int x = 0;
  int y = 0;
  int label = 0;
};

// "x,y,label;x,y,label" with integer coordinates and label 0 or 1. A single
// trailing ';' is tolerated; anything else malformed yields nullopt.
inline std::optional<std::vector<Click>> parse_points(std::string_view text) {
  std::vector<Click> out;
  if (!text.empty() && text.back() == ';') text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  while (true) {
    const auto end = text.find(';');
    std::string_view item = text.substr(0, end);
    int v[3];
    for (int k = 0; k < 3; ++k) {
      const auto comma = k < 2 ? item.find(',') : std::string_view::npos;
      if (k < 2 && comma == std::string_view::npos) return std::nullopt;
      const std::string_view field = item.substr(0, comma);
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v[k]);
      if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) return std::nullopt;
      if (k < 2) item.remove_prefix(comma + 1);
    }
    if (v[2] != 0 && v[2] != 1) return std::nullopt;
    out.push_back({v[0], v[1], v[2]});
    if (end == std::string_view::npos) break;
    text.remove_prefix(end + 1);
  }
  return out;
}

}  // namespace m2n2::cli
