#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "grid.hpp"

namespace m2n2 {

// 8-bit PNG. Any colour type is expanded to `channels` (1 = gray, 3 = RGB).
Grid<std::uint8_t> read_png(const std::filesystem::path& path, int channels);
void write_png(const std::filesystem::path& path, const Grid<std::uint8_t>& image);
std::string encode_png(const Grid<std::uint8_t>& image);

}  // namespace m2n2
