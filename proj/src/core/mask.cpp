#include "mask.hpp"

#include <algorithm>

#include "error.hpp"

namespace m2n2 {

Segmentation::Segmentation(Grid<std::uint8_t> mask) : mask_(std::move(mask)) {
  for (auto& v : mask_.storage()) {
    v = v != 0 ? 1 : 0;
    area_ += v;
  }
}

void Segmentation::set(std::size_t i, bool fg) {
  const std::uint8_t v = fg ? 1 : 0;
  if (mask_[i] == v) return;
  mask_[i] = v;
  if (fg)
    ++area_;
  else
    --area_;
}

std::vector<std::uint32_t> rle_encode(const Segmentation& seg) {
  std::vector<std::uint32_t> runs;
  const auto values = seg.grid().values();
  std::uint8_t current = 0;
  std::uint32_t length = 0;
  for (auto v : values) {
    if (v != current) {
      runs.push_back(length);
      current = v;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

Segmentation rle_decode(const std::vector<std::uint32_t>& runs, Dims dims) {
  Grid<std::uint8_t> mask(dims, 1, 0);
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (auto run : runs) {
    if (pos + run > mask.size()) fail(ErrorCode::DimMismatch, "RLE runs exceed mask size");
    std::fill_n(mask.storage().begin() + static_cast<std::ptrdiff_t>(pos), run, value);
    pos += run;
    value ^= 1;
  }
  if (pos != mask.size()) fail(ErrorCode::DimMismatch, "RLE runs do not cover the mask");
  return Segmentation(std::move(mask));
}

Segmentation resample_nearest(const Segmentation& seg, Dims to) {
  const Dims from = seg.dims();
  if (from == to) return seg;
  Grid<std::uint8_t> out(to, 1, 0);
  for (int y = 0; y < to.height; ++y) {
    const int sy = std::min(from.height - 1, static_cast<int>((y + 0.5) * from.height / to.height));
    for (int x = 0; x < to.width; ++x) {
      const int sx = std::min(from.width - 1, static_cast<int>((x + 0.5) * from.width / to.width));
      out(y, x) = seg.at(sy, sx) ? 1 : 0;
    }
  }
  return Segmentation(std::move(out));
}

}  // namespace m2n2
