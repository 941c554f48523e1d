#pragma once

#include <cstdint>
#include <vector>

#include "grid.hpp"

namespace m2n2 {

// Full-resolution binary mask; area() is the foreground pixel count.
class Segmentation {
 public:
  Segmentation() = default;
  explicit Segmentation(Dims dims) : mask_(dims, 1, 0) {}
  explicit Segmentation(Grid<std::uint8_t> mask);

  Dims dims() const { return mask_.dims(); }
  std::size_t area() const { return area_; }
  bool empty() const { return area_ == 0; }

  bool at(int y, int x) const { return mask_(y, x) != 0; }
  bool at(std::size_t i) const { return mask_[i] != 0; }
  void set(std::size_t i, bool fg);
  void set(int y, int x, bool fg) { set(mask_.index(y, x), fg); }

  const Grid<std::uint8_t>& grid() const { return mask_; }

  friend bool operator==(const Segmentation& a, const Segmentation& b) { return a.mask_ == b.mask_; }

 private:
  Grid<std::uint8_t> mask_;
  std::size_t area_ = 0;
};

// Row-major run lengths alternating background/foreground, first run background
// (possibly zero-length). Runs sum to H*W.
std::vector<std::uint32_t> rle_encode(const Segmentation& seg);
Segmentation rle_decode(const std::vector<std::uint32_t>& runs, Dims dims);

// Nearest-neighbour re-projection of a mask onto another resolution.
Segmentation resample_nearest(const Segmentation& seg, Dims to);

}  // namespace m2n2
