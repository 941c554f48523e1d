#pragma once

#include <cstddef>

#include "grid.hpp"

namespace m2n2 {

// H×W×4 guide (R, G, B, inverse depth), all channels in [0,1].
using GuideImage = Grid<float>;

GuideImage make_guide(const Grid<float>& rgb, const Grid<float>& depth, bool with_depth = true);

struct JbuParams {
  double sigma_spatial = 1.0;  // in source (low-res) pixels
  double sigma_range = 0.1;    // guide-distance units
  int radius = 2;
  bool progressive = true;
};

struct JbuResult {
  RealMap map;
  // Pixels whose joint weights all underflowed and fell back to spatial-only weights.
  std::size_t fallback_pixels = 0;
};

JbuResult jbu_upsample(const RealMap& src, const GuideImage& guide, const JbuParams& params);

// One joint-bilateral stage from src to `target` resolution. Guide values for
// both grids are sampled from the full-resolution guide at pixel centres.
JbuResult jbu_stage(const RealMap& src, Dims target, const GuideImage& guide, const JbuParams& params);

}  // namespace m2n2
