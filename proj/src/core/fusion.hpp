#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "grid.hpp"
#include "mask.hpp"

namespace m2n2 {

// S = markov / lambda, claimed for `label` by truncated nearest neighbour.
// `index` is the prompt order used for tie-breaks (lower wins).
struct ScaledMap {
  const RealMap* markov = nullptr;
  double lambda = 1.0;
  int label = 1;
  int index = 0;

  double scaled(std::size_t q) const { return (*markov)[q] / lambda; }
};

// Per-pixel nearest scaled map over a set of prompts.
struct FusionBase {
  Dims dims;
  std::vector<double> value;  // min_i S_i[q], +inf when the set is empty
  std::vector<int> index;     // prompt index of the minimum, -1 when empty
  std::vector<std::uint8_t> label;
  std::vector<std::uint8_t> foreground;
  std::size_t area = 0;

  // True if a map with value s and prompt index i beats the current minimum at q.
  bool beaten_by(std::size_t q, double s, int i) const { return s < value[q] || (s == value[q] && i < index[q]); }
};

FusionBase build_fusion_base(std::span<const ScaledMap> maps, Dims dims);

// Truncated nearest neighbour: pixel takes the label of argmin_i S_i (lowest
// index on ties) when that minimum is <= 1, background otherwise.
Segmentation fuse(std::span<const ScaledMap> maps);
Segmentation to_segmentation(const FusionBase& base);

}  // namespace m2n2
