#pragma once

#include <optional>

#include "grid.hpp"

namespace m2n2 {

struct FillParams {
  // Scale applied to depth differences. Unset: max(M_up) - min(M_up).
  std::optional<double> depth_weight;
  int connectivity = 4;
};

struct Pixel {
  int y = 0;
  int x = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Seed-rooted geodesic transform: cheapest path cost where one step (a,b)
// costs sqrt((M[a]-M[b])^2 + (w_d*(D[a]-D[b]))^2).
RealMap geodesic_fill(const RealMap& markov_up, const Grid<float>& depth, Pixel seed, const FillParams& params);

double resolve_depth_weight(const RealMap& markov_up, const FillParams& params);

}  // namespace m2n2
