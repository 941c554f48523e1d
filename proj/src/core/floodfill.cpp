#include "floodfill.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "error.hpp"

namespace m2n2 {

double resolve_depth_weight(const RealMap& markov_up, const FillParams& params) {
  if (params.depth_weight) {
    if (!(*params.depth_weight >= 0.0)) fail(ErrorCode::InvalidArgument, "depth weight must be >= 0");
    return *params.depth_weight;
  }
  const auto values = markov_up.values();
  if (values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

RealMap geodesic_fill(const RealMap& markov_up, const Grid<float>& depth, Pixel seed, const FillParams& params) {
  const Dims dims = markov_up.dims();
  if (depth.dims() != dims || depth.channels() != 1) fail(ErrorCode::DimMismatch, "depth and Markov map dims differ");
  if (!dims.contains(seed.y, seed.x)) fail(ErrorCode::OutOfBounds, "flood fill seed outside the map");
  if (params.connectivity != 4 && params.connectivity != 8)
    fail(ErrorCode::InvalidArgument, "connectivity must be 4 or 8");
  const double wd = resolve_depth_weight(markov_up, params);

  static constexpr int kOffsets[8][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  const int neighbours = params.connectivity;

  RealMap dist(dims, 1, std::numeric_limits<double>::infinity());
  std::vector<char> done(dims.size(), 0);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  const std::size_t start = dist.index(seed.y, seed.x);
  dist[start] = 0.0;
  queue.emplace(0.0, start);

  while (!queue.empty()) {
    const auto [cost, idx] = queue.top();
    queue.pop();
    if (done[idx]) continue;
    done[idx] = 1;
    const int y = static_cast<int>(idx / static_cast<std::size_t>(dims.width));
    const int x = static_cast<int>(idx % static_cast<std::size_t>(dims.width));
    const double m = markov_up[idx];
    const double d = depth[idx];
    for (int k = 0; k < neighbours; ++k) {
      const int ny = y + kOffsets[k][0];
      const int nx = x + kOffsets[k][1];
      if (!dims.contains(ny, nx)) continue;
      const std::size_t nidx = dist.index(ny, nx);
      if (done[nidx]) continue;
      const double dm = markov_up[nidx] - m;
      const double dd = wd * (static_cast<double>(depth[nidx]) - d);
      const double candidate = cost + std::sqrt(dm * dm + dd * dd);
      if (candidate < dist[nidx]) {
        dist[nidx] = candidate;
        queue.emplace(candidate, nidx);
      }
    }
  }
  return dist;
}

}  // namespace m2n2
