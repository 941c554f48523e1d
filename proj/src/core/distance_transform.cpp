#include "distance_transform.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace m2n2 {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of f (n samples) into d.
void transform_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    const auto intersect = [&](int p) {
      return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
    };
    double s = intersect(v[k]);
    // z[0] is -inf, so the envelope never shrinks below one parabola.
    while (s <= z[k]) {
      --k;
      s = intersect(v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double diff = q - v[j];
    d[q] = diff * diff + f[v[j]];
  }
}

}  // namespace

RealMap squared_distance_transform(const Grid<std::uint8_t>& features) {
  const Dims dims = features.dims();
  RealMap out(dims, 1, kInf);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (features[i]) out[i] = 0.0;

  const int longest = std::max(dims.height, dims.width);
  std::vector<double> f, d;
  std::vector<int> v(static_cast<std::size_t>(longest) + 1);
  std::vector<double> z(static_cast<std::size_t>(longest) + 2);

  f.resize(static_cast<std::size_t>(dims.height));
  d.resize(f.size());
  for (int x = 0; x < dims.width; ++x) {
    for (int y = 0; y < dims.height; ++y) f[y] = out(y, x);
    transform_1d(f, d, v, z);
    for (int y = 0; y < dims.height; ++y) out(y, x) = d[y];
  }
  f.resize(static_cast<std::size_t>(dims.width));
  d.resize(f.size());
  for (int y = 0; y < dims.height; ++y) {
    for (int x = 0; x < dims.width; ++x) f[x] = out(y, x);
    transform_1d(f, d, v, z);
    for (int x = 0; x < dims.width; ++x) out(y, x) = d[x];
  }
  return out;
}

}  // namespace m2n2
