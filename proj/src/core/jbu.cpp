#include "jbu.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "error.hpp"

namespace m2n2 {
namespace {

// Full-resolution index of the pixel centre of stage pixel i (size n) in a grid of size full.
std::vector<int> centre_lookup(int n, int full) {
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double f = (i + 0.5) * static_cast<double>(full) / n - 0.5;
    out[static_cast<std::size_t>(i)] = std::clamp(static_cast<int>(std::floor(f + 0.5)), 0, full - 1);
  }
  return out;
}

void validate(const GuideImage& guide, const JbuParams& params) {
  if (guide.channels() != 4) fail(ErrorCode::InvalidArgument, "guide must have 4 channels");
  if (!(params.sigma_spatial > 0.0) || !(params.sigma_range > 0.0) || params.radius < 1)
    fail(ErrorCode::InvalidArgument, "JBU sigmas must be > 0 and radius >= 1");
}

}  // namespace

GuideImage make_guide(const Grid<float>& rgb, const Grid<float>& depth, bool with_depth) {
  if (rgb.channels() != 3 || rgb.dims() != depth.dims()) fail(ErrorCode::DimMismatch, "guide inputs disagree");
  GuideImage g(rgb.dims(), 4);
  for (std::size_t i = 0; i < rgb.pixels(); ++i) {
    for (int c = 0; c < 3; ++c) g[i * 4 + c] = std::clamp(rgb[i * 3 + c], 0.0f, 1.0f);
    g[i * 4 + 3] = with_depth ? std::clamp(depth[i], 0.0f, 1.0f) : 0.0f;
  }
  return g;
}

JbuResult jbu_stage(const RealMap& src, Dims target, const GuideImage& guide, const JbuParams& params) {
  validate(guide, params);
  const Dims sd = src.dims();
  const Dims full = guide.dims();
  const auto src_y = centre_lookup(sd.height, full.height);
  const auto src_x = centre_lookup(sd.width, full.width);
  const auto dst_y = centre_lookup(target.height, full.height);
  const auto dst_x = centre_lookup(target.width, full.width);
  const double inv_s = 1.0 / (2.0 * params.sigma_spatial * params.sigma_spatial);
  const double inv_r = 1.0 / (2.0 * params.sigma_range * params.sigma_range);
  const int r = params.radius;
  const double scale_y = static_cast<double>(sd.height) / target.height;
  const double scale_x = static_cast<double>(sd.width) / target.width;

  JbuResult result{RealMap(target), 0};
  for (int qy = 0; qy < target.height; ++qy) {
    const double dy = (qy + 0.5) * scale_y - 0.5;
    const int cy = static_cast<int>(std::floor(dy + 0.5));
    const int y0 = std::max(0, cy - r);
    const int y1 = std::min(sd.height - 1, cy + r);
    for (int qx = 0; qx < target.width; ++qx) {
      const double dx = (qx + 0.5) * scale_x - 0.5;
      const int cx = static_cast<int>(std::floor(dx + 0.5));
      const int x0 = std::max(0, cx - r);
      const int x1 = std::min(sd.width - 1, cx + r);
      const float* gq = &guide(dst_y[static_cast<std::size_t>(qy)], dst_x[static_cast<std::size_t>(qx)], 0);

      double wsum = 0.0;
      double acc = 0.0;
      double spatial_sum = 0.0;
      double spatial_acc = 0.0;
      for (int py = y0; py <= y1; ++py) {
        const double ey = (dy - py) * (dy - py);
        for (int px = x0; px <= x1; ++px) {
          const double ds = ey + (dx - px) * (dx - px);
          const float* gp = &guide(src_y[static_cast<std::size_t>(py)], src_x[static_cast<std::size_t>(px)], 0);
          double dr = 0.0;
          for (int c = 0; c < 4; ++c) {
            const double d = static_cast<double>(gq[c]) - gp[c];
            dr += d * d;
          }
          const double ws = std::exp(-ds * inv_s);
          const double w = ws * std::exp(-dr * inv_r);
          const double v = src(py, px);
          wsum += w;
          acc += w * v;
          spatial_sum += ws;
          spatial_acc += ws * v;
        }
      }
      double value;
      if (wsum > 0.0) {
        value = acc / wsum;
      } else {
        ++result.fallback_pixels;
        value = spatial_sum > 0.0
                    ? spatial_acc / spatial_sum
                    : src(std::clamp(cy, 0, sd.height - 1), std::clamp(cx, 0, sd.width - 1));
      }
      result.map(qy, qx) = value;
    }
  }
  return result;
}

JbuResult jbu_upsample(const RealMap& src, const GuideImage& guide, const JbuParams& params) {
  validate(guide, params);
  const Dims target = guide.dims();
  if (target.height < src.height() || target.width < src.width())
    fail(ErrorCode::DimMismatch, "JBU target is smaller than the source");
  if (!params.progressive) return jbu_stage(src, target, guide, params);

  JbuResult current{src, 0};
  std::size_t fallbacks = 0;
  Dims d = src.dims();
  while (2 * d.height <= target.height && 2 * d.width <= target.width) {
    d = Dims{2 * d.height, 2 * d.width};
    current = jbu_stage(current.map, d, guide, params);
    fallbacks += current.fallback_pixels;
  }
  if (d != target || current.map.dims() != target) {
    current = jbu_stage(current.map, target, guide, params);
    fallbacks += current.fallback_pixels;
  }
  current.fallback_pixels = fallbacks;
  return current;
}

}  // namespace m2n2
