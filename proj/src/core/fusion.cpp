#include "fusion.hpp"

#include <limits>

#include "error.hpp"

namespace m2n2 {

FusionBase build_fusion_base(std::span<const ScaledMap> maps, Dims dims) {
  const std::size_t n = dims.size();
  FusionBase base{dims, std::vector<double>(n, std::numeric_limits<double>::infinity()), std::vector<int>(n, -1),
                  std::vector<std::uint8_t>(n, 0), std::vector<std::uint8_t>(n, 0), 0};
  for (const auto& m : maps) {
    if (m.markov == nullptr || m.markov->dims() != dims) fail(ErrorCode::DimMismatch, "fusion maps differ in dims");
    if (!(m.lambda > 0.0)) fail(ErrorCode::InvalidArgument, "scale divisor must be > 0");
    for (std::size_t q = 0; q < n; ++q) {
      const double s = m.scaled(q);
      if (base.beaten_by(q, s, m.index)) {
        base.value[q] = s;
        base.index[q] = m.index;
        base.label[q] = static_cast<std::uint8_t>(m.label);
      }
    }
  }
  for (std::size_t q = 0; q < n; ++q) {
    base.foreground[q] = (base.index[q] >= 0 && base.value[q] <= 1.0 && base.label[q] == 1) ? 1 : 0;
    base.area += base.foreground[q];
  }
  return base;
}

Segmentation to_segmentation(const FusionBase& base) {
  return Segmentation(Grid<std::uint8_t>(base.dims, 1, base.foreground));
}

Segmentation fuse(std::span<const ScaledMap> maps) {
  if (maps.empty()) fail(ErrorCode::EmptyPromptSet, "fusion needs at least one prompt");
  return to_segmentation(build_fusion_base(maps, maps.front().markov->dims()));
}

}  // namespace m2n2
