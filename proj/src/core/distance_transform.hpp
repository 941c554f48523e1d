#pragma once

#include <cstdint>

#include "grid.hpp"

namespace m2n2 {

// Exact squared Euclidean distance from every pixel to the nearest pixel with
// features != 0 (Felzenszwalb-Huttenlocher lower envelope). Infinity when
// there is no feature pixel.
RealMap squared_distance_transform(const Grid<std::uint8_t>& features);

}  // namespace m2n2
