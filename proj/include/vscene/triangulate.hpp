#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "vscene/geometry.hpp"

namespace vscene {

using TriangleIndices = std::array<std::size_t, 3>;

/// Ear-clipping triangulation of a simple polygon. Returned triangles index into `polygon`
/// and are wound counter-clockwise. Ears with area below `min_area` are dropped.
/// Throws TriangulationFailure (tagged with `object_index`) when the polygon is not simple.
std::vector<TriangleIndices> ear_clip(const Contour& polygon, std::size_t object_index = 0,
                                      double min_area = 1e-12);

}  // namespace vscene
