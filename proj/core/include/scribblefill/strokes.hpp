#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "scribblefill/types.hpp"

namespace scribblefill {

struct Stroke {
  ClassId class_id = 0;
  std::vector<std::pair<int, int>> points;  // (x, y) polyline vertices
  int radius = 0;
};

/// Rasterizes strokes in order onto an indexed mask (kIgnored background):
/// Bresenham segments between consecutive vertices, dilated by a round brush
/// (dx^2 + dy^2 <= r^2). Later strokes overwrite earlier ones.
std::vector<ClassId> rasterize_strokes(std::uint32_t width, std::uint32_t height,
                                       const std::vector<Stroke>& strokes);

}  // namespace scribblefill
