#include "scribblefill/strokes.hpp"

#include <cstdlib>

#include "scribblefill/error.hpp"

namespace scribblefill {

namespace {

void stamp(std::vector<ClassId>& mask, std::uint32_t w, std::uint32_t h, int cx, int cy, int r,
           ClassId id) {
  for (int dy = -r; dy <= r; ++dy) {
    const int y = cy + dy;
    if (y < 0 || y >= static_cast<int>(h)) continue;
    for (int dx = -r; dx <= r; ++dx) {
      const int x = cx + dx;
      if (x < 0 || x >= static_cast<int>(w)) continue;
      if (dx * dx + dy * dy <= r * r) mask[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = id;
    }
  }
}

template <typename Fn>
void bresenham(int x0, int y0, int x1, int y1, Fn&& plot) {
  const int dx = std::abs(x1 - x0);
  const int sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0);
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    plot(x0, y0);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

std::vector<ClassId> rasterize_strokes(std::uint32_t width, std::uint32_t height,
                                       const std::vector<Stroke>& strokes) {
  if (width == 0 || height == 0) throw ValidationError("rasterize_strokes: empty canvas");
  std::vector<ClassId> mask(std::size_t{width} * height, kIgnored);
  for (const auto& s : strokes) {
    if (s.class_id == kIgnored) throw ValidationError("stroke class 255 is reserved");
    if (s.radius < 0 || s.radius > 1024) throw ValidationError("stroke radius must be in [0, 1024]");
    if (s.points.empty()) throw ValidationError("stroke has no points");
    for (const auto& [x, y] : s.points) {
      if (std::abs(x) > (1 << 20) || std::abs(y) > (1 << 20)) {
        throw ValidationError("stroke coordinate out of range");
      }
    }
    auto plot = [&](int x, int y) { stamp(mask, width, height, x, y, s.radius, s.class_id); };
    if (s.points.size() == 1) {
      plot(s.points[0].first, s.points[0].second);
      continue;
    }
    for (std::size_t p = 1; p < s.points.size(); ++p) {
      bresenham(s.points[p - 1].first, s.points[p - 1].second, s.points[p].first,
                s.points[p].second, plot);
    }
  }
  return mask;
}

}  // namespace scribblefill
