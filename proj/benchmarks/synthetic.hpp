#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "scribblefill/types.hpp"

namespace bench {

// Smooth background with a few flat discs and mild pixel noise.
inline scribblefill::RasterImage discs(std::uint32_t w, std::uint32_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Disc {
    double cx, cy, r;
    std::uint8_t c[3];
  };
  std::vector<Disc> ds(6);
  for (auto& d : ds) {
    d.cx = u(rng) * w;
    d.cy = u(rng) * h;
    d.r = (0.1 + 0.2 * u(rng)) * std::min(w, h);
    for (auto& c : d.c) c = static_cast<std::uint8_t>(255 * u(rng));
  }
  std::normal_distribution<double> noise(0.0, 4.0);
  scribblefill::RasterImage img(w, h);
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      double c[3] = {80.0 + 100.0 * x / w, 60.0 + 120.0 * y / h, 140.0};
      for (const auto& d : ds) {
        if ((x - d.cx) * (x - d.cx) + (y - d.cy) * (y - d.cy) < d.r * d.r) {
          for (int k = 0; k < 3; ++k) c[k] = d.c[k];
        }
      }
      std::uint8_t v[3];
      for (int k = 0; k < 3; ++k) v[k] = static_cast<std::uint8_t>(std::clamp(c[k] + noise(rng), 0.0, 255.0));
      img.set_rgb(std::size_t{y} * w + x, v[0], v[1], v[2]);
    }
  }
  return img;
}

// One horizontal stroke per class, evenly spaced down the image.
inline scribblefill::CoarseAnnotation strokes(std::uint32_t w, std::uint32_t h, int classes) {
  std::vector<scribblefill::ClassId> mask(std::size_t{w} * h, scribblefill::kIgnored);
  std::vector<scribblefill::ClassId> ids;
  for (int c = 0; c < classes; ++c) {
    const std::uint32_t y = (2 * c + 1) * h / (2 * classes);
    for (std::uint32_t x = w / 5; x < 4 * w / 5; ++x) mask[std::size_t{y} * w + x] = static_cast<scribblefill::ClassId>(c);
    ids.push_back(static_cast<scribblefill::ClassId>(c));
  }
  return scribblefill::CoarseAnnotation::from_index_mask(w, h, mask, ids);
}

}  // namespace bench
