#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <unistd.h>

#include "scribblefill/strokes.hpp"

namespace fixture {

using scribblefill::ClassId;
using scribblefill::RasterImage;

TwoColor two_color(std::uint32_t width, std::uint32_t height) {
  TwoColor f;
  f.image = RasterImage(width, height);
  f.truth = scribblefill::LabelMap(width, height, 0);
  f.mask.assign(std::size_t{width} * height, scribblefill::kIgnored);
  const std::uint32_t half = width / 2;
  for (std::uint32_t y = 0; y < height; ++y) {
    for (std::uint32_t x = 0; x < width; ++x) {
      const std::size_t i = std::size_t{y} * width + x;
      if (x < half) {
        f.image.set_rgb(i, 200, 40, 40);
      } else {
        f.image.set_rgb(i, 40, 40, 200);
        f.truth.labels[i] = 1;
      }
    }
  }
  const std::uint32_t y = height / 2;
  for (std::uint32_t dx = 0; dx < 3; ++dx) {
    f.mask[std::size_t{y} * width + half / 2 - 1 + dx] = 0;
    f.mask[std::size_t{y} * width + half + (width - half) / 2 - 1 + dx] = 1;
  }
  return f;
}

RasterImage blob_image(std::uint32_t width, std::uint32_t height, int blobs, std::uint64_t seed,
                       std::vector<std::uint8_t>* regions) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 4.0);
  struct Blob {
    double cx, cy, r;
    double rgb[3];
  };
  std::vector<Blob> list;
  for (int b = 0; b < blobs; ++b) {
    Blob blob{uni(rng) * width, uni(rng) * height,
              (0.15 + 0.2 * uni(rng)) * std::min(width, height), {}};
    for (double& c : blob.rgb) c = 255.0 * uni(rng);
    list.push_back(blob);
  }
  RasterImage img(width, height);
  if (regions) regions->assign(img.pixel_count(), 0);
  for (std::uint32_t y = 0; y < height; ++y) {
    for (std::uint32_t x = 0; x < width; ++x) {
      const std::size_t i = std::size_t{y} * width + x;
      double rgb[3] = {60.0 + 80.0 * x / width, 90.0, 60.0 + 80.0 * y / height};
      for (std::size_t b = 0; b < list.size(); ++b) {
        const double dx = x - list[b].cx, dy = y - list[b].cy;
        if (dx * dx + dy * dy <= list[b].r * list[b].r) {
          std::copy(list[b].rgb, list[b].rgb + 3, rgb);
          if (regions) (*regions)[i] = static_cast<std::uint8_t>(b + 1);
        }
      }
      std::uint8_t px[3];
      for (int c = 0; c < 3; ++c) px[c] = static_cast<std::uint8_t>(std::clamp(rgb[c] + noise(rng), 0.0, 255.0));
      img.set_rgb(i, px[0], px[1], px[2]);
    }
  }
  return img;
}

std::vector<ClassId> random_scribbles(std::uint32_t width, std::uint32_t height, int classes,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<scribblefill::Stroke> strokes;
  for (int k = 0; k < classes; ++k) {
    scribblefill::Stroke s;
    s.class_id = static_cast<ClassId>(k);
    s.radius = static_cast<int>(rng() % 2);
    const int points = 1 + static_cast<int>(rng() % 3);
    for (int p = 0; p < points; ++p) {
      s.points.emplace_back(static_cast<int>(rng() % width), static_cast<int>(rng() % height));
    }
    strokes.push_back(s);
  }
  auto mask = scribblefill::rasterize_strokes(width, height, strokes);
  // Later strokes may cover an earlier class entirely; pin one pixel each.
  for (int k = 0; k < classes; ++k) {
    if (std::find(mask.begin(), mask.end(), static_cast<ClassId>(k)) == mask.end()) {
      std::size_t i = rng() % mask.size();
      while (mask[i] != scribblefill::kIgnored &&
             std::count(mask.begin(), mask.end(), mask[i]) == 1) {
        i = (i + 1) % mask.size();
      }
      mask[i] = static_cast<ClassId>(k);
    }
  }
  return mask;
}

Instance random_instance(std::uint64_t seed, std::size_t max_pixels, int min_classes,
                         int max_classes, const scribblefill::EnrichConfig& cfg) {
  std::mt19937_64 rng(seed);
  const auto side = static_cast<std::uint32_t>(std::sqrt(static_cast<double>(max_pixels)));
  const std::uint32_t w = 2 + static_cast<std::uint32_t>(rng() % (side - 1));
  const std::uint32_t h = std::max<std::uint32_t>(
      1, static_cast<std::uint32_t>(std::min<std::size_t>(max_pixels / w, side + rng() % side)));
  const int classes = min_classes + static_cast<int>(rng() % (max_classes - min_classes + 1));
  const RasterImage img = blob_image(w, h, 1 + static_cast<int>(rng() % 4), rng());
  const auto mask = random_scribbles(w, h, classes, rng());
  std::vector<ClassId> ids(static_cast<std::size_t>(classes));
  for (int k = 0; k < classes; ++k) ids[static_cast<std::size_t>(k)] = static_cast<ClassId>(k);
  return {scribblefill::prepare_image(img, nullptr, cfg),
          scribblefill::CoarseAnnotation::from_index_mask(w, h, mask, ids)};
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("scribblefill-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

}  // namespace fixture
