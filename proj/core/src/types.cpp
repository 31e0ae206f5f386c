#include "scribblefill/types.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

#include "scribblefill/error.hpp"

namespace scribblefill {

RasterImage::RasterImage(std::uint32_t w, std::uint32_t h)
    : width(w), height(h), pixels(std::size_t{w} * h * 3, 0) {}

RasterImage::RasterImage(std::uint32_t w, std::uint32_t h, std::vector<std::uint8_t> rgb)
    : width(w), height(h), pixels(std::move(rgb)) {
  validate();
}

void RasterImage::set_rgb(std::size_t i, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  pixels[3 * i] = r;
  pixels[3 * i + 1] = g;
  pixels[3 * i + 2] = b;
}

void RasterImage::validate() const {
  if (width == 0 || height == 0) {
    throw ValidationError("image must be at least 1x1");
  }
  if (pixels.size() != pixel_count() * 3) {
    throw ValidationError("image buffer holds " + std::to_string(pixels.size()) +
                          " bytes, expected " + std::to_string(pixel_count() * 3));
  }
}

void FeaturePlanes::validate() const {
  if (width == 0 || height == 0) {
    throw ValidationError("feature planes must be at least 1x1");
  }
  if (planes.empty()) {
    throw ValidationError("feature plane list is empty");
  }
  for (const auto& p : planes) {
    if (p.size() != pixel_count()) {
      throw ValidationError("feature planes disagree on dimensions");
    }
    for (double v : p) {
      if (!std::isfinite(v)) throw ValidationError("feature plane holds a non-finite value");
    }
  }
}

CoarseAnnotation CoarseAnnotation::from_index_mask(std::uint32_t width, std::uint32_t height,
                                                   std::span<const ClassId> mask,
                                                   std::span<const ClassId> classes) {
  if (width == 0 || height == 0) throw ValidationError("annotation must be at least 1x1");
  const std::size_t n = std::size_t{width} * height;
  if (mask.size() != n) throw ValidationError("mask size does not match its dimensions");

  CoarseAnnotation ann;
  ann.width_ = width;
  ann.height_ = height;
  ann.classes_.assign(classes.begin(), classes.end());

  int lookup[256];
  std::fill(std::begin(lookup), std::end(lookup), -1);
  for (std::size_t k = 0; k < ann.classes_.size(); ++k) {
    const ClassId id = ann.classes_[k];
    if (id == kIgnored) throw ValidationError("class id 255 is reserved for unmarked pixels");
    if (lookup[id] >= 0) throw ValidationError("duplicate class id " + std::to_string(id));
    lookup[id] = static_cast<int>(k);
  }

  ann.maps_.assign(ann.classes_.size(), std::vector<std::uint8_t>(n, 0));
  ann.union_.assign(n, 0);
  std::size_t marked = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const ClassId v = mask[i];
    if (v == kIgnored) continue;
    if (lookup[v] < 0) {
      throw ValidationError("mask uses class id " + std::to_string(v) +
                            " which is not in the class table");
    }
    ann.maps_[static_cast<std::size_t>(lookup[v])][i] = 1;
    ann.union_[i] = 1;
    ++marked;
  }
  if (marked == 0) throw ValidationError("no markups");
  return ann;
}

std::size_t CoarseAnnotation::marked_count(std::size_t k) const {
  std::size_t c = 0;
  for (auto v : maps_[k]) c += v;
  return c;
}

std::size_t CoarseAnnotation::marked_count() const {
  std::size_t c = 0;
  for (auto v : union_) c += v;
  return c;
}

std::vector<ClassId> CoarseAnnotation::to_index_mask() const {
  std::vector<ClassId> mask(pixel_count(), kIgnored);
  for (std::size_t k = 0; k < maps_.size(); ++k) {
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (maps_[k][i]) mask[i] = classes_[k];
    }
  }
  return mask;
}

int ConfidenceField::class_index(ClassId id) const {
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (classes[k] == id) return static_cast<int>(k);
  }
  return -1;
}

}  // namespace scribblefill
