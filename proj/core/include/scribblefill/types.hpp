#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace scribblefill {

using ClassId = std::uint8_t;

/// Label value for pixels withheld by noise control (and unmarked mask pixels).
inline constexpr ClassId kIgnored = 255;

/// 8-bit RGB raster, row-major, three bytes per pixel.
struct RasterImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;

  RasterImage() = default;
  RasterImage(std::uint32_t w, std::uint32_t h);
  RasterImage(std::uint32_t w, std::uint32_t h, std::vector<std::uint8_t> rgb);

  std::size_t pixel_count() const { return std::size_t{width} * height; }
  std::span<const std::uint8_t, 3> rgb(std::size_t i) const {
    return std::span<const std::uint8_t, 3>(pixels.data() + 3 * i, 3);
  }
  void set_rgb(std::size_t i, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  /// Throws ValidationError when dimensions or buffer size are inconsistent.
  void validate() const;
};

/// Real-valued planes (e.g. CNN activations), possibly at a lower resolution
/// than the image they belong to.
struct FeaturePlanes {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::vector<double>> planes;

  std::size_t plane_count() const { return planes.size(); }
  std::size_t pixel_count() const { return std::size_t{width} * height; }
  void validate() const;
};

/// Dense per-pixel labels; kIgnored marks withheld pixels.
struct LabelMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<ClassId> labels;

  LabelMap() = default;
  LabelMap(std::uint32_t w, std::uint32_t h, ClassId fill = kIgnored)
      : width(w), height(h), labels(std::size_t{w} * h, fill) {}

  std::size_t pixel_count() const { return std::size_t{width} * height; }
  bool operator==(const LabelMap&) const = default;
};

/// c disjoint binary markup maps plus their union.
///
/// Classes keep the order they were declared in; a declared class may carry
/// no markups, but the union must mark at least one pixel.
class CoarseAnnotation {
 public:
  /// Builds from an indexed mask (kIgnored = unmarked). Every marked value must
  /// appear in `classes`. Throws ValidationError("no markups") if nothing is marked.
  static CoarseAnnotation from_index_mask(std::uint32_t width, std::uint32_t height,
                                          std::span<const ClassId> mask,
                                          std::span<const ClassId> classes);

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::size_t pixel_count() const { return std::size_t{width_} * height_; }
  std::size_t class_count() const { return classes_.size(); }
  const std::vector<ClassId>& classes() const { return classes_; }

  /// s_k as 0/1 bytes.
  const std::vector<std::uint8_t>& map(std::size_t k) const { return maps_[k]; }
  /// s = sum_k s_k as 0/1 bytes.
  const std::vector<std::uint8_t>& union_map() const { return union_; }
  std::size_t marked_count(std::size_t k) const;
  std::size_t marked_count() const;

  /// Indexed form (kIgnored where unmarked).
  std::vector<ClassId> to_index_mask() const;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<ClassId> classes_;
  std::vector<std::vector<std::uint8_t>> maps_;
  std::vector<std::uint8_t> union_;
};

/// Per-class confidence maps alpha_k, one double per pixel.
struct ConfidenceField {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<ClassId> classes;
  std::vector<std::vector<double>> alphas;

  std::size_t pixel_count() const { return std::size_t{width} * height; }
  std::size_t class_count() const { return classes.size(); }
  /// Index of `id` in `classes`, or -1.
  int class_index(ClassId id) const;
};

}  // namespace scribblefill
