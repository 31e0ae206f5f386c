#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scribblefill/config.hpp"
#include "scribblefill/labeling.hpp"
#include "scribblefill/types.hpp"

namespace fixture {

/// Left half red, right half blue. Ground truth: 0 left, 1 right.
struct TwoColor {
  scribblefill::RasterImage image;
  scribblefill::LabelMap truth;
  // One horizontal 3-pixel scribble inside each half.
  std::vector<scribblefill::ClassId> mask;
};
TwoColor two_color(std::uint32_t width, std::uint32_t height);

/// Piecewise-smooth image: a few colored blobs over a gradient, mild noise.
/// `regions` receives the blob index (0 = background) of every pixel.
scribblefill::RasterImage blob_image(std::uint32_t width, std::uint32_t height, int blobs,
                                     std::uint64_t seed, std::vector<std::uint8_t>* regions = nullptr);

/// Random strokes: every class gets at least one marked pixel.
std::vector<scribblefill::ClassId> random_scribbles(std::uint32_t width, std::uint32_t height,
                                                    int classes, std::uint64_t seed);

/// Small random instance prepared with default settings: image, graph and
/// an annotation with `classes` classes.
struct Instance {
  scribblefill::PreparedImage prepared;
  scribblefill::CoarseAnnotation annotation;
};
Instance random_instance(std::uint64_t seed, std::size_t max_pixels, int min_classes,
                         int max_classes, const scribblefill::EnrichConfig& cfg = {});

/// Creates a fresh directory under the system temp dir; removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

void write_text(const std::string& path, const std::string& text);

}  // namespace fixture
