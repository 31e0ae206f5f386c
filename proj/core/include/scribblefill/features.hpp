#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scribblefill/config.hpp"
#include "scribblefill/types.hpp"

namespace scribblefill {

/// Column layout of a FeatureMatrix row: (R, G, B, F_0..F_{p-1}, x, y).
struct FeatureLayout {
  std::size_t plane_columns = 0;

  static constexpr std::size_t kColorOffset = 0;
  static constexpr std::size_t kPlaneOffset = 3;
  std::size_t coord_offset() const { return kPlaneOffset + plane_columns; }
  /// Columns that enter the appearance part of the affinity kernel.
  std::size_t appearance_dims() const { return kPlaneOffset + plane_columns; }
  std::size_t dims() const { return coord_offset() + 2; }
};

/// n x z per-pixel features, row-major.
struct FeatureMatrix {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  FeatureLayout layout;
  std::vector<double> values;

  std::size_t rows() const { return std::size_t{width} * height; }
  std::size_t cols() const { return layout.dims(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * cols(), cols()};
  }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols(), cols()}; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
};

/// Uniform random subset of row indices (ascending), size min(n, max_rows).
/// Identical (n, max_rows, seed) give identical subsets on every platform.
std::vector<std::uint32_t> sample_rows(std::size_t n, std::size_t max_rows, std::uint64_t seed);

/// Resamples every plane to target dims with align-centers bilinear
/// interpolation: source coordinate = (t + 0.5) * src / target - 0.5, clamped.
FeaturePlanes bilinear_upsample(const FeaturePlanes& planes, std::uint32_t target_w,
                                std::uint32_t target_h);

struct PcaResult {
  FeaturePlanes planes;
  // out_dims unit directions, each of length plane_count.
  std::vector<std::vector<double>> directions;
  std::vector<double> explained_variance;
  std::vector<double> mean;
  std::size_t rank = 0;
  // Set when out_dims exceeded the numerical rank; trailing components
  // then have zero variance.
  bool rank_deficient = false;
};

/// Projects per-pixel plane vectors onto the top principal directions.
/// Covariance is estimated from at most `max_sample` pixels chosen with `seed`.
PcaResult pca_reduce(const FeaturePlanes& planes, std::size_t out_dims,
                     std::size_t max_sample = 50000, std::uint64_t seed = 0);

/// Row i = (R/255, G/255, B/255, standardized PCA planes, (x+0.5)/w, (y+0.5)/h).
FeatureMatrix build_feature_matrix(const RasterImage& image,
                                   const FeaturePlanes* planes,
                                   const EnrichConfig& cfg);

}  // namespace scribblefill
