#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "scribblefill/config.hpp"
#include "scribblefill/features.hpp"
#include "scribblefill/graph.hpp"
#include "scribblefill/hashing.hpp"
#include "scribblefill/propagate.hpp"
#include "scribblefill/types.hpp"

namespace scribblefill {

/// argmax_k alpha_k per pixel when the max reaches `threshold`, else kIgnored.
/// Ties go to the lowest class id.
LabelMap noise_control(const ConfidenceField& field, double threshold);

/// Everything that depends on the image alone: features, hash, graph, Laplacian.
/// Built once and reused across annotations (e.g. by interactive sessions).
struct PreparedImage {
  std::uint32_t native_width = 0;
  std::uint32_t native_height = 0;
  // Solve grid (equals native dims when scale == 1).
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  FeatureMatrix features;
  HashModel hash;
  ItqReport itq;
  AffinityGraph graph;
  LaplacianMatrix laplacian;
  // Effective neighbor count after clamping to the pixel count.
  int effective_k = 0;
  double features_seconds = 0.0;
  double hashing_seconds = 0.0;
  double graph_seconds = 0.0;
};

/// Runs feature extraction, ITQ fit + encode, windowed Hamming k-NN and graph
/// assembly. `pretrained` skips the ITQ fit (its dims must match).
PreparedImage prepare_image(const RasterImage& image, const FeaturePlanes* planes,
                            const EnrichConfig& cfg, const HashModel* pretrained = nullptr);

struct EnrichResult {
  ConfidenceField field;  // native resolution, clamped to [0, 1]
  LabelMap labels;        // noise control at cfg.threshold
  SolverReport report;
};

/// Per-class solve on a prepared image followed by noise control.
EnrichResult solve_annotation(const PreparedImage& prepared, const CoarseAnnotation& ann,
                              const EnrichConfig& cfg);

/// Full pipeline: prepare_image + solve_annotation.
EnrichResult enrich(const RasterImage& image, const CoarseAnnotation& ann,
                    const FeaturePlanes* planes, const EnrichConfig& cfg);

/// Solve-grid dims for a scale in (0, 1]: max(1, round(dim * scale)).
std::uint32_t scaled_dim(std::uint32_t dim, double scale);
/// Box-filter (area) downsample.
RasterImage downscale_image(const RasterImage& image, std::uint32_t target_w,
                            std::uint32_t target_h);
/// Nearest-neighbor mask decimation. Throws ValidationError listing every class
/// whose markups all vanish.
CoarseAnnotation downscale_annotation(const CoarseAnnotation& ann, std::uint32_t target_w,
                                      std::uint32_t target_h);
/// Bilinear (align-centers) resampling of every confidence plane.
ConfidenceField upscale_field(const ConfidenceField& field, std::uint32_t target_w,
                              std::uint32_t target_h);

}  // namespace scribblefill
