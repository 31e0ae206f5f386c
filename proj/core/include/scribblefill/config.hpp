#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scribblefill {

enum class LaplacianKind { kPlain, kClustering };

/// Every tunable of the enrichment pipeline. Field names match the JSON keys
/// accepted by load_config().
struct EnrichConfig {
  // Affinity kernel bandwidths: feature distance (standardized units) and
  // pixel distance (pixels).
  double h1 = 0.25;
  double h2 = 30.0;
  // Nearest neighbors per pixel, in [1, 64].
  int K = 10;
  // Markup confidence; also the data-term penalty.
  double lambda = 100.0;
  // Hash code length in bits, in [8, 256].
  int tau = 64;
  int itq_iters = 50;
  int itq_sample = 50000;
  std::uint64_t seed = 0;
  // Principal components kept from external feature planes.
  int pca_dims = 3;
  // Chebyshev radius (pixels) of the neighbor search window.
  int window_radius = 60;
  double grid_edge_weight = 1e-5;
  // Noise-control cutoff on max_k alpha_k.
  double threshold = 0.7;
  // Solve-grid scale in (0, 1].
  double scale = 1.0;
  double tol = 1e-12;
  int maxiter = 2000;
  // Per-dimension weights of the feature norm (color + reduced planes).
  // Empty means uniform 1.0.
  std::vector<double> gweights;
  LaplacianKind laplacian = LaplacianKind::kPlain;

  /// Throws ValidationError naming the first offending field.
  void validate() const;
};

/// Parses a JSON object. Unknown keys are rejected; missing keys keep defaults.
EnrichConfig parse_config(const std::string& json_text);
EnrichConfig load_config(const std::string& path);
/// Serializes every field (round-trips through parse_config).
std::string config_to_json(const EnrichConfig& cfg);

}  // namespace scribblefill
