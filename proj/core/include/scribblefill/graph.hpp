#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "scribblefill/config.hpp"
#include "scribblefill/features.hpp"
#include "scribblefill/sparse.hpp"

namespace scribblefill {

/// Sparse symmetric affinity W (no self-loops) and its degrees D_i = sum_j w_ij.
struct AffinityGraph {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  CsrMatrix weights;
  std::vector<double> degrees;

  std::size_t size() const { return weights.n; }
  std::size_t nnz() const { return weights.nnz(); }
};

struct LaplacianMatrix {
  CsrMatrix matrix;
  LaplacianKind kind = LaplacianKind::kPlain;

  std::size_t size() const { return matrix.n; }
};

/// exp(-sum_d g_d (xi_d - xj_d)^2 / h1^2 - dij^2 / h2^2) over the appearance
/// entries of two feature rows (coordinate columns are not passed in).
double kernel_weight(std::span<const double> xi, std::span<const double> xj, double dij,
                     double h1, double h2, std::span<const double> gweights);

/// Supplies the k-NN list of a pixel. Called once per pixel, in order.
using NeighborFn = std::function<void(std::uint32_t query, std::vector<std::uint32_t>& out)>;

/// Directed k-NN edges weighted by kernel_weight, symmetrized by elementwise
/// max, plus 4-neighborhood grid edges weighted by the same kernel and floored at
/// cfg.grid_edge_weight.
AffinityGraph build_affinity(const FeatureMatrix& features, const NeighborFn& neighbors,
                             const EnrichConfig& cfg);

/// L = D - W.
LaplacianMatrix laplacian(const AffinityGraph& graph);

/// L_c = (D - W)^T (D - W). Throws ValidationError if the product would store
/// more than `max_nnz` entries.
LaplacianMatrix clustering_laplacian(const AffinityGraph& graph,
                                     std::size_t max_nnz = std::size_t{1} << 27);

}  // namespace scribblefill
