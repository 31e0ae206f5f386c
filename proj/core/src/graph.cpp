#include "scribblefill/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scribblefill/error.hpp"

namespace scribblefill {

double kernel_weight(std::span<const double> xi, std::span<const double> xj, double dij,
                     double h1, double h2, std::span<const double> gweights) {
  if (!(h1 > 0) || !(h2 > 0) || !std::isfinite(h1) || !std::isfinite(h2)) {
    throw ValidationError("kernel_weight: bandwidths must be positive and finite");
  }
  if (xi.size() != xj.size() || (!gweights.empty() && gweights.size() != xi.size())) {
    throw ValidationError("kernel_weight: feature / weight length mismatch");
  }
  if (!std::isfinite(dij)) throw ValidationError("kernel_weight: non-finite pixel distance");
  double feature = 0.0;
  for (std::size_t d = 0; d < xi.size(); ++d) {
    const double diff = xi[d] - xj[d];
    const double g = gweights.empty() ? 1.0 : gweights[d];
    feature += g * diff * diff;
  }
  if (!std::isfinite(feature)) throw ValidationError("kernel_weight: non-finite feature input");
  return std::exp(-feature / (h1 * h1) - dij * dij / (h2 * h2));
}

namespace {

struct Entry {
  std::uint32_t col;
  double value;
};

}  // namespace

AffinityGraph build_affinity(const FeatureMatrix& features, const NeighborFn& neighbors,
                             const EnrichConfig& cfg) {
  const std::size_t n = features.rows();
  if (n == 0) throw ValidationError("build_affinity: empty image");
  if (cfg.K < 1 || static_cast<std::size_t>(cfg.K) > n - 1) {
    throw ValidationError("build_affinity: K = " + std::to_string(cfg.K) +
                          " outside [1, " + std::to_string(n - 1) + "]");
  }
  if (features.values.size() != n * features.cols()) {
    throw ValidationError("build_affinity: feature matrix is inconsistent with its dimensions");
  }
  const std::size_t app = features.layout.appearance_dims();
  std::vector<double> gweights = cfg.gweights;
  if (gweights.empty()) gweights.assign(app, 1.0);
  if (gweights.size() != app) {
    throw ValidationError("build_affinity: gweights has " + std::to_string(gweights.size()) +
                          " entries, expected " + std::to_string(app));
  }
  const std::uint32_t w = features.width;
  const std::uint32_t h = features.height;

  // Directed k-NN edges with positive weight.
  std::vector<std::uint32_t> src;
  std::vector<std::uint32_t> dst;
  std::vector<double> wt;
  src.reserve(n * static_cast<std::size_t>(cfg.K));
  dst.reserve(src.capacity());
  wt.reserve(src.capacity());
  std::vector<std::uint32_t> nbrs;
  for (std::uint32_t i = 0; i < n; ++i) {
    neighbors(i, nbrs);
    const auto xi = features.row(i).first(app);
    const double xi_px = i % w;
    const double yi_px = i / w;
    for (std::uint32_t j : nbrs) {
      if (j >= n) throw ValidationError("build_affinity: neighbor index out of range");
      if (j == i) continue;
      const double dx = xi_px - static_cast<double>(j % w);
      const double dy = yi_px - static_cast<double>(j / w);
      const double wij = kernel_weight(xi, features.row(j).first(app), std::sqrt(dx * dx + dy * dy),
                                       cfg.h1, cfg.h2, gweights);
      if (wij > 0.0) {
        src.push_back(i);
        dst.push_back(j);
        wt.push_back(wij);
      }
    }
  }

  // Bucket both directions of every edge, plus the grid floor, by row.
  std::vector<std::size_t> count(n + 1, 0);
  for (std::size_t e = 0; e < src.size(); ++e) {
    ++count[src[e] + 1];
    ++count[dst[e] + 1];
  }
  auto for_grid = [&](auto&& fn) {
    for (std::uint32_t y = 0; y < h; ++y) {
      for (std::uint32_t x = 0; x < w; ++x) {
        const std::uint32_t i = y * w + x;
        if (x + 1 < w) fn(i, i + 1);
        if (y + 1 < h) fn(i, i + w);
      }
    }
  };
  for_grid([&](std::uint32_t a, std::uint32_t b) {
    ++count[a + 1];
    ++count[b + 1];
  });
  for (std::size_t i = 0; i < n; ++i) count[i + 1] += count[i];
  std::vector<Entry> buf(count[n]);
  std::vector<std::size_t> fill(count.begin(), count.end() - 1);
  for (std::size_t e = 0; e < src.size(); ++e) {
    buf[fill[src[e]]++] = {dst[e], wt[e]};
    buf[fill[dst[e]]++] = {src[e], wt[e]};
  }
  // Grid edges carry the kernel weight at unit pixel distance, never below
  // the floor.
  const double floor = cfg.grid_edge_weight;
  for_grid([&](std::uint32_t a, std::uint32_t b) {
    const double value = std::max(
        floor, kernel_weight(features.row(a).first(app), features.row(b).first(app), 1.0, cfg.h1,
                             cfg.h2, gweights));
    buf[fill[a]++] = {b, value};
    buf[fill[b]++] = {a, value};
  });

  AffinityGraph g;
  g.width = w;
  g.height = h;
  g.weights.n = n;
  g.weights.row_ptr.assign(n + 1, 0);
  g.weights.cols.reserve(buf.size() / 2);
  g.weights.vals.reserve(buf.size() / 2);
  g.degrees.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto first = buf.begin() + static_cast<std::ptrdiff_t>(count[i]);
    auto last = buf.begin() + static_cast<std::ptrdiff_t>(count[i + 1]);
    std::sort(first, last, [](const Entry& a, const Entry& b) { return a.col < b.col; });
    double degree = 0.0;
    for (auto it = first; it != last;) {
      const std::uint32_t col = it->col;
      double value = it->value;
      for (++it; it != last && it->col == col; ++it) value = std::max(value, it->value);
      g.weights.cols.push_back(col);
      g.weights.vals.push_back(value);
      degree += value;
    }
    g.weights.row_ptr[i + 1] = g.weights.cols.size();
    g.degrees[i] = degree;
  }
  return g;
}

LaplacianMatrix laplacian(const AffinityGraph& graph) {
  const CsrMatrix& w = graph.weights;
  const std::size_t n = w.n;
  if (graph.degrees.size() != n) throw ValidationError("laplacian: degree vector size mismatch");
  LaplacianMatrix lap;
  lap.kind = LaplacianKind::kPlain;
  CsrMatrix& l = lap.matrix;
  l.n = n;
  l.row_ptr.assign(n + 1, 0);
  l.cols.reserve(w.nnz() + n);
  l.vals.reserve(w.nnz() + n);
  for (std::size_t i = 0; i < n; ++i) {
    bool diag_done = false;
    for (std::size_t p = w.row_ptr[i]; p < w.row_ptr[i + 1]; ++p) {
      const std::uint32_t j = w.cols[p];
      if (j == i) throw ValidationError("laplacian: affinity graph stores a self-loop");
      if (!diag_done && j > i) {
        l.cols.push_back(static_cast<std::uint32_t>(i));
        l.vals.push_back(graph.degrees[i]);
        diag_done = true;
      }
      l.cols.push_back(j);
      l.vals.push_back(-w.vals[p]);
    }
    if (!diag_done) {
      l.cols.push_back(static_cast<std::uint32_t>(i));
      l.vals.push_back(graph.degrees[i]);
    }
    l.row_ptr[i + 1] = l.cols.size();
  }
  return lap;
}

LaplacianMatrix clustering_laplacian(const AffinityGraph& graph, std::size_t max_nnz) {
  const CsrMatrix l = laplacian(graph).matrix;
  const std::size_t n = l.n;

  // Symbolic pass: row patterns of L * L (L is symmetric, so L^T L = L L).
  std::vector<std::size_t> marker(n, SIZE_MAX);
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = l.row_ptr[i]; p < l.row_ptr[i + 1]; ++p) {
      const std::uint32_t k = l.cols[p];
      for (std::size_t q = l.row_ptr[k]; q < l.row_ptr[k + 1]; ++q) {
        if (marker[l.cols[q]] != i) {
          marker[l.cols[q]] = i;
          ++total;
        }
      }
    }
    if (total > max_nnz) {
      throw ValidationError("clustering_laplacian: product exceeds the " +
                            std::to_string(max_nnz) + "-entry memory cap");
    }
  }

  LaplacianMatrix out;
  out.kind = LaplacianKind::kClustering;
  CsrMatrix& c = out.matrix;
  c.n = n;
  c.row_ptr.assign(n + 1, 0);
  c.cols.reserve(total);
  c.vals.reserve(total);
  std::vector<double> acc(n, 0.0);
  std::vector<std::uint32_t> pattern;
  std::fill(marker.begin(), marker.end(), SIZE_MAX);
  for (std::size_t i = 0; i < n; ++i) {
    pattern.clear();
    for (std::size_t p = l.row_ptr[i]; p < l.row_ptr[i + 1]; ++p) {
      const std::uint32_t k = l.cols[p];
      const double lik = l.vals[p];
      for (std::size_t q = l.row_ptr[k]; q < l.row_ptr[k + 1]; ++q) {
        const std::uint32_t j = l.cols[q];
        if (marker[j] != i) {
          marker[j] = i;
          acc[j] = 0.0;
          pattern.push_back(j);
        }
        acc[j] += lik * l.vals[q];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    for (std::uint32_t j : pattern) {
      c.cols.push_back(j);
      c.vals.push_back(acc[j]);
    }
    c.row_ptr[i + 1] = c.cols.size();
  }
  return out;
}

}  // namespace scribblefill
