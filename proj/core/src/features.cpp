#include "scribblefill/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "scribblefill/error.hpp"

namespace scribblefill {

std::vector<std::uint32_t> sample_rows(std::size_t n, std::size_t max_rows, std::uint64_t seed) {
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  if (n <= max_rows) return idx;
  // Partial Fisher-Yates; modulo draws keep the sequence independent of the
  // standard library's distribution implementation.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < max_rows; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(max_rows);
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

struct Tap {
  std::uint32_t lo;
  std::uint32_t hi;
  double frac;
};

std::vector<Tap> bilinear_taps(std::uint32_t src, std::uint32_t dst) {
  std::vector<Tap> taps(dst);
  const double ratio = static_cast<double>(src) / dst;
  for (std::uint32_t t = 0; t < dst; ++t) {
    double s = (t + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const auto lo = static_cast<std::uint32_t>(std::floor(s));
    const std::uint32_t hi = std::min(lo + 1, src - 1);
    taps[t] = {lo, hi, s - lo};
  }
  return taps;
}

}  // namespace

FeaturePlanes bilinear_upsample(const FeaturePlanes& planes, std::uint32_t target_w,
                                std::uint32_t target_h) {
  if (planes.planes.empty()) throw ValidationError("bilinear_upsample: empty plane list");
  if (target_w == 0 || target_h == 0) {
    throw ValidationError("bilinear_upsample: target dimensions must be positive");
  }
  planes.validate();
  if (planes.width == target_w && planes.height == target_h) return planes;

  const auto xs = bilinear_taps(planes.width, target_w);
  const auto ys = bilinear_taps(planes.height, target_h);

  FeaturePlanes out;
  out.width = target_w;
  out.height = target_h;
  out.planes.reserve(planes.planes.size());
  for (const auto& src : planes.planes) {
    std::vector<double> dst(std::size_t{target_w} * target_h);
    for (std::uint32_t ty = 0; ty < target_h; ++ty) {
      const Tap& y = ys[ty];
      const double* r0 = src.data() + std::size_t{y.lo} * planes.width;
      const double* r1 = src.data() + std::size_t{y.hi} * planes.width;
      for (std::uint32_t tx = 0; tx < target_w; ++tx) {
        const Tap& x = xs[tx];
        const double top = r0[x.lo] + x.frac * (r0[x.hi] - r0[x.lo]);
        const double bot = r1[x.lo] + x.frac * (r1[x.hi] - r1[x.lo]);
        dst[std::size_t{ty} * target_w + tx] = top + y.frac * (bot - top);
      }
    }
    out.planes.push_back(std::move(dst));
  }
  return out;
}

PcaResult pca_reduce(const FeaturePlanes& planes, std::size_t out_dims, std::size_t max_sample,
                     std::uint64_t seed) {
  if (out_dims == 0) throw ValidationError("pca_reduce: out_dims must be positive");
  planes.validate();
  const std::size_t p = planes.plane_count();
  if (out_dims > p) {
    throw ValidationError("pca_reduce: out_dims " + std::to_string(out_dims) +
                          " exceeds plane count " + std::to_string(p));
  }
  const std::size_t n = planes.pixel_count();
  const auto rows = sample_rows(n, std::max<std::size_t>(max_sample, 1), seed);
  const std::size_t m = rows.size();

  PcaResult result;
  result.mean.assign(p, 0.0);
  for (std::size_t c = 0; c < p; ++c) {
    double s = 0.0;
    for (auto r : rows) s += planes.planes[c][r];
    result.mean[c] = s / static_cast<double>(m);
  }

  Eigen::MatrixXd centered(m, p);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < p; ++c) {
      centered(i, c) = planes.planes[c][rows[i]] - result.mean[c];
    }
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const Eigen::MatrixXd& v = svd.matrixV();

  const double top = sv.size() > 0 ? sv(0) : 0.0;
  const double cutoff = top * 1e-10 * static_cast<double>(std::max(m, p));
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) ++rank;
  }
  result.rank = rank;
  result.rank_deficient = out_dims > rank;

  const double denom = m > 1 ? static_cast<double>(m - 1) : 1.0;
  for (std::size_t d = 0; d < out_dims; ++d) {
    std::vector<double> dir(p);
    for (std::size_t c = 0; c < p; ++c) dir[c] = v(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d));
    // Fix the sign: largest-magnitude entry positive.
    std::size_t arg = 0;
    for (std::size_t c = 1; c < p; ++c) {
      if (std::abs(dir[c]) > std::abs(dir[arg])) arg = c;
    }
    if (dir[arg] < 0) {
      for (auto& x : dir) x = -x;
    }
    result.directions.push_back(std::move(dir));
    const double s = d < static_cast<std::size_t>(sv.size()) && d < rank ? sv(static_cast<Eigen::Index>(d)) : 0.0;
    result.explained_variance.push_back(s * s / denom);
  }

  result.planes.width = planes.width;
  result.planes.height = planes.height;
  result.planes.planes.assign(out_dims, std::vector<double>(n, 0.0));
  const std::size_t live = std::min(out_dims, rank);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < live; ++d) {
      const auto& dir = result.directions[d];
      double acc = 0.0;
      for (std::size_t c = 0; c < p; ++c) acc += (planes.planes[c][i] - result.mean[c]) * dir[c];
      result.planes.planes[d][i] = acc;
    }
  }
  return result;
}

FeatureMatrix build_feature_matrix(const RasterImage& image, const FeaturePlanes* planes,
                                   const EnrichConfig& cfg) {
  image.validate();
  const std::uint32_t w = image.width;
  const std::uint32_t h = image.height;
  const std::size_t n = image.pixel_count();

  std::vector<std::vector<double>> reduced;
  if (planes != nullptr) {
    planes->validate();
    if (cfg.pca_dims < 1 || static_cast<std::size_t>(cfg.pca_dims) > planes->plane_count()) {
      throw ValidationError("pca_dims " + std::to_string(cfg.pca_dims) + " exceeds plane count " +
                            std::to_string(planes->plane_count()));
    }
    FeaturePlanes scaled = bilinear_upsample(*planes, w, h);
    if (scaled.width != w || scaled.height != h) {
      throw ValidationError("feature planes do not match image dimensions after upsampling");
    }
    reduced = pca_reduce(scaled, static_cast<std::size_t>(cfg.pca_dims), 50000, cfg.seed)
                  .planes.planes;
    for (auto& col : reduced) {
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (double v : col) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(n));
      if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
        std::fill(col.begin(), col.end(), 0.0);
      } else {
        for (double& v : col) v = (v - mean) / sd;
      }
    }
  }

  FeatureMatrix x;
  x.width = w;
  x.height = h;
  x.layout.plane_columns = reduced.size();
  const std::size_t z = x.cols();
  const std::size_t coord = x.layout.coord_offset();
  x.values.resize(n * z);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = x.values.data() + i * z;
    const auto rgb = image.rgb(i);
    row[0] = rgb[0] / 255.0;
    row[1] = rgb[1] / 255.0;
    row[2] = rgb[2] / 255.0;
    for (std::size_t d = 0; d < reduced.size(); ++d) row[3 + d] = reduced[d][i];
    row[coord] = (static_cast<double>(i % w) + 0.5) / w;
    row[coord + 1] = (static_cast<double>(i / w) + 0.5) / h;
  }
  return x;
}

}  // namespace scribblefill
