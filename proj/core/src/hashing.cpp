#include "scribblefill/hashing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "scribblefill/error.hpp"

namespace scribblefill {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;

ConstMap as_eigen(const Matrix& m) {
  return ConstMap(m.data.data(), static_cast<Eigen::Index>(m.rows),
                  static_cast<Eigen::Index>(m.cols));
}

Matrix from_eigen(const RowMatrix& e) {
  Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  std::copy(e.data(), e.data() + e.size(), m.data.begin());
  return m;
}

// Portable standard normal draws (Box-Muller over 53-bit uniforms).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : rng_(seed) {}
  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

double orthogonality_error(const RowMatrix& r) {
  const RowMatrix g = r.transpose() * r;
  return (g - RowMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

// sgn with sgn(0) = +1.
RowMatrix sign_of(const RowMatrix& m) {
  return m.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix random_rotation(std::size_t n, std::uint64_t seed) {
  NormalStream normal(seed);
  RowMatrix g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = normal.next();
  }
  Eigen::HouseholderQR<RowMatrix> qr(g);
  RowMatrix q = qr.householderQ();
  const RowMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return from_eigen(q);
}

double quantization_loss(const Matrix& projected, const Matrix& rotation) {
  const auto v = as_eigen(projected);
  const auto r = as_eigen(rotation);
  const RowMatrix vr = v * r.topRows(v.cols());
  return (sign_of(vr) - vr).squaredNorm();
}

namespace {

struct ItqPass {
  double loss = 0.0;
  RowMatrix btv;  // tau x tau, columns beyond the projection width are zero
};

// One streaming pass over the projected rows: quantization loss of VR and
// B^T V with B = sgn(VR). Avoids materializing the n x tau products.
ItqPass itq_pass(const ConstMap& v, const RowMatrix& rot) {
  const Eigen::Index rows = v.rows();
  const Eigen::Index r = v.cols();
  const Eigen::Index tau = rot.cols();
  ItqPass pass;
  RowMatrix acc = RowMatrix::Zero(r, tau);  // (B^T V)^T
  std::vector<double> p(static_cast<std::size_t>(tau));
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double* vi = v.data() + i * r;
    std::fill(p.begin(), p.end(), 0.0);
    for (Eigen::Index d = 0; d < r; ++d) {
      const double c = vi[d];
      const double* rrow = rot.data() + d * tau;
      for (Eigen::Index b = 0; b < tau; ++b) p[static_cast<std::size_t>(b)] += c * rrow[b];
    }
    for (Eigen::Index b = 0; b < tau; ++b) {
      const double e = std::abs(p[static_cast<std::size_t>(b)]) - 1.0;
      pass.loss += e * e;
      p[static_cast<std::size_t>(b)] = p[static_cast<std::size_t>(b)] >= 0.0 ? 1.0 : -1.0;
    }
    for (Eigen::Index d = 0; d < r; ++d) {
      const double c = vi[d];
      double* arow = acc.data() + d * tau;
      for (Eigen::Index b = 0; b < tau; ++b) arow[b] += c * p[static_cast<std::size_t>(b)];
    }
  }
  pass.btv = RowMatrix::Zero(tau, tau);
  pass.btv.leftCols(r) = acc.transpose();
  return pass;
}

}  // namespace

Matrix refine_rotation(const Matrix& projected, Matrix rotation, int iters, ItqReport& report) {
  if (rotation.rows != rotation.cols || projected.cols > rotation.rows) {
    throw ValidationError("refine_rotation: rotation must be square and cover the projection");
  }
  const auto v = as_eigen(projected);
  RowMatrix rot = as_eigen(rotation);

  ItqPass pass = itq_pass(v, rot);
  report.losses.push_back(pass.loss);
  report.orthogonality_errors.push_back(orthogonality_error(rot));

  for (int it = 0; it < iters; ++it) {
    // Procrustes: maximize tr(R B^T V) => B^T V = U S W^T, R = W U^T.
    Eigen::BDCSVD<RowMatrix> svd(pass.btv, Eigen::ComputeFullU | Eigen::ComputeFullV);
    rot = svd.matrixV() * svd.matrixU().transpose();
    pass = itq_pass(v, rot);
    report.losses.push_back(pass.loss);
    report.orthogonality_errors.push_back(orthogonality_error(rot));
  }
  return from_eigen(rot);
}

ItqFit fit_itq_rows(const FeatureMatrix& features, std::span<const std::uint32_t> rows,
                    std::size_t bits, int iters, std::uint64_t seed, bool allow_padding) {
  if (bits == 0 || bits > 256) throw ValidationError("fit_itq: bits must be in [1, 256]");
  if (iters < 0) throw ValidationError("fit_itq: iters must be non-negative");
  if (rows.empty()) throw ValidationError("fit_itq: empty sample");
  const std::size_t z = features.cols();
  const std::size_t m = rows.size();

  ItqFit fit;
  HashModel& model = fit.model;
  model.dims = z;
  model.bits = bits;
  model.mean.assign(z, 0.0);
  for (auto r : rows) {
    if (r >= features.rows()) throw ValidationError("fit_itq: sample row out of range");
    const auto x = features.row(r);
    for (std::size_t d = 0; d < z; ++d) model.mean[d] += x[d];
  }
  for (auto& v : model.mean) v /= static_cast<double>(m);

  RowMatrix centered(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(z));
  for (std::size_t i = 0; i < m; ++i) {
    const auto x = features.row(rows[i]);
    for (std::size_t d = 0; d < z; ++d) centered(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = x[d] - model.mean[d];
  }

  Eigen::BDCSVD<RowMatrix> svd(centered, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  const double cutoff = top * 1e-10 * static_cast<double>(std::max(m, z));
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) ++rank;
  }
  const std::size_t live = std::min(rank, bits);
  fit.report.rank = rank;
  fit.report.padded = live < bits;
  if (fit.report.padded && !allow_padding) {
    throw ValidationError("fit_itq: " + std::to_string(bits) + " bits exceed sample rank " +
                          std::to_string(rank));
  }

  RowMatrix directions(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(live));
  for (std::size_t d = 0; d < live; ++d) {
    Eigen::VectorXd col = svd.matrixV().col(static_cast<Eigen::Index>(d));
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0) col = -col;
    directions.col(static_cast<Eigen::Index>(d)) = col;
  }

  const RowMatrix projected = centered * directions;
  Matrix rotation = refine_rotation(from_eigen(projected), random_rotation(bits, seed), iters,
                                    fit.report);
  const RowMatrix rot = as_eigen(rotation);
  const RowMatrix proj = directions * rot.topRows(static_cast<Eigen::Index>(live));
  model.projection.assign(proj.data(), proj.data() + proj.size());
  fit.report.rotation = std::move(rotation.data);
  return fit;
}

ItqFit fit_itq(const FeatureMatrix& sample, std::size_t bits, int iters, std::uint64_t seed,
               bool allow_padding) {
  std::vector<std::uint32_t> rows(sample.rows());
  std::iota(rows.begin(), rows.end(), 0u);
  return fit_itq_rows(sample, rows, bits, iters, seed, allow_padding);
}

CodeBook encode_projected(std::span<const double> projected, std::size_t rows, std::size_t bits) {
  if (projected.size() != rows * bits) throw ValidationError("encode: projection size mismatch");
  CodeBook book;
  book.count = rows;
  book.bits = bits;
  book.words_per_code = (bits + 63) / 64;
  book.words.assign(rows * book.words_per_code, 0);
  for (std::size_t i = 0; i < rows; ++i) {
    std::uint64_t* code = book.words.data() + i * book.words_per_code;
    const double* v = projected.data() + i * bits;
    for (std::size_t b = 0; b < bits; ++b) {
      if (v[b] >= 0.0) code[b / 64] |= std::uint64_t{1} << (b % 64);
    }
  }
  return book;
}

CodeBook encode(const HashModel& model, const FeatureMatrix& features) {
  if (features.cols() != model.dims) {
    throw ValidationError("encode: feature dimension " + std::to_string(features.cols()) +
                          " does not match model dimension " + std::to_string(model.dims));
  }
  const std::size_t n = features.rows();
  const std::size_t z = model.dims;
  const std::size_t tau = model.bits;
  CodeBook book;
  book.count = n;
  book.bits = tau;
  book.words_per_code = model.words_per_code();
  book.words.assign(n * book.words_per_code, 0);
  std::vector<double> centered(z);
  std::vector<double> acc(tau);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = features.row(i);
    for (std::size_t d = 0; d < z; ++d) centered[d] = x[d] - model.mean[d];
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t d = 0; d < z; ++d) {
      const double c = centered[d];
      const double* prow = model.projection.data() + d * tau;
      for (std::size_t b = 0; b < tau; ++b) acc[b] += c * prow[b];
    }
    std::uint64_t* code = book.words.data() + i * book.words_per_code;
    for (std::size_t b = 0; b < tau; ++b) {
      if (acc[b] >= 0.0) code[b / 64] |= std::uint64_t{1} << (b % 64);
    }
  }
  return book;
}

std::uint32_t hamming_distance(std::span<const std::uint64_t> a,
                               std::span<const std::uint64_t> b) {
  std::uint32_t d = 0;
  for (std::size_t w = 0; w < a.size(); ++w) d += static_cast<std::uint32_t>(std::popcount(a[w] ^ b[w]));
  return d;
}

namespace {

struct WindowBounds {
  std::uint32_t x0, x1, y0, y1;  // inclusive
  std::uint32_t stride;
};

// Candidate region as a rectangle; without a window, one row spanning all codes.
WindowBounds window_bounds(std::size_t count, std::uint32_t query,
                           const std::optional<SearchWindow>& window) {
  if (!window) {
    return {0, static_cast<std::uint32_t>(count - 1), 0, 0, static_cast<std::uint32_t>(count)};
  }
  if (std::size_t{window->width} * window->height != count) {
    throw ValidationError("knn: window dimensions do not match the candidate count");
  }
  const std::uint32_t qx = query % window->width;
  const std::uint32_t qy = query / window->width;
  const std::uint32_t r = window->radius;
  return {qx >= r ? qx - r : 0, std::min(qx + r, window->width - 1), qy >= r ? qy - r : 0,
          std::min(qy + r, window->height - 1), window->width};
}

}  // namespace

HammingSearcher::HammingSearcher(const CodeBook& codes, std::optional<SearchWindow> window)
    : codes_(&codes), window_(window) {}

// Fills distances_ for the query's candidate rectangle.
template <std::size_t Words>
void HammingSearcher::scan(std::uint32_t query) {
  const WindowBounds wb = window_bounds(codes_->count, query, window_);
  const std::size_t wpc = codes_->words_per_code;
  const std::uint64_t* base = codes_->words.data();
  const std::uint64_t* q = base + std::size_t{query} * wpc;
  const std::uint32_t span = wb.x1 - wb.x0 + 1;
  distances_.resize(std::size_t{span} * (wb.y1 - wb.y0 + 1));
  std::uint16_t* out = distances_.data();
  for (std::uint32_t y = wb.y0; y <= wb.y1; ++y) {
    const std::size_t first = std::size_t{y} * wb.stride + wb.x0;
    const std::uint64_t* row = base + first * wpc;
    if constexpr (Words == 1) {
      const std::uint64_t qw = q[0];
      for (std::uint32_t x = 0; x < span; ++x) {
        out[x] = static_cast<std::uint16_t>(std::popcount(qw ^ row[x]));
      }
    } else {
      for (std::uint32_t x = 0; x < span; ++x) {
        std::uint32_t d = 0;
        for (std::size_t w = 0; w < wpc; ++w) d += static_cast<std::uint32_t>(std::popcount(q[w] ^ row[x * wpc + w]));
        out[x] = static_cast<std::uint16_t>(d);
      }
    }
    out += span;
  }
}

std::size_t HammingSearcher::count_at_most(std::uint16_t t) const {
  // 16-bit block tallies keep the compare-and-add loop at full vector width.
  constexpr std::size_t kBlock = 1 << 15;
  const std::uint16_t* d = distances_.data();
  const std::size_t n = distances_.size();
  std::size_t c = 0;
  for (std::size_t b = 0; b < n; b += kBlock) {
    const std::size_t e = std::min(n, b + kBlock);
    std::uint16_t part = 0;
    for (std::size_t i = b; i < e; ++i) part += d[i] <= t ? 1 : 0;
    c += part;
  }
  return c;
}

bool HammingSearcher::query(std::uint32_t query, std::size_t k, std::vector<std::uint32_t>& out) {
  out.clear();
  if (k == 0) throw ValidationError("knn: K must be at least 1");
  if (query >= codes_->count) throw ValidationError("knn: query index out of range");
  if (codes_->words_per_code == 1) {
    scan<1>(query);
  } else {
    scan<0>(query);
  }
  const WindowBounds wb = window_bounds(codes_->count, query, window_);
  const std::uint32_t span = wb.x1 - wb.x0 + 1;
  const std::uint32_t qx = window_ ? query % window_->width : query;
  const std::uint32_t qy = window_ ? query / window_->width : 0;
  const std::size_t self = std::size_t{qy - wb.y0} * span + (qx - wb.x0);
  const std::uint16_t sentinel = static_cast<std::uint16_t>(codes_->bits + 1);
  // The query itself sits at distance 0; move it out of reach.
  distances_[self] = sentinel;

  const std::size_t pool = distances_.size() - 1;
  const bool short_pool = pool < k;
  const std::size_t want = std::min(k, pool);

  // Smallest cutoff distance with at least `want` candidates at or below it.
  // Neighboring queries have similar cutoffs, so walk from the previous one.
  std::uint16_t t = std::min(last_cutoff_, static_cast<std::uint16_t>(codes_->bits));
  std::size_t at = count_at_most(t);
  std::size_t below = 0;
  if (at >= want) {
    below = t == 0 ? 0 : count_at_most(static_cast<std::uint16_t>(t - 1));
    while (below >= want) {
      --t;
      below = t == 0 ? 0 : count_at_most(static_cast<std::uint16_t>(t - 1));
    }
  } else {
    while (at < want) {
      below = at;
      at = count_at_most(++t);
    }
  }
  last_cutoff_ = t;
  const std::size_t cutoff = t;
  std::size_t at_cutoff_slots = want - below;
  std::size_t remaining = want;

  // Positions are visited in ascending pixel order, so equal distances keep
  // ascending index order.
  thread_local std::vector<std::pair<std::uint16_t, std::uint32_t>> picked;
  picked.clear();
  const std::uint16_t* dist = distances_.data();
  const std::size_t total = distances_.size();
  const auto limit = static_cast<std::uint16_t>(cutoff);
  for (std::size_t p = 0; p < total && remaining > 0; ++p) {
    // Skip whole blocks holding nothing at or below the cutoff.
    if (p % 32 == 0 && p + 32 <= total) {
      bool any = false;
      for (std::size_t q = p; q < p + 32; ++q) any |= dist[q] <= limit;
      if (!any) {
        p += 31;
        continue;
      }
    }
    const std::uint16_t d = dist[p];
    if (d < cutoff || (d == cutoff && at_cutoff_slots > 0)) {
      if (d == cutoff) --at_cutoff_slots;
      --remaining;
      const std::uint32_t idx = static_cast<std::uint32_t>(
          (std::size_t{wb.y0} + p / span) * wb.stride + wb.x0 + p % span);
      picked.emplace_back(d, idx);
    }
  }
  std::stable_sort(picked.begin(), picked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  out.reserve(picked.size());
  for (const auto& [d, idx] : picked) out.push_back(idx);
  return !short_pool;
}

KnnResult knn_hamming(const CodeBook& codes, std::uint32_t query, std::size_t k,
                      const std::optional<SearchWindow>& window) {
  HammingSearcher searcher(codes, window);
  KnnResult result;
  result.short_pool = !searcher.query(query, k, result.indices);
  return result;
}

KnnResult knn_exhaustive(const FeatureMatrix& features, std::uint32_t query, std::size_t k,
                         const std::optional<SearchWindow>& window) {
  if (k == 0) throw ValidationError("knn: K must be at least 1");
  const std::size_t n = features.rows();
  if (query >= n) throw ValidationError("knn: query index out of range");
  const WindowBounds wb = window_bounds(n, query, window);
  const auto q = features.row(query);

  std::vector<std::pair<double, std::uint32_t>> cand;
  for (std::uint32_t y = wb.y0; y <= wb.y1; ++y) {
    for (std::uint32_t x = wb.x0; x <= wb.x1; ++x) {
      const auto idx = static_cast<std::uint32_t>(std::size_t{y} * wb.stride + x);
      if (idx == query) continue;
      const auto r = features.row(idx);
      double d = 0.0;
      for (std::size_t c = 0; c < r.size(); ++c) d += (r[c] - q[c]) * (r[c] - q[c]);
      cand.emplace_back(d, idx);
    }
  }
  KnnResult result;
  result.short_pool = cand.size() < k;
  const std::size_t want = std::min(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(want), cand.end());
  for (std::size_t i = 0; i < want; ++i) result.indices.push_back(cand[i].second);
  return result;
}

}  // namespace scribblefill
