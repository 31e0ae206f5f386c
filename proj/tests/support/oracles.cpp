#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <Eigen/Dense>

namespace oracle {

namespace {

bool in_window(std::uint32_t q, std::uint32_t j, const std::optional<scribblefill::SearchWindow>& w) {
  if (!w) return true;
  const auto qx = static_cast<long>(q % w->width), qy = static_cast<long>(q / w->width);
  const auto jx = static_cast<long>(j % w->width), jy = static_cast<long>(j / w->width);
  return std::max(std::labs(qx - jx), std::labs(qy - jy)) <= static_cast<long>(w->radius);
}

template <typename Dist>
std::vector<std::uint32_t> sorted_neighbors(std::size_t n, std::uint32_t query, std::size_t k,
                                            const std::optional<scribblefill::SearchWindow>& window,
                                            Dist dist) {
  std::vector<std::pair<double, std::uint32_t>> all;
  for (std::uint32_t j = 0; j < n; ++j) {
    if (j != query && in_window(query, j, window)) all.emplace_back(dist(j), j);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

}  // namespace

std::vector<std::uint32_t> knn_full_sort(const scribblefill::FeatureMatrix& x, std::uint32_t query,
                                         std::size_t k,
                                         const std::optional<scribblefill::SearchWindow>& window) {
  return sorted_neighbors(x.rows(), query, k, window, [&](std::uint32_t j) {
    double d = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double diff = x.at(j, c) - x.at(query, c);
      d += diff * diff;
    }
    return d;
  });
}

std::vector<std::uint32_t> knn_hamming_full_sort(const scribblefill::CodeBook& codes,
                                                 std::uint32_t query, std::size_t k,
                                                 const std::optional<scribblefill::SearchWindow>& window) {
  return sorted_neighbors(codes.count, query, k, window, [&](std::uint32_t j) {
    return static_cast<double>(hamming_bitloop(codes.code(query), codes.code(j), codes.bits));
  });
}

std::uint32_t hamming_bitloop(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                              std::size_t bits) {
  std::uint32_t d = 0;
  for (std::size_t i = 0; i < bits; ++i) {
    const bool x = (a[i / 64] >> (i % 64)) & 1u;
    const bool y = (b[i / 64] >> (i % 64)) & 1u;
    d += x != y ? 1 : 0;
  }
  return d;
}

bool connected(const scribblefill::CsrMatrix& w) {
  std::vector<std::size_t> parent(w.n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < w.n; ++i) {
    for (std::size_t p = w.row_ptr[i]; p < w.row_ptr[i + 1]; ++p) {
      if (w.vals[p] > 0.0) parent[find(i)] = find(w.cols[p]);
    }
  }
  for (std::size_t i = 0; i < w.n; ++i) {
    if (find(i) != find(0)) return false;
  }
  return true;
}

std::vector<double> symmetric_eigenvalues(const std::vector<double>& a, std::size_t n) {
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = a[i * n + j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

double pairwise_energy(const std::vector<double>& w, std::size_t n, std::span<const double> x) {
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) e += w[i * n + j] * (x[i] - x[j]) * (x[i] - x[j]);
  }
  return 0.5 * e;
}

double dense_objective(const std::vector<double>& l, std::size_t n, std::span<const double> a,
                       std::span<const std::uint8_t> target, std::span<const std::uint8_t> marked,
                       double lambda) {
  double v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) v += a[i] * l[i * n + j] * a[j];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (marked[i]) {
      const double d = a[i] - (target[i] ? 1.0 : 0.0);
      v += lambda * d * d;
    }
  }
  return v;
}

std::vector<double> finite_difference_gradient(const std::vector<double>& l, std::size_t n,
                                               std::span<const double> a,
                                               std::span<const std::uint8_t> target,
                                               std::span<const std::uint8_t> marked, double lambda,
                                               double h) {
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = dense_objective(l, n, x, target, marked, lambda);
    x[i] = orig - h;
    const double down = dense_objective(l, n, x, target, marked, lambda);
    x[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

std::vector<double> cholesky_solve(const std::vector<double>& a, std::size_t n,
                                   const std::vector<double>& b) {
  Eigen::MatrixXd m(n, n);
  Eigen::VectorXd r(n);
  for (std::size_t i = 0; i < n; ++i) {
    r(static_cast<Eigen::Index>(i)) = b[i];
    for (std::size_t j = 0; j < n; ++j) m(i, j) = a[i * n + j];
  }
  const Eigen::VectorXd x = m.llt().solve(r);
  return {x.data(), x.data() + x.size()};
}

double square_loss_2d(const std::vector<double>& v, double theta, bool reflect) {
  const double c = std::cos(theta), s = std::sin(theta);
  // Columns of R: rotation [[c, -s], [s, c]] or reflection [[c, s], [s, -c]].
  const double r00 = c, r10 = s;
  const double r01 = reflect ? s : -s;
  const double r11 = reflect ? -c : c;
  double loss = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); i += 2) {
    const double p0 = v[i] * r00 + v[i + 1] * r10;
    const double p1 = v[i] * r01 + v[i + 1] * r11;
    const double b0 = p0 >= 0 ? 1.0 : -1.0;
    const double b1 = p1 >= 0 ? 1.0 : -1.0;
    loss += (b0 - p0) * (b0 - p0) + (b1 - p1) * (b1 - p1);
  }
  return loss;
}

double grid_search_min_loss_2d(const std::vector<double>& v) {
  const double two_pi = 2.0 * std::acos(-1.0);
  double best = square_loss_2d(v, 0.0, false);
  for (double t = 0.0; t < two_pi; t += 0.001) {
    best = std::min(best, square_loss_2d(v, t, false));
    best = std::min(best, square_loss_2d(v, t, true));
  }
  return best;
}

}  // namespace oracle
