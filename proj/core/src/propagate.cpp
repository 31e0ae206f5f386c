#include "scribblefill/propagate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "scribblefill/error.hpp"

namespace scribblefill {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}


void check_symmetric_sample(const CsrMatrix& a) {
  const std::size_t rows = std::min<std::size_t>(a.n, 64);
  for (std::size_t s = 0; s < rows; ++s) {
    const std::size_t i = rows == a.n ? s : s * (a.n - 1) / (rows - 1);
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      const double aij = a.vals[p];
      const double aji = a.at(a.cols[p], i);
      if (std::abs(aij - aji) > 1e-12 * std::max(1.0, std::abs(aij))) {
        throw ValidationError("pcg_solve: matrix is not symmetric at (" + std::to_string(i) +
                              ", " + std::to_string(a.cols[p]) + ")");
      }
    }
  }
}

// Up to this many right-hand sides share one pass over the matrix.
constexpr std::size_t kBatch = 4;

std::vector<double> inverse_diagonal(const CsrMatrix& a) {
  const std::vector<double> diag = a.diagonal();
  std::vector<double> inv(a.n);
  for (std::size_t i = 0; i < a.n; ++i) {
    if (!(diag[i] > 0)) {
      throw ValidationError("pcg_solve: non-positive diagonal entry at row " + std::to_string(i));
    }
    inv[i] = 1.0 / diag[i];
  }
  return inv;
}

// Strict upper triangle of a symmetric matrix plus its diagonal. Each stored
// entry serves both (i, j) and (j, i), halving the bytes read per product.
struct SymmetricUpper {
  std::size_t n = 0;
  std::vector<double> diag;
  std::vector<std::size_t> row_ptr;
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;
  std::vector<std::size_t> reach;  // highest row touched by rows 0..i
};

SymmetricUpper upper_triangle(const CsrMatrix& a) {
  SymmetricUpper u;
  u.n = a.n;
  u.diag.assign(a.n, 0.0);
  u.row_ptr.assign(a.n + 1, 0);
  for (std::size_t i = 0; i < a.n; ++i) {
    for (std::size_t q = a.row_ptr[i]; q < a.row_ptr[i + 1]; ++q) {
      const std::size_t j = a.cols[q];
      if (j == i) {
        u.diag[i] = a.vals[q];
      } else if (j > i) {
        u.cols.push_back(static_cast<std::uint32_t>(j));
        u.vals.push_back(a.vals[q]);
      }
    }
    u.row_ptr[i + 1] = u.cols.size();
  }
  u.reach.resize(a.n);
  std::size_t far = 0;
  for (std::size_t i = 0; i < a.n; ++i) {
    far = std::max(far, i);
    if (u.row_ptr[i + 1] > u.row_ptr[i]) {
      far = std::max<std::size_t>(far, *std::max_element(u.cols.begin() + static_cast<std::ptrdiff_t>(u.row_ptr[i]),
                                                          u.cols.begin() + static_cast<std::ptrdiff_t>(u.row_ptr[i + 1])));
    }
    u.reach[i] = far;
  }
  return u;
}

// Reductions keep kLanes partial sums striped by row index and combine them
// in a fixed order, so a sum does not depend on how many systems share a pass.
constexpr std::size_t kLanes = 4;

template <std::size_t M>
struct LaneSums {
  double v[kLanes][M] = {};
  double total(std::size_t k) const { return (v[0][k] + v[1][k]) + (v[2][k] + v[3][k]); }
};

// First sets p = D^-1 r + beta p, then y = A p, over M interleaved vectors,
// returning dot(p_k, y_k). The p update and the zeroing of y run a few rows
// ahead of the product, so those rows are still in cache when it reaches
// them. Row i of y is final once row i has been visited, since later rows
// only scatter forward.
template <std::size_t M>
LaneSums<M> update_multiply_dot(const SymmetricUpper& a, const double* dinv, const double* r,
                                const double (&beta)[M], double* p, double* y) {
  const std::size_t* rp = a.row_ptr.data();
  const std::uint32_t* ci = a.cols.data();
  const double* v = a.vals.data();
  LaneSums<M> dots;
  std::size_t ready = 0;
  for (std::size_t i = 0; i < a.n; ++i) {
    for (; ready <= a.reach[i]; ++ready) {
      for (std::size_t k = 0; k < M; ++k) {
        const std::size_t at = ready * M + k;
        p[at] = dinv[ready] * r[at] + beta[k] * p[at];
        y[at] = 0.0;
      }
    }
    const double* pi = p + i * M;
    double acc[M];
    for (std::size_t k = 0; k < M; ++k) acc[k] = a.diag[i] * pi[k];
    for (std::size_t q = rp[i]; q < rp[i + 1]; ++q) {
      const double w = v[q];
      const std::size_t j = std::size_t{ci[q]} * M;
      for (std::size_t k = 0; k < M; ++k) {
        acc[k] += w * p[j + k];
        y[j + k] += w * pi[k];
      }
    }
    const std::size_t lane = i % kLanes;
    for (std::size_t k = 0; k < M; ++k) {
      const double yi = y[i * M + k] + acc[k];
      y[i * M + k] = yi;
      dots.v[lane][k] += pi[k] * yi;
    }
  }
  return dots;
}

// Per-system state that survives repacking of the interleaved vectors.
struct PcgSystem {
  std::size_t id = 0;
  double bnorm = 0.0;
  double rz = 0.0;
  double beta = 0.0;  // pending for the next direction update
  double rel = 1.0;
  double best_rel = 1.0;  // x = 0 is the first candidate
  bool current_is_best = false;
  bool done = false;
};

struct PcgBatch {
  std::size_t m = 0;
  std::vector<double> x, r, p, ap, best;
};

// Runs lockstep iterations until some system leaves the batch or maxiter is
// reached. Returns the iteration count reached.
template <std::size_t M>
int pcg_iterate(const SymmetricUpper& a, const std::vector<double>& inv_diag, PcgBatch& b,
                std::vector<PcgSystem*>& sys, std::vector<PcgResult>& res, double tol, int it,
                int maxiter) {
  const std::size_t n = a.n;
  double* x = b.x.data();
  double* r = b.r.data();
  double* p = b.p.data();
  double* ap = b.ap.data();
  double* best = b.best.data();
  const double* dinv = inv_diag.data();
  while (it < maxiter) {
    double beta[M];
    for (std::size_t k = 0; k < M; ++k) beta[k] = sys[k]->beta;
    const LaneSums<M> pap = update_multiply_dot<M>(a, dinv, r, beta, p, ap);
    ++it;
    double step[M];
    bool snap[M];
    bool any_done = false;
    for (std::size_t k = 0; k < M; ++k) {
      PcgSystem& s = *sys[k];
      const double pk = pap.total(k);
      res[s.id].iterations = it;
      step[k] = 0.0;
      if (!(pk > 0)) {  // breakdown: A not positive definite along p
        res[s.id].iterations = it - 1;
        s.done = any_done = true;
      } else {
        step[k] = s.rz / pk;
      }
      snap[k] = s.current_is_best;
    }

    LaneSums<M> rr, rz;
    auto update = [&](std::size_t i, std::size_t lane, std::size_t k) {
      const std::size_t at = i * M + k;
      best[at] = snap[k] ? x[at] : best[at];
      x[at] += step[k] * p[at];
      const double ri = r[at] - step[k] * ap[at];
      r[at] = ri;
      rr.v[lane][k] += ri * ri;
      rz.v[lane][k] += ri * (dinv[i] * ri);
    };
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
      for (std::size_t l = 0; l < kLanes; ++l) {
        for (std::size_t k = 0; k < M; ++k) update(i + l, l, k);
      }
    }
    for (; i < n; ++i) {
      for (std::size_t k = 0; k < M; ++k) update(i, i % kLanes, k);
    }

    for (std::size_t k = 0; k < M; ++k) {
      PcgSystem& s = *sys[k];
      if (snap[k]) s.current_is_best = false;
      if (s.done) continue;
      s.rel = std::sqrt(rr.total(k)) / s.bnorm;
      if (s.rel <= tol) {
        res[s.id].converged = true;
        s.done = any_done = true;
        continue;
      }
      if (s.rel < s.best_rel) {
        s.best_rel = s.rel;
        s.current_is_best = true;
      }
      const double rzk = rz.total(k);
      s.beta = rzk / s.rz;
      s.rz = rzk;
    }
    if (any_done) break;
  }
  return it;
}

// Drops finished systems from the interleaved vectors.
void repack(PcgBatch& b, std::vector<PcgSystem*>& sys, std::size_t n) {
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < b.m; ++k) {
    if (!sys[k]->done) keep.push_back(k);
  }
  const std::size_t m = keep.size();
  auto squeeze = [&](std::vector<double>& v) {
    std::vector<double> out(n * m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < m; ++c) out[i * m + c] = v[i * b.m + keep[c]];
    }
    v = std::move(out);
  };
  squeeze(b.x);
  squeeze(b.r);
  squeeze(b.p);
  squeeze(b.best);
  b.ap.assign(n * m, 0.0);
  std::vector<PcgSystem*> kept;
  for (std::size_t c : keep) kept.push_back(sys[c]);
  sys = std::move(kept);
  b.m = m;
}

// Lockstep Jacobi PCG over up to kBatch right-hand sides. Vectors are stored
// interleaved (entry i of system k at i * m + k). Every system runs exactly
// the arithmetic of a lone solve, in the same order, so results do not
// depend on batching.
std::vector<PcgResult> pcg_batch(const CsrMatrix& a, const SymmetricUpper& upper,
                                 const std::vector<double>& inv_diag,
                                 std::span<const std::span<const double>> bs, double tol,
                                 int maxiter) {
  const std::size_t n = a.n;
  std::vector<PcgResult> res(bs.size());
  std::vector<PcgSystem> systems(bs.size());
  std::vector<PcgSystem*> live;
  std::vector<std::vector<double>> final_x(bs.size(), std::vector<double>(n, 0.0));

  for (std::size_t k = 0; k < bs.size(); ++k) {
    PcgSystem& s = systems[k];
    s.id = k;
    double bb = 0.0, rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      bb += bs[k][i] * bs[k][i];
      rz += bs[k][i] * (inv_diag[i] * bs[k][i]);
    }
    s.bnorm = std::sqrt(bb);
    s.rz = rz;
    if (s.bnorm == 0.0) {
      res[k].converged = true;
    } else {
      live.push_back(&s);
    }
  }

  PcgBatch b;
  b.m = live.size();
  b.x.assign(n * b.m, 0.0);
  b.r.resize(n * b.m);
  b.p.assign(n * b.m, 0.0);
  b.ap.resize(n * b.m);
  b.best.assign(n * b.m, 0.0);
  for (std::size_t c = 0; c < b.m; ++c) {
    const auto& rhs = bs[live[c]->id];
    for (std::size_t i = 0; i < n; ++i) {
      b.r[i * b.m + c] = rhs[i];
    }
  }

  int it = 0;
  while (b.m > 0) {
    switch (b.m) {
      case 1: it = pcg_iterate<1>(upper, inv_diag, b, live, res, tol, it, maxiter); break;
      case 2: it = pcg_iterate<2>(upper, inv_diag, b, live, res, tol, it, maxiter); break;
      case 3: it = pcg_iterate<3>(upper, inv_diag, b, live, res, tol, it, maxiter); break;
      default: it = pcg_iterate<4>(upper, inv_diag, b, live, res, tol, it, maxiter); break;
    }
    if (it >= maxiter) {
      for (PcgSystem* s : live) s->done = true;
    }
    for (std::size_t c = 0; c < b.m; ++c) {
      PcgSystem& s = *live[c];
      if (!s.done) continue;
      // The current iterate is returned unless an earlier one had a smaller residual.
      const bool keep = res[s.id].converged || s.current_is_best || !(s.best_rel < s.rel);
      const std::vector<double>& src = keep ? b.x : b.best;
      for (std::size_t i = 0; i < n; ++i) final_x[s.id][i] = src[i * b.m + c];
    }
    repack(b, live, n);
  }

  std::vector<double> axk(n);
  for (std::size_t k = 0; k < bs.size(); ++k) {
    res[k].x = std::move(final_x[k]);
    if (systems[k].bnorm == 0.0) continue;
    // Report the true residual of the returned iterate.
    a.multiply(res[k].x, axk);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) e += (bs[k][i] - axk[i]) * (bs[k][i] - axk[i]);
    res[k].residual = std::sqrt(e) / systems[k].bnorm;
  }
  return res;
}

void check_pcg_args(const CsrMatrix& a, std::span<const double> b, double tol, int maxiter) {
  if (b.size() != a.n) throw ValidationError("pcg_solve: right-hand side size mismatch");
  if (!(tol > 0)) throw ValidationError("pcg_solve: tol must be positive");
  if (maxiter < 0) throw ValidationError("pcg_solve: maxiter must be non-negative");
}

}  // namespace

PcgResult pcg_solve(const CsrMatrix& a, std::span<const double> b, double tol, int maxiter) {
  check_pcg_args(a, b, tol, maxiter);
  const std::vector<double> inv_diag = inverse_diagonal(a);
  check_symmetric_sample(a);
  const std::span<const double> one[1] = {b};
  return std::move(pcg_batch(a, upper_triangle(a), inv_diag, one, tol, maxiter)[0]);
}

std::vector<PcgResult> pcg_solve_many(const CsrMatrix& a,
                                      std::span<const std::vector<double>> bs, double tol,
                                      int maxiter) {
  for (const auto& b : bs) check_pcg_args(a, b, tol, maxiter);
  const std::vector<double> inv_diag = inverse_diagonal(a);
  check_symmetric_sample(a);
  const SymmetricUpper upper = upper_triangle(a);
  std::vector<PcgResult> out;
  for (std::size_t first = 0; first < bs.size(); first += kBatch) {
    const std::size_t count = std::min(kBatch, bs.size() - first);
    std::vector<std::span<const double>> batch(bs.begin() + static_cast<std::ptrdiff_t>(first),
                                               bs.begin() + static_cast<std::ptrdiff_t>(first + count));
    for (auto& r : pcg_batch(a, upper, inv_diag, batch, tol, maxiter)) out.push_back(std::move(r));
  }
  return out;
}

std::vector<double> dense_solve_oracle(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  if (n > 4096) throw ValidationError("dense_solve_oracle: n exceeds 4096");
  if (a.size() != n * n) throw ValidationError("dense_solve_oracle: matrix must be n x n");
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  const double tiny = scale * static_cast<double>(std::max<std::size_t>(n, 1)) *
                      std::numeric_limits<double>::epsilon();

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a[i * n + k]) > std::abs(a[piv * n + k])) piv = i;
    }
    if (!(std::abs(a[piv * n + k]) > tiny)) throw ValidationError("dense_solve_oracle: singular matrix");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
      std::swap(b[k], b[piv]);
    }
    const double d = a[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i * n + k] / d;
      if (f == 0.0) continue;
      a[i * n + k] = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= a[k * n + j] * x[j];
    x[k] = s / a[k * n + k];
  }
  return x;
}

CsrMatrix system_matrix(const LaplacianMatrix& lap, std::span<const std::uint8_t> s_union,
                        double lambda) {
  const CsrMatrix& l = lap.matrix;
  if (s_union.size() != l.n) throw ValidationError("system_matrix: markup size mismatch");
  if (!(lambda > 0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive");
  CsrMatrix a = l;
  for (std::size_t i = 0; i < a.n; ++i) {
    if (!s_union[i]) continue;
    const auto first = a.cols.begin() + static_cast<std::ptrdiff_t>(a.row_ptr[i]);
    const auto last = a.cols.begin() + static_cast<std::ptrdiff_t>(a.row_ptr[i + 1]);
    const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(i));
    if (it == last || *it != i) throw ValidationError("system_matrix: Laplacian lacks a diagonal entry");
    a.vals[static_cast<std::size_t>(it - a.cols.begin())] += lambda;
  }
  return a;
}

ClassSolution solve_class(const CsrMatrix& system, std::span<const std::uint8_t> s_target,
                          double lambda, const SolverOptions& opts) {
  if (s_target.size() != system.n) throw ValidationError("solve_class: markup size mismatch");
  std::vector<double> b(system.n);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = s_target[i] ? lambda : 0.0;
  PcgResult r = pcg_solve(system, b, opts.tol, opts.maxiter);
  return {std::move(r.x), r.iterations, r.residual, r.converged};
}

ClassSolution solve_class(const LaplacianMatrix& lap, std::span<const std::uint8_t> s_target,
                          std::span<const std::uint8_t> s_union, double lambda,
                          const SolverOptions& opts) {
  if (s_target.size() != s_union.size()) throw ValidationError("solve_class: markup size mismatch");
  for (std::size_t i = 0; i < s_target.size(); ++i) {
    if (s_target[i] && !s_union[i]) {
      throw ValidationError("solve_class: target markups must be a subset of the union");
    }
  }
  return solve_class(system_matrix(lap, s_union, lambda), s_target, lambda, opts);
}

double objective(const LaplacianMatrix& lap, std::span<const double> alpha,
                 std::span<const std::uint8_t> s_target, std::span<const std::uint8_t> s_union,
                 double lambda) {
  const std::vector<double> la = lap.matrix.multiply(alpha);
  double value = dot(alpha, la);
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (s_union[i]) value += lambda * alpha[i] * alpha[i];
    if (s_target[i]) value += lambda - 2.0 * lambda * alpha[i];
  }
  return value;
}

std::vector<double> objective_gradient(const LaplacianMatrix& lap, std::span<const double> alpha,
                                       std::span<const std::uint8_t> s_target,
                                       std::span<const std::uint8_t> s_union, double lambda) {
  std::vector<double> g = lap.matrix.multiply(alpha);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = 2.0 * g[i];
    if (s_union[i]) g[i] += 2.0 * lambda * alpha[i];
    if (s_target[i]) g[i] -= 2.0 * lambda;
  }
  return g;
}

PropagateResult propagate_all(const LaplacianMatrix& lap, const CoarseAnnotation& ann,
                              double lambda, const SolverOptions& opts, bool clamp) {
  const std::size_t n = lap.size();
  if (ann.pixel_count() != n) {
    throw ValidationError("propagate_all: annotation has " + std::to_string(ann.pixel_count()) +
                          " pixels, graph has " + std::to_string(n));
  }
  const auto start = std::chrono::steady_clock::now();
  const CsrMatrix system = system_matrix(lap, ann.union_map(), lambda);

  PropagateResult out;
  out.field.width = ann.width();
  out.field.height = ann.height();
  out.field.classes = ann.classes();
  SolverReport& report = out.report;
  report.pixels = n;
  report.nnz = lap.matrix.nnz();
  report.lambda = lambda;
  report.tol = opts.tol;

  std::vector<std::vector<double>> rhs(ann.class_count(), std::vector<double>(n));
  for (std::size_t k = 0; k < ann.class_count(); ++k) {
    for (std::size_t i = 0; i < n; ++i) rhs[k][i] = ann.map(k)[i] ? lambda : 0.0;
  }
  std::vector<PcgResult> sols = pcg_solve_many(system, rhs, opts.tol, opts.maxiter);
  rhs.clear();
  for (std::size_t k = 0; k < ann.class_count(); ++k) {
    report.classes.push_back(
        {ann.classes()[k], sols[k].iterations, sols[k].residual, sols[k].converged});
  }
  for (std::size_t k = 0; k < ann.class_count(); ++k) {
    if (!sols[k].converged) {
      report.ok = false;
      report.solve_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      throw SolverError("class " + std::to_string(ann.classes()[k]) +
                        " did not converge\n" + report.to_text());
    }
    out.field.alphas.push_back(std::move(sols[k].x));
  }
  report.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  double dev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const auto& a : out.field.alphas) {
      sum += a[i];
      lo = std::min(lo, a[i]);
      hi = std::max(hi, a[i]);
    }
    dev = std::max(dev, std::abs(sum - 1.0));
  }
  report.max_sum_deviation = dev;
  report.min_alpha = lo;
  report.max_alpha = hi;
  if (clamp) {
    for (auto& a : out.field.alphas) {
      for (double& v : a) v = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace scribblefill
