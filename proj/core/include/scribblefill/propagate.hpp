#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scribblefill/graph.hpp"
#include "scribblefill/sparse.hpp"
#include "scribblefill/types.hpp"

namespace scribblefill {

struct PcgResult {
  std::vector<double> x;
  int iterations = 0;
  // ||A x - b|| / ||b|| of the returned x (0 when b = 0).
  double residual = 0.0;
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients for symmetric positive-definite A.
/// Stops when the relative residual drops to `tol`; on maxiter exhaustion
/// returns the lowest-residual iterate with converged = false.
/// Throws ValidationError on a non-positive diagonal or detected asymmetry.
PcgResult pcg_solve(const CsrMatrix& a, std::span<const double> b, double tol, int maxiter);

/// pcg_solve for several right-hand sides, run in lockstep so each pass over
/// A serves a batch of them. Each result is bit-identical to a lone pcg_solve.
std::vector<PcgResult> pcg_solve_many(const CsrMatrix& a, std::span<const std::vector<double>> bs,
                                      double tol, int maxiter);

/// Dense solve by Gaussian elimination with partial pivoting. `a` is n x n
/// row-major. Throws ValidationError when singular or n > 4096.
std::vector<double> dense_solve_oracle(std::vector<double> a, std::vector<double> b);

struct SolverOptions {
  double tol = 1e-12;
  int maxiter = 2000;
};

/// L + lambda * diag(s_union).
CsrMatrix system_matrix(const LaplacianMatrix& lap, std::span<const std::uint8_t> s_union,
                        double lambda);

struct ClassSolution {
  std::vector<double> alpha;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// alpha = (L + lambda E)^{-1} (lambda s_target), E = diag(s_union).
ClassSolution solve_class(const LaplacianMatrix& lap, std::span<const std::uint8_t> s_target,
                          std::span<const std::uint8_t> s_union, double lambda,
                          const SolverOptions& opts = {});
/// Same against a prebuilt system matrix.
ClassSolution solve_class(const CsrMatrix& system, std::span<const std::uint8_t> s_target,
                          double lambda, const SolverOptions& opts = {});

/// Relaxed objective a^T L a + lambda sum_{i in s} a_i^2 - 2 lambda s_t^T a + lambda |s_t|,
/// equal to the smoothness-plus-markup loss evaluated at alpha.
double objective(const LaplacianMatrix& lap, std::span<const double> alpha,
                 std::span<const std::uint8_t> s_target, std::span<const std::uint8_t> s_union,
                 double lambda);
/// 2 (L + lambda E) a - 2 lambda s_t.
std::vector<double> objective_gradient(const LaplacianMatrix& lap, std::span<const double> alpha,
                                       std::span<const std::uint8_t> s_target,
                                       std::span<const std::uint8_t> s_union, double lambda);

struct ClassSolveStats {
  ClassId class_id = 0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

struct SolverReport {
  std::size_t pixels = 0;
  std::size_t nnz = 0;
  double lambda = 0.0;
  double tol = 0.0;
  std::vector<ClassSolveStats> classes;
  double solve_seconds = 0.0;
  // Pre-clamp diagnostics of the confidence field.
  double max_sum_deviation = 0.0;
  double min_alpha = 0.0;
  double max_alpha = 0.0;
  // Stage timings filled by the enrichment pipeline (seconds).
  double features_seconds = 0.0;
  double hashing_seconds = 0.0;
  double graph_seconds = 0.0;
  double total_seconds = 0.0;
  bool ok = true;

  std::string to_text() const;
  std::string to_json() const;
};

struct PropagateResult {
  ConfidenceField field;
  SolverReport report;
};

/// Solves every class of `ann` against one shared (L + lambda E), then clamps
/// to [0, 1]. Throws SolverError (carrying the partial report text) on the
/// first class that fails to converge.
PropagateResult propagate_all(const LaplacianMatrix& lap, const CoarseAnnotation& ann,
                              double lambda, const SolverOptions& opts = {},
                              bool clamp = true);

}  // namespace scribblefill
