#pragma once

// Brute-force reference implementations used to check the library. Each one
// is written from the definition, sharing no code with the implementation
// under test.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scribblefill/features.hpp"
#include "scribblefill/hashing.hpp"
#include "scribblefill/sparse.hpp"

namespace oracle {

/// k nearest rows by full sort of (squared Euclidean distance, index).
std::vector<std::uint32_t> knn_full_sort(const scribblefill::FeatureMatrix& x, std::uint32_t query,
                                         std::size_t k,
                                         const std::optional<scribblefill::SearchWindow>& window = {});

/// k nearest codes by full sort of (bit-loop Hamming distance, index).
std::vector<std::uint32_t> knn_hamming_full_sort(const scribblefill::CodeBook& codes,
                                                 std::uint32_t query, std::size_t k,
                                                 const std::optional<scribblefill::SearchWindow>& window = {});

/// Hamming distance by testing one bit at a time.
std::uint32_t hamming_bitloop(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                              std::size_t bits);

/// True when every node reaches node 0 through entries with positive weight.
bool connected(const scribblefill::CsrMatrix& w);

/// Eigenvalues of a dense symmetric matrix, ascending.
std::vector<double> symmetric_eigenvalues(const std::vector<double>& a, std::size_t n);

/// 1/2 sum_ij w_ij (x_i - x_j)^2 from a dense weight matrix.
double pairwise_energy(const std::vector<double>& w, std::size_t n, std::span<const double> x);

/// a^T L a + lambda * sum_{i marked} (a_i - t_i)^2 with a dense L.
double dense_objective(const std::vector<double>& l, std::size_t n, std::span<const double> a,
                       std::span<const std::uint8_t> target, std::span<const std::uint8_t> marked,
                       double lambda);

/// Central finite differences of dense_objective.
std::vector<double> finite_difference_gradient(const std::vector<double>& l, std::size_t n,
                                               std::span<const double> a,
                                               std::span<const std::uint8_t> target,
                                               std::span<const std::uint8_t> marked, double lambda,
                                               double h);

/// Solve by Cholesky (Eigen LLT), independent of the library's elimination.
std::vector<double> cholesky_solve(const std::vector<double>& a, std::size_t n,
                                   const std::vector<double>& b);

/// ||sgn(V R) - V R||_F^2 for rows of V (m x 2) and a 2x2 rotation/reflection
/// at angle theta.
double square_loss_2d(const std::vector<double>& v, double theta, bool reflect);

/// Minimum of square_loss_2d over a 0.001 rad grid of rotations and reflections.
double grid_search_min_loss_2d(const std::vector<double>& v);

}  // namespace oracle
