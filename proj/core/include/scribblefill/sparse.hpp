#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace scribblefill {

/// Square compressed-sparse-row matrix. Column indices are strictly
/// increasing within each row.
struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;

  std::size_t nnz() const { return vals.size(); }
  std::size_t row_begin(std::size_t i) const { return row_ptr[i]; }
  std::size_t row_end(std::size_t i) const { return row_ptr[i + 1]; }

  /// Entry (i, j), zero when not stored. O(log row length).
  double at(std::size_t i, std::size_t j) const;
  /// y = A x.
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
  std::vector<double> diagonal() const;
  /// Dense row-major copy; intended for small test-sized matrices.
  std::vector<double> to_dense() const;
};

/// Builds a CSR matrix from unordered (row, col, value) triplets; duplicates
/// are summed.
struct Triplet {
  std::uint32_t row;
  std::uint32_t col;
  double value;
};
CsrMatrix csr_from_triplets(std::size_t n, std::vector<Triplet> triplets);

/// Writes the lower triangle as "MatrixMarket matrix coordinate real symmetric".
void write_matrix_market(const CsrMatrix& m, std::ostream& out);

}  // namespace scribblefill
