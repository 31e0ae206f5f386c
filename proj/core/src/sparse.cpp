#include "scribblefill/sparse.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>

#include "scribblefill/error.hpp"

namespace scribblefill {

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const auto first = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
  const auto last = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
  const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(j));
  if (it == last || *it != j) return 0.0;
  return vals[static_cast<std::size_t>(it - cols.begin())];
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n || y.size() != n) throw ValidationError("CsrMatrix::multiply: size mismatch");
  const std::size_t* rp = row_ptr.data();
  const std::uint32_t* ci = cols.data();
  const double* v = vals.data();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) acc += v[p] * x[ci[p]];
    y[i] = acc;
  }
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(n);
  multiply(x, y);
  return y;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i] = at(i, i);
  return d;
}

std::vector<double> CsrMatrix::to_dense() const {
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) d[i * n + cols[p]] = vals[p];
  }
  return d;
}

CsrMatrix csr_from_triplets(std::size_t n, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= n || t.col >= n) throw ValidationError("csr_from_triplets: index out of range");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.n = n;
  m.row_ptr.assign(n + 1, 0);
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (!m.cols.empty() && k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
      m.vals.back() += t.value;
      continue;
    }
    m.cols.push_back(t.col);
    m.vals.push_back(t.value);
    ++m.row_ptr[t.row + 1];
  }
  for (std::size_t i = 0; i < n; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
  return m;
}

void write_matrix_market(const CsrMatrix& m, std::ostream& out) {
  std::size_t lower = 0;
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) lower += m.cols[p] <= i;
  }
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << m.n << ' ' << m.n << ' ' << lower << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) {
      if (m.cols[p] <= i) out << (i + 1) << ' ' << (m.cols[p] + 1) << ' ' << m.vals[p] << '\n';
    }
  }
}

}  // namespace scribblefill
