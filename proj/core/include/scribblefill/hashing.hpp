#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scribblefill/features.hpp"

namespace scribblefill {

/// Learned linear hash: code = sgn((x - mean) * projection), sgn(0) = +1.
struct HashModel {
  std::size_t dims = 0;  // z
  std::size_t bits = 0;  // tau
  std::vector<double> mean;
  // z x tau, row-major.
  std::vector<double> projection;

  std::size_t words_per_code() const { return (bits + 63) / 64; }
};

/// Diagnostics of one ITQ fit.
struct ItqReport {
  // Quantization loss ||B - VR||_F^2 at the initial rotation, then after each
  // rotation update (iters + 1 entries).
  std::vector<double> losses;
  // max |R^T R - I| after each update (iters + 1 entries).
  std::vector<double> orthogonality_errors;
  // tau x tau final rotation, row-major.
  std::vector<double> rotation;
  std::size_t rank = 0;
  bool padded = false;
};

struct ItqFit {
  HashModel model;
  ItqReport report;
};

/// Dense row-major matrix used for ITQ internals.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  static Matrix identity(std::size_t n);
};

/// Seeded random orthogonal n x n matrix (QR of a Gaussian matrix).
Matrix random_rotation(std::size_t n, std::uint64_t seed);

/// Quantization loss ||sgn(VR) - VR||_F^2.
double quantization_loss(const Matrix& projected, const Matrix& rotation);

/// ITQ inner loop: alternate B = sgn(VR) and the orthogonal Procrustes update
/// of R. Appends losses / orthogonality errors to `report` (initial entry
/// included) and returns the final rotation.
Matrix refine_rotation(const Matrix& projected, Matrix rotation, int iters, ItqReport& report);

/// Fits ITQ on sample rows: center, PCA to tau dims, seeded random rotation,
/// `iters` Procrustes refinements. When tau exceeds the sample rank the PCA
/// basis is padded with zero directions (report.padded) unless
/// `allow_padding` is false, which throws ValidationError instead.
ItqFit fit_itq(const FeatureMatrix& sample, std::size_t bits, int iters, std::uint64_t seed,
               bool allow_padding = true);

/// Same, on an explicit set of rows of `features`.
ItqFit fit_itq_rows(const FeatureMatrix& features, std::span<const std::uint32_t> rows,
                    std::size_t bits, int iters, std::uint64_t seed, bool allow_padding = true);

/// Packed binary codes, words_per_code 64-bit words per pixel.
/// Bit b of code i is word b / 64, bit b % 64; unused high bits are zero.
struct CodeBook {
  std::size_t count = 0;
  std::size_t bits = 0;
  std::size_t words_per_code = 0;
  std::vector<std::uint64_t> words;

  std::span<const std::uint64_t> code(std::size_t i) const {
    return {words.data() + i * words_per_code, words_per_code};
  }
};

CodeBook encode(const HashModel& model, const FeatureMatrix& features);
/// Encodes already-projected values (rows x bits, row-major).
CodeBook encode_projected(std::span<const double> projected, std::size_t rows, std::size_t bits);

/// popcount(a XOR b) summed over words.
std::uint32_t hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// Restricts candidates to pixels within a Chebyshev radius of the query.
struct SearchWindow {
  std::uint32_t radius = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
};

struct KnnResult {
  // Ordered by (distance, pixel index).
  std::vector<std::uint32_t> indices;
  // Set when the candidate pool held fewer than K pixels.
  bool short_pool = false;
};

/// K nearest codes to `query` by Hamming distance, query excluded; ties by
/// ascending pixel index.
KnnResult knn_hamming(const CodeBook& codes, std::uint32_t query, std::size_t k,
                      const std::optional<SearchWindow>& window = std::nullopt);

/// Exact Euclidean counterpart of knn_hamming over feature rows.
KnnResult knn_exhaustive(const FeatureMatrix& features, std::uint32_t query, std::size_t k,
                         const std::optional<SearchWindow>& window = std::nullopt);

/// Reusable Hamming searcher with per-instance scratch buffers. Not thread-safe;
/// use one per thread.
class HammingSearcher {
 public:
  HammingSearcher(const CodeBook& codes, std::optional<SearchWindow> window);
  /// Writes neighbors of `query` to `out` (cleared first). Returns false when
  /// the pool was short.
  bool query(std::uint32_t query, std::size_t k, std::vector<std::uint32_t>& out);

 private:
  template <std::size_t Words>
  void scan(std::uint32_t query);
  std::size_t count_at_most(std::uint16_t t) const;

  const CodeBook* codes_;
  std::optional<SearchWindow> window_;
  std::vector<std::uint32_t> candidates_;
  std::vector<std::uint16_t> distances_;
  std::uint16_t last_cutoff_ = 0;
};

}  // namespace scribblefill
