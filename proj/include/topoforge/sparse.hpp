#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "topoforge/matrix.hpp"

namespace topoforge {

struct SparseEntry {
  std::size_t row;
  std::size_t col;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Rank-to-rank linear map between cochain spaces. Columns index source-rank
/// cells, rows index target-rank cells. Entries are sorted row-major with
/// unique coordinates; row offsets are kept alongside so rows can be scanned
/// like CSR.
class SparseOperator {
 public:
  struct Meta {
    int source_rank = 0;
    int target_rank = 0;
    bool is_signed = false;

    friend bool operator==(const Meta&, const Meta&) = default;
  };

  SparseOperator() : row_offsets_(1, 0) {}

  /// Sorts the triplets. Duplicate coordinates are summed when
  /// `accumulate` is set, otherwise rejected. Explicit zeros are dropped.
  static SparseOperator from_triplets(std::size_t rows, std::size_t cols,
                                      std::vector<SparseEntry> entries, Meta meta,
                                      bool accumulate = false);
  static SparseOperator identity(std::size_t n, int rank);
  static SparseOperator from_dense(const DenseMatrix& dense, Meta meta);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return entries_.size(); }
  const Meta& meta() const { return meta_; }
  std::span<const SparseEntry> entries() const { return entries_; }

  /// Entries of row `r`.
  std::span<const SparseEntry> row(std::size_t r) const {
    return {entries_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }

  double at(std::size_t r, std::size_t c) const;

  SparseOperator transposed() const;
  SparseOperator abs() const;
  /// Divide every row by its number of stored entries (empty rows stay empty).
  SparseOperator row_normalized() const;
  /// Keep off-diagonal support only, with every value set to 1.
  SparseOperator off_diagonal_support() const;
  DenseMatrix to_dense() const;
  bool is_zero() const { return entries_.empty(); }

  friend bool operator==(const SparseOperator&, const SparseOperator&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<SparseEntry> entries_;
  std::vector<std::size_t> row_offsets_;
  Meta meta_;
};

/// Sparse-sparse product a * b. Metadata: source of b, target of a.
SparseOperator multiply(const SparseOperator& a, const SparseOperator& b);

/// Block-diagonal assembly; block i occupies its own row and column range.
SparseOperator block_diagonal(std::span<const SparseOperator> blocks);

}  // namespace topoforge
