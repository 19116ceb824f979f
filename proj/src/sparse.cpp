#include "topoforge/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace topoforge {

SparseOperator SparseOperator::from_triplets(std::size_t rows, std::size_t cols,
                                             std::vector<SparseEntry> entries, Meta meta,
                                             bool accumulate) {
  for (const auto& e : entries)
    if (e.row >= rows || e.col >= cols)
      throw std::out_of_range("SparseOperator: entry (" + std::to_string(e.row) + "," +
                              std::to_string(e.col) + ") outside shape " + std::to_string(rows) +
                              "x" + std::to_string(cols));
  std::sort(entries.begin(), entries.end(), [](const SparseEntry& a, const SparseEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseOperator op;
  op.rows_ = rows;
  op.cols_ = cols;
  op.meta_ = meta;
  op.entries_.reserve(entries.size());
  for (const auto& e : entries) {
    if (!op.entries_.empty() && op.entries_.back().row == e.row && op.entries_.back().col == e.col) {
      if (!accumulate)
        throw std::invalid_argument("SparseOperator: duplicate coordinate (" +
                                    std::to_string(e.row) + "," + std::to_string(e.col) + ")");
      op.entries_.back().value += e.value;
    } else {
      op.entries_.push_back(e);
    }
  }
  std::erase_if(op.entries_, [](const SparseEntry& e) { return e.value == 0.0; });

  op.row_offsets_.assign(rows + 1, 0);
  for (const auto& e : op.entries_) ++op.row_offsets_[e.row + 1];
  for (std::size_t r = 0; r < rows; ++r) op.row_offsets_[r + 1] += op.row_offsets_[r];
  return op;
}

SparseOperator SparseOperator::identity(std::size_t n, int rank) {
  std::vector<SparseEntry> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(entries), {rank, rank, false});
}

SparseOperator SparseOperator::from_dense(const DenseMatrix& dense, Meta meta) {
  std::vector<SparseEntry> entries;
  for (std::size_t i = 0; i < dense.rows(); ++i)
    for (std::size_t j = 0; j < dense.cols(); ++j)
      if (dense(i, j) != 0.0) entries.push_back({i, j, dense(i, j)});
  return from_triplets(dense.rows(), dense.cols(), std::move(entries), meta);
}

double SparseOperator::at(std::size_t r, std::size_t c) const {
  const auto row_entries = row(r);
  const auto it = std::lower_bound(row_entries.begin(), row_entries.end(), c,
                                   [](const SparseEntry& e, std::size_t col) { return e.col < col; });
  return (it != row_entries.end() && it->col == c) ? it->value : 0.0;
}

SparseOperator SparseOperator::transposed() const {
  std::vector<SparseEntry> entries;
  entries.reserve(entries_.size());
  for (const auto& e : entries_) entries.push_back({e.col, e.row, e.value});
  return from_triplets(cols_, rows_, std::move(entries),
                       {meta_.target_rank, meta_.source_rank, meta_.is_signed});
}

SparseOperator SparseOperator::abs() const {
  SparseOperator out = *this;
  for (auto& e : out.entries_) e.value = std::abs(e.value);
  out.meta_.is_signed = false;
  return out;
}

SparseOperator SparseOperator::row_normalized() const {
  SparseOperator out = *this;
  for (std::size_t r = 0; r < rows_; ++r) {
    const std::size_t count = row_offsets_[r + 1] - row_offsets_[r];
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
      out.entries_[k].value /= static_cast<double>(count);
  }
  return out;
}

SparseOperator SparseOperator::off_diagonal_support() const {
  std::vector<SparseEntry> entries;
  entries.reserve(entries_.size());
  for (const auto& e : entries_)
    if (e.row != e.col) entries.push_back({e.row, e.col, 1.0});
  return from_triplets(rows_, cols_, std::move(entries), {meta_.source_rank, meta_.target_rank, false});
}

DenseMatrix SparseOperator::to_dense() const {
  DenseMatrix dense(rows_, cols_);
  for (const auto& e : entries_) dense(e.row, e.col) = e.value;
  return dense;
}

SparseOperator multiply(const SparseOperator& a, const SparseOperator& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("multiply: inner dimensions " + std::to_string(a.cols()) + " and " +
                                std::to_string(b.rows()) + " differ");
  // Row-by-row Gustavson product with a dense accumulator per row.
  std::vector<SparseEntry> out;
  std::vector<double> acc(b.cols(), 0.0);
  std::vector<char> touched(b.cols(), 0);
  std::vector<std::size_t> cols_in_row;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    cols_in_row.clear();
    for (const auto& ea : a.row(i)) {
      for (const auto& eb : b.row(ea.col)) {
        if (!touched[eb.col]) {
          touched[eb.col] = 1;
          cols_in_row.push_back(eb.col);
        }
        acc[eb.col] += ea.value * eb.value;
      }
    }
    std::sort(cols_in_row.begin(), cols_in_row.end());
    for (std::size_t c : cols_in_row) {
      out.push_back({i, c, acc[c]});
      acc[c] = 0.0;
      touched[c] = 0;
    }
  }
  return SparseOperator::from_triplets(
      a.rows(), b.cols(), std::move(out),
      {b.meta().source_rank, a.meta().target_rank, a.meta().is_signed || b.meta().is_signed});
}

SparseOperator block_diagonal(std::span<const SparseOperator> blocks) {
  std::size_t rows = 0, cols = 0, nnz = 0;
  for (const auto& blk : blocks) {
    rows += blk.rows();
    cols += blk.cols();
    nnz += blk.nnz();
  }
  std::vector<SparseEntry> entries;
  entries.reserve(nnz);
  std::size_t row_offset = 0, col_offset = 0;
  for (const auto& blk : blocks) {
    for (const auto& e : blk.entries())
      entries.push_back({e.row + row_offset, e.col + col_offset, e.value});
    row_offset += blk.rows();
    col_offset += blk.cols();
  }
  SparseOperator::Meta meta = blocks.empty() ? SparseOperator::Meta{} : blocks.front().meta();
  return SparseOperator::from_triplets(rows, cols, std::move(entries), meta);
}

}  // namespace topoforge
