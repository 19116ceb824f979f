#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "topoforge/complex.hpp"

namespace topoforge {

struct UnionResult {
  FeaturedComplex complex;
  /// batch[r][i] = index of the sample that contributed cell i of rank r.
  std::vector<std::vector<std::size_t>> batch;
};

/// Disjoint union with node ids offset per sample and features stacked per
/// rank. Inputs must share the domain kind and the feature width of every
/// rank they populate; simplicial and combinatorial inputs with fewer ranks
/// are padded with empty ranks. Every operator of the result is the
/// block-diagonal assembly of the per-sample operators.
UnionResult disjoint_union(std::span<const FeaturedComplex> samples);

/// Extend a simplicial or combinatorial complex with empty ranks up to
/// `rank`, adding 0-row feature matrices of width `width`. No-op when the
/// complex already reaches `rank`.
void pad_to_rank(FeaturedComplex& fc, int rank, std::size_t width);

}  // namespace topoforge
