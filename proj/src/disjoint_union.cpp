#include "topoforge/disjoint_union.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>

namespace topoforge {

namespace {

Cell shifted(const Cell& c, NodeId offset) {
  Cell out(c);
  for (auto& v : out) v += offset;
  return out;
}

void append_ranked(std::vector<std::vector<Cell>>& dst, const std::vector<std::vector<Cell>>& src,
                   NodeId offset) {
  if (dst.size() < src.size()) dst.resize(src.size());
  for (std::size_t r = 0; r < src.size(); ++r)
    for (const Cell& c : src[r]) dst[r].push_back(shifted(c, offset));
}

Complex empty_like(const Complex& c) {
  return std::visit([](const auto& x) -> Complex { return std::decay_t<decltype(x)>{}; }, c);
}

void append(Complex& dst, const Complex& src, NodeId offset) {
  std::visit(
      [&](auto& d) {
        using T = std::decay_t<decltype(d)>;
        const T& s = std::get<T>(src);
        d.num_nodes += s.num_nodes;
        if constexpr (std::is_same_v<T, Graph> || std::is_same_v<T, CellComplex>) {
          for (const auto& e : s.edges) d.edges.push_back({e[0] + offset, e[1] + offset});
        }
        if constexpr (std::is_same_v<T, CellComplex>) {
          for (const auto& c : s.two_cells) d.two_cells.push_back(shifted(c, offset));
        }
        if constexpr (std::is_same_v<T, Hypergraph>) {
          for (const auto& c : s.hyperedges) d.hyperedges.push_back(shifted(c, offset));
        }
        if constexpr (std::is_same_v<T, SimplicialComplex> || std::is_same_v<T, CombinatorialComplex>) {
          append_ranked(d.cells, s.cells, offset);
        }
      },
      dst);
}

}  // namespace

UnionResult disjoint_union(std::span<const FeaturedComplex> samples) {
  if (samples.empty()) throw std::invalid_argument("disjoint_union: no samples");
  const DomainKind kind = kind_of(samples.front().complex);
  int top = 0;
  for (const auto& s : samples) {
    if (kind_of(s.complex) != kind)
      throw std::invalid_argument("disjoint_union: mixed domain kinds " +
                                  std::string(to_string(kind)) + " and " +
                                  std::string(to_string(kind_of(s.complex))));
    top = std::max(top, max_rank(s.complex));
  }

  const bool has_features = !samples.front().features.empty();
  std::vector<std::optional<std::size_t>> widths(static_cast<std::size_t>(top) + 1);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.features.empty() == has_features)
      throw std::invalid_argument("disjoint_union: sample " + std::to_string(i) +
                                  " disagrees on feature presence");
    for (std::size_t r = 0; r < s.features.size(); ++r) {
      if (!widths[r]) widths[r] = s.features[r].cols();
      if (*widths[r] != s.features[r].cols())
        throw std::invalid_argument("disjoint_union: width mismatch at rank " + std::to_string(r) +
                                    " (" + std::to_string(*widths[r]) + " vs " +
                                    std::to_string(s.features[r].cols()) + ") in sample " +
                                    std::to_string(i));
    }
  }

  UnionResult out;
  out.complex.complex = empty_like(samples.front().complex);
  out.batch.resize(static_cast<std::size_t>(top) + 1);
  NodeId offset = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    append(out.complex.complex, samples[i].complex, offset);
    offset += static_cast<NodeId>(num_nodes(samples[i].complex));
    for (int r = 0; r <= top; ++r)
      out.batch[static_cast<std::size_t>(r)].insert(out.batch[static_cast<std::size_t>(r)].end(),
                                                    num_cells(samples[i].complex, r), i);
  }
  // Keep the padded rank structure even when no sample populates a rank.
  std::visit(
      [&](auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, SimplicialComplex> || std::is_same_v<T, CombinatorialComplex>)
          d.cells.resize(static_cast<std::size_t>(top) + 1);
      },
      out.complex.complex);

  if (has_features) {
    for (int r = 0; r <= top; ++r) {
      const auto ur = static_cast<std::size_t>(r);
      const std::size_t width = widths[ur].value_or(0);
      std::vector<DenseMatrix> parts;
      for (const auto& s : samples)
        parts.push_back(ur < s.features.size() ? s.features[ur] : DenseMatrix(0, width));
      out.complex.features.push_back(vstack(parts));
    }
  }

  auto concat_optional = [&](auto member) {
    using V = std::decay_t<decltype(*(samples.front().*member))>;
    if (!(samples.front().*member)) return std::optional<V>{};
    V merged;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& part = samples[i].*member;
      if (!part)
        throw std::invalid_argument("disjoint_union: sample " + std::to_string(i) +
                                    " is missing node annotations present in sample 0");
      merged.insert(merged.end(), part->begin(), part->end());
    }
    return std::optional<V>{std::move(merged)};
  };
  out.complex.labels = concat_optional(&FeaturedComplex::labels);
  out.complex.targets = concat_optional(&FeaturedComplex::targets);
  if (samples.size() == 1) out.complex.graph_label = samples.front().graph_label;
  return out;
}

void pad_to_rank(FeaturedComplex& fc, int rank, std::size_t width) {
  std::visit(
      [&](auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, SimplicialComplex> || std::is_same_v<T, CombinatorialComplex>) {
          if (d.max_rank() >= rank) return;
          d.cells.resize(static_cast<std::size_t>(rank) + 1);
          if (!fc.features.empty())
            while (fc.features.size() < d.cells.size()) fc.features.emplace_back(0, width);
        } else if (max_rank(fc.complex) < rank) {
          throw std::invalid_argument("pad_to_rank: " + std::string(to_string(kind_of(fc.complex))) +
                                      " has a fixed rank structure");
        }
      },
      fc.complex);
}

}  // namespace topoforge
