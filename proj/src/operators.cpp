#include "topoforge/operators.hpp"

#include <algorithm>
#include <stdexcept>

namespace topoforge {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::size_t index_of(const std::vector<Cell>& sorted_cells, const Cell& cell) {
  const auto it = std::lower_bound(sorted_cells.begin(), sorted_cells.end(), cell);
  if (it == sorted_cells.end() || *it != cell)
    throw std::logic_error("boundary_matrix: face " + format_cell(cell) + " not in complex");
  return static_cast<std::size_t>(it - sorted_cells.begin());
}

std::size_t index_of(const std::vector<Edge>& edges, const Edge& e) {
  const auto it = std::lower_bound(edges.begin(), edges.end(), e);
  if (it == edges.end() || *it != e)
    throw std::logic_error("boundary_matrix: edge " + format_cell(e) + " not in complex");
  return static_cast<std::size_t>(it - edges.begin());
}

SparseOperator node_edge_incidence(std::size_t n, const std::vector<Edge>& edges, bool is_signed) {
  std::vector<SparseEntry> entries;
  entries.reserve(2 * edges.size());
  for (std::size_t j = 0; j < edges.size(); ++j) {
    entries.push_back({edges[j][0], j, is_signed ? -1.0 : 1.0});
    entries.push_back({edges[j][1], j, 1.0});
  }
  return SparseOperator::from_triplets(n, edges.size(), std::move(entries), {1, 0, is_signed});
}

SparseOperator simplicial_boundary(const SimplicialComplex& sc, int r, bool is_signed) {
  const auto& faces = sc.cells[static_cast<std::size_t>(r - 1)];
  const auto& simplices = sc.cells[static_cast<std::size_t>(r)];
  std::vector<SparseEntry> entries;
  entries.reserve(simplices.size() * static_cast<std::size_t>(r + 1));
  Cell face(static_cast<std::size_t>(r));
  for (std::size_t j = 0; j < simplices.size(); ++j) {
    const Cell& s = simplices[j];
    for (std::size_t drop = 0; drop < s.size(); ++drop) {
      std::size_t k = 0;
      for (std::size_t i = 0; i < s.size(); ++i)
        if (i != drop) face[k++] = s[i];
      const double sign = (drop % 2 == 0) ? 1.0 : -1.0;
      entries.push_back({index_of(faces, face), j, is_signed ? sign : 1.0});
    }
  }
  return SparseOperator::from_triplets(faces.size(), simplices.size(), std::move(entries),
                                       {r, r - 1, is_signed});
}

SparseOperator cycle_boundary(const CellComplex& cc, bool is_signed) {
  std::vector<SparseEntry> entries;
  for (std::size_t j = 0; j < cc.two_cells.size(); ++j) {
    const Cell& cyc = cc.two_cells[j];
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      const NodeId a = cyc[i];
      const NodeId b = cyc[(i + 1) % cyc.size()];
      const double sign = a < b ? 1.0 : -1.0;
      entries.push_back({index_of(cc.edges, Edge{std::min(a, b), std::max(a, b)}), j,
                         is_signed ? sign : 1.0});
    }
  }
  return SparseOperator::from_triplets(cc.edges.size(), cc.two_cells.size(), std::move(entries),
                                       {2, 1, is_signed}, /*accumulate=*/true);
}

SparseOperator membership_incidence(std::size_t n, const std::vector<Cell>& sets) {
  std::vector<SparseEntry> entries;
  for (std::size_t j = 0; j < sets.size(); ++j)
    for (NodeId v : sets[j]) entries.push_back({v, j, 1.0});
  return SparseOperator::from_triplets(n, sets.size(), std::move(entries), {1, 0, false});
}

SparseOperator subset_incidence(const std::vector<Cell>& lower, const std::vector<Cell>& upper, int r) {
  std::vector<SparseEntry> entries;
  for (std::size_t j = 0; j < upper.size(); ++j)
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (std::includes(upper[j].begin(), upper[j].end(), lower[i].begin(), lower[i].end()))
        entries.push_back({i, j, 1.0});
  return SparseOperator::from_triplets(lower.size(), upper.size(), std::move(entries),
                                       {r, r - 1, false});
}

}  // namespace

SparseOperator boundary_matrix(const Complex& c, int r, bool is_signed) {
  if (r < 1 || r > max_rank(c))
    throw std::invalid_argument("boundary_matrix: rank " + std::to_string(r) + " needs ranks " +
                                std::to_string(r - 1) + " and " + std::to_string(r) + " on a " +
                                std::string(to_string(kind_of(c))) + " with max rank " +
                                std::to_string(max_rank(c)));
  return std::visit(
      Overloaded{
          [&](const Graph& g) { return node_edge_incidence(g.num_nodes, g.edges, is_signed); },
          [&](const SimplicialComplex& sc) { return simplicial_boundary(sc, r, is_signed); },
          [&](const CellComplex& cc) {
            return r == 1 ? node_edge_incidence(cc.num_nodes, cc.edges, is_signed)
                          : cycle_boundary(cc, is_signed);
          },
          [&](const Hypergraph& h) {
            if (is_signed)
              throw std::invalid_argument("boundary_matrix: hypergraphs have no signed incidence");
            return membership_incidence(h.num_nodes, h.hyperedges);
          },
          [&](const CombinatorialComplex& ccc) {
            if (is_signed)
              throw std::invalid_argument(
                  "boundary_matrix: combinatorial complexes have no signed incidence");
            const auto ur = static_cast<std::size_t>(r);
            return subset_incidence(ccc.cells[ur - 1], ccc.cells[ur], r);
          },
      },
      c);
}

SparseOperator adjacency_matrix(const Complex& c, int r, Via via) {
  if (via == Via::up) {
    if (r < 0 || r + 1 > max_rank(c))
      throw std::invalid_argument("adjacency_matrix: up adjacency at rank " + std::to_string(r) +
                                  " needs rank " + std::to_string(r + 1));
    const SparseOperator b = boundary_matrix(c, r + 1, false);
    const SparseOperator a = multiply(b, b.transposed()).off_diagonal_support();
    return SparseOperator::from_triplets(a.rows(), a.cols(), {a.entries().begin(), a.entries().end()},
                                         {r, r, false});
  }
  if (r < 1 || r > max_rank(c))
    throw std::invalid_argument("adjacency_matrix: down adjacency at rank " + std::to_string(r) +
                                " needs rank " + std::to_string(r - 1));
  const SparseOperator b = boundary_matrix(c, r, false);
  const SparseOperator a = multiply(b.transposed(), b).off_diagonal_support();
  return SparseOperator::from_triplets(a.rows(), a.cols(), {a.entries().begin(), a.entries().end()},
                                       {r, r, false});
}

std::string_view to_string(NeighborhoodKind kind) {
  switch (kind) {
    case NeighborhoodKind::up_incidence: return "up_incidence";
    case NeighborhoodKind::down_incidence: return "down_incidence";
    case NeighborhoodKind::up_adjacency: return "up_adjacency";
    case NeighborhoodKind::down_adjacency: return "down_adjacency";
    case NeighborhoodKind::identity: return "identity";
  }
  return "unknown";
}

NeighborhoodKind parse_neighborhood_kind(std::string_view text) {
  for (auto k : {NeighborhoodKind::up_incidence, NeighborhoodKind::down_incidence,
                 NeighborhoodKind::up_adjacency, NeighborhoodKind::down_adjacency,
                 NeighborhoodKind::identity})
    if (to_string(k) == text) return k;
  throw std::invalid_argument("unknown neighborhood kind '" + std::string(text) + "'");
}

int NeighborhoodSpec::source_rank() const {
  switch (kind) {
    case NeighborhoodKind::up_incidence: return rank + 1;
    case NeighborhoodKind::down_incidence: return rank - 1;
    default: return rank;
  }
}

bool NeighborhoodSpec::resolvable_with_max_rank(int top, DomainKind domain) const {
  if (rank < 0 || rank > top) return false;
  const bool adjacency = kind == NeighborhoodKind::up_adjacency || kind == NeighborhoodKind::down_adjacency;
  if (is_signed && (adjacency || kind == NeighborhoodKind::identity)) return false;
  if (is_signed && (domain == DomainKind::hypergraph || domain == DomainKind::combinatorial))
    return false;
  switch (kind) {
    case NeighborhoodKind::up_incidence:
    case NeighborhoodKind::up_adjacency: return rank + 1 <= top;
    case NeighborhoodKind::down_incidence:
    case NeighborhoodKind::down_adjacency: return rank >= 1;
    case NeighborhoodKind::identity: return true;
  }
  return false;
}

bool NeighborhoodSpec::resolvable_on(const Complex& c) const {
  return resolvable_with_max_rank(max_rank(c), kind_of(c));
}

std::string NeighborhoodSpec::to_string() const {
  return std::string(topoforge::to_string(kind)) + "(" + std::to_string(rank) + ")" +
         (is_signed ? "[signed]" : "");
}

SparseOperator resolve_neighborhood(const Complex& c, const NeighborhoodSpec& spec) {
  if (!spec.resolvable_on(c))
    throw std::invalid_argument("resolve_neighborhood: " + spec.to_string() +
                                " is not resolvable on a " + std::string(to_string(kind_of(c))) +
                                " with max rank " + std::to_string(max_rank(c)));
  switch (spec.kind) {
    case NeighborhoodKind::up_incidence: return boundary_matrix(c, spec.rank + 1, spec.is_signed);
    case NeighborhoodKind::down_incidence:
      return boundary_matrix(c, spec.rank, spec.is_signed).transposed();
    case NeighborhoodKind::up_adjacency: return adjacency_matrix(c, spec.rank, Via::up);
    case NeighborhoodKind::down_adjacency: return adjacency_matrix(c, spec.rank, Via::down);
    case NeighborhoodKind::identity:
      return SparseOperator::identity(num_cells(c, spec.rank), spec.rank);
  }
  throw std::logic_error("resolve_neighborhood: unhandled kind");
}

}  // namespace topoforge
