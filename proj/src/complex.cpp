#include "topoforge/complex.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace topoforge {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

Violation violation(std::string invariant, std::span<const NodeId> cell, std::string detail,
                    bool cyclic = false) {
  return {std::move(invariant), format_cell(cell, cyclic), std::move(detail)};
}

bool strictly_increasing(std::span<const NodeId> cell) {
  return std::adjacent_find(cell.begin(), cell.end(),
                            [](NodeId a, NodeId b) { return a >= b; }) == cell.end();
}

std::optional<Violation> check_set_cell(std::span<const NodeId> cell, std::size_t n) {
  if (cell.empty()) return violation("non-empty", cell, "cell has no vertices");
  if (!strictly_increasing(cell))
    return violation("sorted", cell, "vertices must be strictly increasing");
  if (cell.back() >= n)
    return violation("range", cell, "vertex " + std::to_string(cell.back()) + " >= num_nodes");
  return std::nullopt;
}

std::optional<Violation> check_edges(std::span<const Edge> edges, std::size_t n) {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (e[0] >= n || e[1] >= n)
      return violation("range", e, "endpoint >= num_nodes " + std::to_string(n));
    if (e[0] == e[1]) return violation("self-loop", e, "edges must join distinct nodes");
    if (e[0] > e[1]) return violation("sorted", e, "edge endpoints must satisfy u < v");
    if (i > 0 && !(edges[i - 1] < e)) {
      if (edges[i - 1] == e) return violation("duplicate", e, "edge listed twice");
      return violation("order", e, "edge list must be lexicographically sorted");
    }
  }
  return std::nullopt;
}

std::optional<Violation> check_sorted_unique(const std::vector<Cell>& cells, std::size_t i) {
  if (i == 0) return std::nullopt;
  if (cells[i - 1] == cells[i]) return violation("duplicate", cells[i], "cell listed twice");
  if (!(cells[i - 1] < cells[i]))
    return violation("order", cells[i], "cells must be lexicographically sorted");
  return std::nullopt;
}

std::optional<Violation> check_vertices(const std::vector<Cell>& rank0, std::size_t n) {
  if (rank0.size() != n)
    return Violation{"vertices", "", std::to_string(rank0.size()) + " 0-cells for " +
                                         std::to_string(n) + " nodes"};
  for (NodeId v = 0; v < n; ++v)
    if (rank0[v] != Cell{v})
      return violation("vertices", rank0[v], "0-cell " + std::to_string(v) + " must be {" +
                                                 std::to_string(v) + "}");
  return std::nullopt;
}

std::optional<Violation> validate(const Graph& g) {
  if (auto v = check_edges(g.edges, g.num_nodes)) return v;
  if (g.node_features && g.node_features->rows() != g.num_nodes)
    return Violation{"feature-rows", "", "feature matrix has " +
                                             std::to_string(g.node_features->rows()) + " rows"};
  return std::nullopt;
}

std::optional<Violation> validate(const SimplicialComplex& sc) {
  if (sc.cells.empty()) return Violation{"vertices", "", "no rank-0 cells"};
  if (auto v = check_vertices(sc.cells[0], sc.num_nodes)) return v;
  for (std::size_t r = 1; r < sc.cells.size(); ++r) {
    const auto& rank_cells = sc.cells[r];
    for (std::size_t i = 0; i < rank_cells.size(); ++i) {
      const Cell& s = rank_cells[i];
      if (auto v = check_set_cell(s, sc.num_nodes)) return v;
      if (s.size() != r + 1)
        return violation("rank", s, "listed at rank " + std::to_string(r) + " with " +
                                        std::to_string(s.size()) + " vertices");
      if (auto v = check_sorted_unique(rank_cells, i)) return v;
      const auto& faces = sc.cells[r - 1];
      Cell face(r);
      for (std::size_t drop = 0; drop <= r; ++drop) {
        std::size_t k = 0;
        for (std::size_t j = 0; j <= r; ++j)
          if (j != drop) face[k++] = s[j];
        if (!std::binary_search(faces.begin(), faces.end(), face))
          return violation("closure", s, "face " + format_cell(face) + " is missing");
      }
    }
  }
  return std::nullopt;
}

std::optional<Violation> validate(const CellComplex& cc) {
  if (auto v = check_edges(cc.edges, cc.num_nodes)) return v;
  std::set<Cell> seen;
  for (const Cell& cyc : cc.two_cells) {
    if (cyc.size() < 3) return violation("cycle-length", cyc, "2-cells need >= 3 vertices", true);
    for (NodeId v : cyc)
      if (v >= cc.num_nodes)
        return violation("range", cyc, "vertex " + std::to_string(v) + " >= num_nodes", true);
    Cell sorted = cyc;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      return violation("simple-cycle", cyc, "a vertex repeats", true);
    if (cyc.front() != sorted.front() || cyc[1] > cyc.back())
      return violation("canonical", cyc, "rotate to the minimal vertex with v1 < v_last", true);
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      const NodeId a = cyc[i];
      const NodeId b = cyc[(i + 1) % cyc.size()];
      const Edge e{std::min(a, b), std::max(a, b)};
      if (!std::binary_search(cc.edges.begin(), cc.edges.end(), e))
        return violation("attachment", cyc, "boundary edge " + format_cell(e) + " missing", true);
    }
    if (!seen.insert(cyc).second) return violation("duplicate", cyc, "2-cell listed twice", true);
  }
  return std::nullopt;
}

std::optional<Violation> validate(const Hypergraph& h) {
  for (std::size_t i = 0; i < h.hyperedges.size(); ++i) {
    if (auto v = check_set_cell(h.hyperedges[i], h.num_nodes)) return v;
    if (auto v = check_sorted_unique(h.hyperedges, i)) return v;
  }
  return std::nullopt;
}

std::optional<Violation> validate(const CombinatorialComplex& ccc) {
  std::set<Cell> seen;
  for (const auto& rank_cells : ccc.cells)
    for (const Cell& c : rank_cells) {
      if (auto v = check_set_cell(c, ccc.num_nodes)) return v;
      if (!seen.insert(c).second) return violation("duplicate", c, "cell appears twice");
    }
  for (std::size_t hi = 0; hi < ccc.cells.size(); ++hi)
    for (const Cell& x : ccc.cells[hi])
      for (std::size_t lo = 0; lo < hi; ++lo)
        for (const Cell& y : ccc.cells[lo])
          if (x.size() < y.size() && std::includes(y.begin(), y.end(), x.begin(), x.end()))
            return violation("order-preserving", x,
                             "rank " + std::to_string(hi) + " exceeds rank " + std::to_string(lo) +
                                 " of its superset " + format_cell(y));
  for (NodeId v = 0; v < ccc.num_nodes; ++v) {
    const Cell singleton{v};
    const bool at_rank0 = !ccc.cells.empty() && std::find(ccc.cells[0].begin(), ccc.cells[0].end(),
                                                          singleton) != ccc.cells[0].end();
    if (!at_rank0) return violation("singleton-rank", singleton, "every {v} must have rank 0");
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::graph: return "graph";
    case DomainKind::simplicial: return "simplicial";
    case DomainKind::cell: return "cell";
    case DomainKind::hypergraph: return "hypergraph";
    case DomainKind::combinatorial: return "combinatorial";
  }
  return "unknown";
}

DomainKind parse_domain_kind(std::string_view text) {
  for (auto k : {DomainKind::graph, DomainKind::simplicial, DomainKind::cell,
                 DomainKind::hypergraph, DomainKind::combinatorial})
    if (to_string(k) == text) return k;
  throw std::invalid_argument("unknown domain kind '" + std::string(text) + "'");
}

DomainKind kind_of(const Complex& c) { return static_cast<DomainKind>(c.index()); }

std::size_t num_nodes(const Complex& c) {
  return std::visit([](const auto& x) { return x.num_nodes; }, c);
}

int max_rank(const Complex& c) {
  return std::visit(Overloaded{
                        [](const Graph&) { return 1; },
                        [](const SimplicialComplex& x) { return x.max_rank(); },
                        [](const CellComplex&) { return 2; },
                        [](const Hypergraph&) { return 1; },
                        [](const CombinatorialComplex& x) { return x.max_rank(); },
                    },
                    c);
}

std::size_t num_cells(const Complex& c, int rank) {
  if (rank < 0 || rank > max_rank(c)) return 0;
  if (rank == 0) return num_nodes(c);
  const auto r = static_cast<std::size_t>(rank);
  return std::visit(Overloaded{
                        [](const Graph& g) { return g.edges.size(); },
                        [r](const SimplicialComplex& x) { return x.cells[r].size(); },
                        [r](const CellComplex& x) { return r == 1 ? x.edges.size() : x.two_cells.size(); },
                        [](const Hypergraph& h) { return h.hyperedges.size(); },
                        [r](const CombinatorialComplex& x) { return x.cells[r].size(); },
                    },
                    c);
}

std::string Violation::message() const {
  std::string out = "violation '" + invariant + "'";
  if (!cell.empty()) out += " at " + cell;
  if (!detail.empty()) out += ": " + detail;
  return out;
}

std::optional<Violation> validate_complex(const Complex& c) {
  return std::visit([](const auto& x) { return validate(x); }, c);
}

std::optional<Violation> validate_featured(const FeaturedComplex& fc) {
  if (auto v = validate_complex(fc.complex)) return v;
  const int top = max_rank(fc.complex);
  if (!fc.features.empty() && static_cast<int>(fc.features.size()) != top + 1)
    return Violation{"feature-ranks", "", std::to_string(fc.features.size()) +
                                              " feature matrices for ranks 0.." +
                                              std::to_string(top)};
  for (std::size_t r = 0; r < fc.features.size(); ++r) {
    const std::size_t expected = num_cells(fc.complex, static_cast<int>(r));
    if (fc.features[r].rows() != expected)
      return Violation{"feature-rows", "",
                       "rank " + std::to_string(r) + " has " + std::to_string(fc.features[r].rows()) +
                           " feature rows for " + std::to_string(expected) + " cells"};
    if (!fc.features[r].all_finite())
      return Violation{"finite", "", "rank " + std::to_string(r) + " has non-finite features"};
  }
  const std::size_t n = num_nodes(fc.complex);
  if (fc.labels && fc.labels->size() != n)
    return Violation{"label-rows", "", std::to_string(fc.labels->size()) + " labels for " +
                                           std::to_string(n) + " nodes"};
  if (fc.targets && fc.targets->size() != n)
    return Violation{"target-rows", "", std::to_string(fc.targets->size()) + " targets for " +
                                            std::to_string(n) + " nodes"};
  return std::nullopt;
}

std::vector<CellCount> cell_counts(const Complex& c) {
  std::vector<CellCount> out;
  const std::size_t n = num_nodes(c);
  out.push_back({0, n, false});
  std::visit(Overloaded{
                 [&](const Graph& g) {
                   if (!g.edges.empty()) out.push_back({1, g.edges.size(), false});
                 },
                 [&](const SimplicialComplex& x) {
                   for (int r = 1; r <= x.max_rank(); ++r)
                     out.push_back({r, x.cells[static_cast<std::size_t>(r)].size(), false});
                 },
                 [&](const CellComplex& x) {
                   out.push_back({1, x.edges.size(), false});
                   out.push_back({2, x.two_cells.size(), false});
                 },
                 [&](const Hypergraph& h) { out.push_back({1, h.hyperedges.size(), true}); },
                 [&](const CombinatorialComplex& x) {
                   for (int r = 1; r <= x.max_rank(); ++r)
                     out.push_back({r, x.cells[static_cast<std::size_t>(r)].size(), false});
                 },
             },
             c);
  return out;
}

std::vector<std::size_t> count_vector(const Complex& c) {
  std::vector<std::size_t> out;
  for (const auto& cc : cell_counts(c)) out.push_back(cc.count);
  return out;
}

std::string format_cell(std::span<const NodeId> cell, bool cyclic) {
  std::string out = cyclic ? "(" : "{";
  for (std::size_t i = 0; i < cell.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(cell[i]);
  }
  out += cyclic ? ")" : "}";
  return out;
}

}  // namespace topoforge
