#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "topoforge/graph.hpp"
#include "topoforge/matrix.hpp"

namespace topoforge {

/// Strictly increasing node ids. A simplex of rank r has r + 1 vertices.
using Cell = std::vector<NodeId>;

/// Downward-closed family of simplices. cells[r] holds the rank-r simplices
/// in lexicographic order; cells[0] is every node. A rank may be present but
/// empty (e.g. a clique complex with no tetrahedra).
struct SimplicialComplex {
  std::size_t num_nodes = 0;
  std::vector<std::vector<Cell>> cells;

  int max_rank() const { return static_cast<int>(cells.size()) - 1; }
  friend bool operator==(const SimplicialComplex&, const SimplicialComplex&) = default;
};

/// Regular cell complex of dimension <= 2. Each 2-cell is a cycle of the
/// 1-skeleton in canonical form: v0 is the minimal vertex and v1 < v_{m-1}.
struct CellComplex {
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;
  std::vector<Cell> two_cells;

  friend bool operator==(const CellComplex&, const CellComplex&) = default;
};

struct Hypergraph {
  std::size_t num_nodes = 0;
  /// Sorted node sets, deduplicated, in lexicographic order.
  std::vector<Cell> hyperedges;

  friend bool operator==(const Hypergraph&, const Hypergraph&) = default;
};

/// Node subsets with an order-preserving rank function. The rank of a cell
/// is the index of the list holding it.
struct CombinatorialComplex {
  std::size_t num_nodes = 0;
  std::vector<std::vector<Cell>> cells;

  int max_rank() const { return static_cast<int>(cells.size()) - 1; }
  friend bool operator==(const CombinatorialComplex&, const CombinatorialComplex&) = default;
};

enum class DomainKind { graph, simplicial, cell, hypergraph, combinatorial };

std::string_view to_string(DomainKind kind);
DomainKind parse_domain_kind(std::string_view text);

using Complex = std::variant<Graph, SimplicialComplex, CellComplex, Hypergraph, CombinatorialComplex>;

DomainKind kind_of(const Complex& c);
std::size_t num_nodes(const Complex& c);
int max_rank(const Complex& c);
/// Number of cells of rank r (0 when r is outside 0..max_rank).
std::size_t num_cells(const Complex& c, int rank);

/// A complex with one feature matrix (cochain) per rank 0..max_rank, plus
/// optional supervision carried over from the source graph.
struct FeaturedComplex {
  Complex complex;
  std::vector<DenseMatrix> features;
  std::optional<std::vector<std::int64_t>> labels;
  std::optional<std::vector<double>> targets;
  std::optional<double> graph_label;

  friend bool operator==(const FeaturedComplex&, const FeaturedComplex&) = default;
};

struct Violation {
  std::string invariant;  // e.g. "closure", "order-preserving"
  std::string cell;       // offending cell rendered as "{0,1,2}" or "(0,1,2)"
  std::string detail;

  std::string message() const;
};

/// nullopt when every invariant of the domain type holds, otherwise the first
/// violated invariant and the cell it was detected at.
std::optional<Violation> validate_complex(const Complex& c);

/// Adds the feature-shape invariants to validate_complex.
std::optional<Violation> validate_featured(const FeaturedComplex& fc);

struct CellCount {
  int rank = 0;
  std::size_t count = 0;
  bool hyperedges = false;  // hypergraph row, reported as "hyperedges"

  std::string label() const { return hyperedges ? "hyperedges" : std::to_string(rank); }
  friend bool operator==(const CellCount&, const CellCount&) = default;
};

std::vector<CellCount> cell_counts(const Complex& c);
/// Counts as plain numbers in rank order (hyperedges in position 1).
std::vector<std::size_t> count_vector(const Complex& c);

std::string format_cell(std::span<const NodeId> cell, bool cyclic = false);

}  // namespace topoforge
