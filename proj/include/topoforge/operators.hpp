#pragma once

#include <string>
#include <string_view>

#include "topoforge/complex.hpp"
#include "topoforge/sparse.hpp"

namespace topoforge {

/// Boundary operator B_{r-1,r}, shape n_{r-1} x n_r.
///
/// Signed entries follow ascending-vertex orientation: on a simplicial
/// complex the face that deletes the i-th vertex gets (-1)^i; on a cell
/// complex (or graph) an edge (u,v), u < v, has -1 at u and +1 at v, and a
/// 2-cell contributes +1 for each boundary edge it traverses u->v and -1 for
/// v->u. Hypergraphs and combinatorial complexes only have the unsigned
/// membership incidence. Throws std::invalid_argument when rank r-1 or r is
/// missing or when a signed operator is requested where none exists.
SparseOperator boundary_matrix(const Complex& c, int r, bool is_signed);

enum class Via { up, down };

/// Unsigned adjacency on rank r through shared cofaces (up) or faces (down).
SparseOperator adjacency_matrix(const Complex& c, int r, Via via);

enum class NeighborhoodKind { up_incidence, down_incidence, up_adjacency, down_adjacency, identity };

std::string_view to_string(NeighborhoodKind kind);
NeighborhoodKind parse_neighborhood_kind(std::string_view text);

/// A neighborhood function targeting cells of `rank`.
struct NeighborhoodSpec {
  NeighborhoodKind kind = NeighborhoodKind::identity;
  int rank = 0;
  bool is_signed = false;

  /// Rank of the cells that send messages.
  int source_rank() const;
  /// Whether the complex has the ranks this neighborhood needs.
  bool resolvable_on(const Complex& c) const;
  /// Same check against a bare rank count (ranks 0..max_rank populated).
  bool resolvable_with_max_rank(int max_rank, DomainKind kind) const;
  std::string to_string() const;

  friend bool operator==(const NeighborhoodSpec&, const NeighborhoodSpec&) = default;
};

/// Operator of shape n_rank x n_source: up_incidence is B_{r,r+1},
/// down_incidence is B_{r-1,r} transposed, adjacency kinds as in
/// adjacency_matrix, identity is I.
SparseOperator resolve_neighborhood(const Complex& c, const NeighborhoodSpec& spec);

}  // namespace topoforge
