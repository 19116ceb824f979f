#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "topoforge/complex.hpp"
#include "topoforge/graph.hpp"

namespace topoforge {

// Structural liftings (graph -> higher-order domain).

/// Clique complex: every (r+1)-clique becomes an r-simplex, r <= max_dim.
/// The result always has ranks 0..max_dim, some possibly empty.
SimplicialComplex lift_clique(const Graph& g, int max_dim);

/// Same result as lift_clique, enumerating cliques from every root node in
/// parallel. Kept separate so the serial version stays the reference.
SimplicialComplex lift_clique_parallel(const Graph& g, int max_dim);

/// Neighborhood complex: each closed neighborhood {v} u N(v) with at most
/// max_dim+1 nodes becomes a simplex; larger ones contribute all of their
/// (max_dim+1)-subsets. Downward closed and deduplicated. Trailing empty
/// ranks above rank 1 are trimmed. Throws LiftingRefusal when a closed
/// neighborhood exceeds max_neighborhood_size.
SimplicialComplex lift_neighborhood(const Graph& g, int max_dim, std::size_t max_neighborhood_size);

/// Cycle cell complex: the 1-skeleton of g plus one 2-cell per fundamental
/// cycle of a BFS spanning forest (roots are the minimal node of each
/// component, neighbors expanded in ascending order). Cycles with more than
/// max_cell_length vertices are dropped when a cap is given.
CellComplex lift_cycle(const Graph& g, std::optional<std::size_t> max_cell_length = std::nullopt);

/// Closed k-hop balls, one per node (before deduplication).
std::vector<Cell> khop_balls(const Graph& g, int k);

/// Hypergraph of deduplicated closed k-hop balls.
Hypergraph lift_khop(const Graph& g, int k);

/// Hypergraph with one hyperedge per node: the node plus its k nearest
/// other nodes by Euclidean feature distance (ties to the lower id). Fewer
/// than k other nodes: all of them. Featureless graphs use all-ones features.
Hypergraph lift_knn(const Graph& g, int k);

// Feature lifting.

/// Projected sum: features[r] = |B_{r-1,r}|ᵀ · features[r-1] for r >= 1,
/// starting from the given 0-cell features.
std::vector<DenseMatrix> lift_features_projected_sum(const Complex& target, const DenseMatrix& node_features);

// Lifting pair.

struct CliqueLifting {
  int max_dim = 2;
  friend bool operator==(const CliqueLifting&, const CliqueLifting&) = default;
};
struct NeighborhoodLifting {
  int max_dim = 2;
  std::size_t max_neighborhood_size = 10;
  friend bool operator==(const NeighborhoodLifting&, const NeighborhoodLifting&) = default;
};
struct CycleLifting {
  std::optional<std::size_t> max_cell_length;
  friend bool operator==(const CycleLifting&, const CycleLifting&) = default;
};
struct KhopLifting {
  int k = 1;
  friend bool operator==(const KhopLifting&, const KhopLifting&) = default;
};
struct KnnLifting {
  int k = 1;
  friend bool operator==(const KnnLifting&, const KnnLifting&) = default;
};

using StructuralLifting = std::variant<CliqueLifting, NeighborhoodLifting, CycleLifting, KhopLifting, KnnLifting>;

enum class FeatureLifting { projected_sum };

struct LiftingConfig {
  StructuralLifting structural = CliqueLifting{};
  FeatureLifting feature = FeatureLifting::projected_sum;

  /// Empty when valid, otherwise one message per violated constraint.
  std::vector<std::string> violations() const;
  std::string name() const;
  /// Compact JSON with sorted keys; the canonical bytes of this config.
  std::string canonical_json() const;
  DomainKind target_kind() const;

  friend bool operator==(const LiftingConfig&, const LiftingConfig&) = default;
};

/// Structural lifting followed by the projected-sum feature lifting. Node
/// features, labels and targets carry over unchanged; a featureless graph
/// gets a single all-ones feature column.
FeaturedComplex apply_lifting(const Graph& g, const LiftingConfig& cfg);

/// Featureless fallback: n x 1 matrix of ones.
DenseMatrix default_node_features(std::size_t num_nodes);

}  // namespace topoforge
