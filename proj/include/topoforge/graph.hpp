#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "topoforge/matrix.hpp"

namespace topoforge {

using NodeId = std::uint32_t;

/// Undirected edge stored with u < v.
using Edge = std::array<NodeId, 2>;

/// Canonical node/edge container. Edges are sorted, duplicate-free and have
/// no self-loops; use build_graph to construct one from raw input.
struct Graph {
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;
  std::optional<DenseMatrix> node_features;
  std::optional<std::vector<std::int64_t>> node_labels;
  std::optional<std::vector<double>> node_targets;
  std::optional<double> graph_label;

  friend bool operator==(const Graph&, const Graph&) = default;
};

struct BuildReport {
  std::size_t duplicates_dropped = 0;
  std::size_t self_loops_dropped = 0;
};

struct BuiltGraph {
  Graph graph;
  BuildReport report;
};

/// Canonicalize raw (possibly reversed, repeated, looped) edges.
/// Throws std::out_of_range for an endpoint >= num_nodes and SchemaError
/// when the feature or label row count disagrees with num_nodes.
BuiltGraph build_graph(std::size_t num_nodes, std::span<const std::pair<NodeId, NodeId>> raw_edges,
                       std::optional<DenseMatrix> features = std::nullopt,
                       std::optional<std::vector<std::int64_t>> labels = std::nullopt);

/// Sorted neighbor lists.
std::vector<std::vector<NodeId>> adjacency_lists(const Graph& g);

/// Number of connected components (BFS).
std::size_t count_components(const Graph& g);

}  // namespace topoforge
