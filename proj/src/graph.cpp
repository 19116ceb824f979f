#include "topoforge/graph.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <string>

#include "topoforge/error.hpp"

namespace topoforge {

BuiltGraph build_graph(std::size_t num_nodes, std::span<const std::pair<NodeId, NodeId>> raw_edges,
                       std::optional<DenseMatrix> features,
                       std::optional<std::vector<std::int64_t>> labels) {
  BuiltGraph out;
  out.graph.num_nodes = num_nodes;
  auto& edges = out.graph.edges;
  edges.reserve(raw_edges.size());
  for (const auto& [a, b] : raw_edges) {
    if (a >= num_nodes || b >= num_nodes)
      throw std::out_of_range("build_graph: edge (" + std::to_string(a) + "," + std::to_string(b) +
                              ") has an endpoint >= num_nodes " + std::to_string(num_nodes));
    if (a == b) {
      ++out.report.self_loops_dropped;
      continue;
    }
    edges.push_back({std::min(a, b), std::max(a, b)});
  }
  std::sort(edges.begin(), edges.end());
  const auto last = std::unique(edges.begin(), edges.end());
  out.report.duplicates_dropped = static_cast<std::size_t>(edges.end() - last);
  edges.erase(last, edges.end());

  if (features && features->rows() != num_nodes)
    throw SchemaError("build_graph: feature matrix has " + std::to_string(features->rows()) +
                      " rows, expected " + std::to_string(num_nodes));
  if (labels && labels->size() != num_nodes)
    throw SchemaError("build_graph: " + std::to_string(labels->size()) + " labels for " +
                      std::to_string(num_nodes) + " nodes");
  out.graph.node_features = std::move(features);
  out.graph.node_labels = std::move(labels);
  return out;
}

std::vector<std::vector<NodeId>> adjacency_lists(const Graph& g) {
  std::vector<std::vector<NodeId>> adj(g.num_nodes);
  for (const auto& [u, v] : g.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

std::size_t count_components(const Graph& g) {
  const auto adj = adjacency_lists(g);
  std::vector<char> seen(g.num_nodes, 0);
  std::size_t components = 0;
  std::queue<NodeId> frontier;
  for (NodeId s = 0; s < g.num_nodes; ++s) {
    if (seen[s]) continue;
    ++components;
    seen[s] = 1;
    frontier.push(s);
    while (!frontier.empty()) {
      const NodeId u = frontier.front();
      frontier.pop();
      for (NodeId w : adj[u])
        if (!seen[w]) {
          seen[w] = 1;
          frontier.push(w);
        }
    }
  }
  return components;
}

}  // namespace topoforge
