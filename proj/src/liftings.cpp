#include "topoforge/liftings.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

#include <json.hpp>

#include "topoforge/error.hpp"
#include "topoforge/kernels.hpp"
#include "topoforge/operators.hpp"

namespace topoforge {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::vector<std::vector<NodeId>> forward_neighbors(const Graph& g) {
  std::vector<std::vector<NodeId>> fwd(g.num_nodes);
  for (const auto& [u, v] : g.edges) fwd[u].push_back(v);  // edges are sorted, so lists are too
  return fwd;
}

// Depth-first extension of `clique` by candidates that are adjacent to every
// member. Candidates are kept sorted, so cliques come out in lexicographic
// order within each rank.
void extend_cliques(const std::vector<std::vector<NodeId>>& fwd, Cell& clique,
                    const std::vector<NodeId>& candidates, std::size_t max_size,
                    std::vector<std::vector<Cell>>& out) {
  std::vector<NodeId> next;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const NodeId w = candidates[i];
    clique.push_back(w);
    out[clique.size() - 1].push_back(clique);
    if (clique.size() < max_size) {
      next.clear();
      std::set_intersection(candidates.begin() + static_cast<std::ptrdiff_t>(i) + 1, candidates.end(),
                            fwd[w].begin(), fwd[w].end(), std::back_inserter(next));
      if (!next.empty()) extend_cliques(fwd, clique, next, max_size, out);
    }
    clique.pop_back();
  }
}

std::vector<std::vector<Cell>> cliques_from_root(const std::vector<std::vector<NodeId>>& fwd, NodeId root,
                                                 int max_dim) {
  std::vector<std::vector<Cell>> out(static_cast<std::size_t>(max_dim) + 1);
  Cell clique{root};
  out[0].push_back(clique);
  if (max_dim >= 1) extend_cliques(fwd, clique, fwd[root], static_cast<std::size_t>(max_dim) + 1, out);
  return out;
}

void check_max_dim(int max_dim) {
  if (max_dim < 1) throw std::invalid_argument("max_dim must be >= 1, got " + std::to_string(max_dim));
}

Cell canonical_cycle(Cell cyc) {
  const auto min_it = std::min_element(cyc.begin(), cyc.end());
  std::rotate(cyc.begin(), min_it, cyc.end());
  if (cyc[1] > cyc.back()) std::reverse(cyc.begin() + 1, cyc.end());
  return cyc;
}

void sort_unique(std::vector<Cell>& cells) {
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
}

}  // namespace

SimplicialComplex lift_clique(const Graph& g, int max_dim) {
  check_max_dim(max_dim);
  const auto fwd = forward_neighbors(g);
  SimplicialComplex sc{g.num_nodes, std::vector<std::vector<Cell>>(static_cast<std::size_t>(max_dim) + 1)};
  for (NodeId v = 0; v < g.num_nodes; ++v) {
    auto part = cliques_from_root(fwd, v, max_dim);
    for (std::size_t r = 0; r < part.size(); ++r)
      std::move(part[r].begin(), part[r].end(), std::back_inserter(sc.cells[r]));
  }
  return sc;
}

SimplicialComplex lift_clique_parallel(const Graph& g, int max_dim) {
  check_max_dim(max_dim);
  const auto fwd = forward_neighbors(g);
  std::vector<std::vector<std::vector<Cell>>> parts(g.num_nodes);
  const auto n = static_cast<std::ptrdiff_t>(g.num_nodes);
  const int threads = kernels::num_threads();
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads) if (threads > 1)
  for (std::ptrdiff_t v = 0; v < n; ++v)
    parts[static_cast<std::size_t>(v)] = cliques_from_root(fwd, static_cast<NodeId>(v), max_dim);

  SimplicialComplex sc{g.num_nodes, std::vector<std::vector<Cell>>(static_cast<std::size_t>(max_dim) + 1)};
  for (std::size_t r = 0; r < sc.cells.size(); ++r) {
    std::size_t total = 0;
    for (const auto& p : parts) total += p[r].size();
    sc.cells[r].reserve(total);
    for (auto& p : parts) std::move(p[r].begin(), p[r].end(), std::back_inserter(sc.cells[r]));
  }
  return sc;
}

SimplicialComplex lift_neighborhood(const Graph& g, int max_dim, std::size_t max_neighborhood_size) {
  check_max_dim(max_dim);
  const auto top_size = static_cast<std::size_t>(max_dim) + 1;
  if (max_neighborhood_size < top_size)
    throw std::invalid_argument("max_neighborhood_size " + std::to_string(max_neighborhood_size) +
                                " must be >= max_dim + 1 = " + std::to_string(top_size));
  const auto adj = adjacency_lists(g);
  std::vector<std::vector<Cell>> ranks(top_size);

  auto add_with_faces = [&](const Cell& simplex) {
    const std::size_t m = simplex.size();
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
      Cell face;
      for (std::size_t i = 0; i < m; ++i)
        if (mask & (1u << i)) face.push_back(simplex[i]);
      ranks[face.size() - 1].push_back(std::move(face));
    }
  };

  for (NodeId v = 0; v < g.num_nodes; ++v) {
    Cell closed = adj[v];
    closed.insert(std::upper_bound(closed.begin(), closed.end(), v), v);
    if (closed.size() > max_neighborhood_size)
      throw LiftingRefusal("neighborhood lifting: node " + std::to_string(v) +
                           " has a closed neighborhood of " + std::to_string(closed.size()) +
                           " nodes, above max_neighborhood_size " +
                           std::to_string(max_neighborhood_size));
    if (closed.size() <= top_size) {
      add_with_faces(closed);
      continue;
    }
    // All top_size-subsets, in lexicographic order of index combinations.
    std::vector<std::size_t> idx(top_size);
    for (std::size_t i = 0; i < top_size; ++i) idx[i] = i;
    while (true) {
      Cell subset;
      for (auto i : idx) subset.push_back(closed[i]);
      add_with_faces(subset);
      std::size_t pos = top_size;
      while (pos > 0 && idx[pos - 1] == closed.size() - top_size + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t j = pos; j < top_size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  for (auto& r : ranks) sort_unique(r);
  while (ranks.size() > 2 && ranks.back().empty()) ranks.pop_back();
  return SimplicialComplex{g.num_nodes, std::move(ranks)};
}

CellComplex lift_cycle(const Graph& g, std::optional<std::size_t> max_cell_length) {
  constexpr NodeId kNone = UINT32_MAX;
  const auto adj = adjacency_lists(g);
  std::vector<NodeId> parent(g.num_nodes, kNone);
  std::vector<std::size_t> depth(g.num_nodes, 0);
  std::vector<char> seen(g.num_nodes, 0);
  std::queue<NodeId> frontier;
  for (NodeId root = 0; root < g.num_nodes; ++root) {
    if (seen[root]) continue;
    seen[root] = 1;
    frontier.push(root);
    while (!frontier.empty()) {
      const NodeId u = frontier.front();
      frontier.pop();
      for (NodeId w : adj[u]) {
        if (seen[w]) continue;
        seen[w] = 1;
        parent[w] = u;
        depth[w] = depth[u] + 1;
        frontier.push(w);
      }
    }
  }

  CellComplex cc{g.num_nodes, g.edges, {}};
  for (const auto& [u, v] : g.edges) {
    if (parent[v] == u || parent[u] == v) continue;
    Cell left{u}, right{v};
    NodeId a = u, b = v;
    while (depth[a] > depth[b]) left.push_back(a = parent[a]);
    while (depth[b] > depth[a]) right.push_back(b = parent[b]);
    while (a != b) {
      left.push_back(a = parent[a]);
      right.push_back(b = parent[b]);
    }
    // left = u..lca, right = v..lca
    Cell cyc = left;
    for (auto it = right.rbegin() + 1; it != right.rend(); ++it) cyc.push_back(*it);
    if (max_cell_length && cyc.size() > *max_cell_length) continue;
    cc.two_cells.push_back(canonical_cycle(std::move(cyc)));
  }
  sort_unique(cc.two_cells);
  return cc;
}

std::vector<Cell> khop_balls(const Graph& g, int k) {
  if (k < 1) throw std::invalid_argument("k-hop lifting needs k >= 1, got " + std::to_string(k));
  const auto adj = adjacency_lists(g);
  std::vector<Cell> balls(g.num_nodes);
  std::vector<int> dist(g.num_nodes, -1);
  std::vector<NodeId> visited;
  for (NodeId s = 0; s < g.num_nodes; ++s) {
    visited.assign(1, s);
    dist[s] = 0;
    for (std::size_t head = 0; head < visited.size(); ++head) {
      const NodeId u = visited[head];
      if (dist[u] == k) continue;
      for (NodeId w : adj[u])
        if (dist[w] < 0) {
          dist[w] = dist[u] + 1;
          visited.push_back(w);
        }
    }
    for (NodeId u : visited) dist[u] = -1;
    std::sort(visited.begin(), visited.end());
    balls[s] = visited;
  }
  return balls;
}

Hypergraph lift_khop(const Graph& g, int k) {
  auto balls = khop_balls(g, k);
  sort_unique(balls);
  return Hypergraph{g.num_nodes, std::move(balls)};
}

Hypergraph lift_knn(const Graph& g, int k) {
  const std::size_t n = g.num_nodes;
  if (k < 1) throw std::invalid_argument("kNN lifting needs k >= 1, got k=" + std::to_string(k));
  const DenseMatrix x = g.node_features ? *g.node_features : default_node_features(n);
  const auto kk = static_cast<std::ptrdiff_t>(std::min<std::size_t>(static_cast<std::size_t>(k), n > 0 ? n - 1 : 0));
  std::vector<Cell> hyperedges;
  hyperedges.reserve(n);
  std::vector<std::pair<double, NodeId>> order;
  for (NodeId v = 0; v < n; ++v) {
    order.clear();
    for (NodeId u = 0; u < n; ++u) {
      if (u == v) continue;
      double d2 = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) {
        const double diff = x(v, j) - x(u, j);
        d2 += diff * diff;
      }
      order.emplace_back(d2, u);
    }
    std::partial_sort(order.begin(), order.begin() + kk, order.end());
    Cell e{v};
    for (std::ptrdiff_t i = 0; i < kk; ++i) e.push_back(order[static_cast<std::size_t>(i)].second);
    std::sort(e.begin(), e.end());
    hyperedges.push_back(std::move(e));
  }
  sort_unique(hyperedges);
  return Hypergraph{n, std::move(hyperedges)};
}

std::vector<DenseMatrix> lift_features_projected_sum(const Complex& target, const DenseMatrix& node_features) {
  if (node_features.rows() != num_nodes(target))
    throw std::invalid_argument("projected sum: " + std::to_string(node_features.rows()) +
                                " node feature rows for " + std::to_string(num_nodes(target)) + " nodes");
  std::vector<DenseMatrix> features{node_features};
  for (int r = 1; r <= max_rank(target); ++r) {
    const SparseOperator up = boundary_matrix(target, r, false).transposed();
    features.push_back(kernels::spmm(up, features.back()));
  }
  return features;
}

DenseMatrix default_node_features(std::size_t num_nodes) { return DenseMatrix(num_nodes, 1, 1.0); }

std::vector<std::string> LiftingConfig::violations() const {
  std::vector<std::string> out;
  std::visit(Overloaded{
                 [&](const CliqueLifting& c) {
                   if (c.max_dim < 1) out.push_back("clique lifting: max_dim must be >= 1");
                 },
                 [&](const NeighborhoodLifting& c) {
                   if (c.max_dim < 1) out.push_back("neighborhood lifting: max_dim must be >= 1");
                   if (c.max_dim >= 1 && c.max_neighborhood_size < static_cast<std::size_t>(c.max_dim) + 1)
                     out.push_back("neighborhood lifting: max_neighborhood_size must be >= max_dim + 1");
                 },
                 [&](const CycleLifting& c) {
                   if (c.max_cell_length && *c.max_cell_length < 3)
                     out.push_back("cycle lifting: max_cell_length must be >= 3");
                 },
                 [&](const KhopLifting& c) {
                   if (c.k < 1) out.push_back("khop lifting: k must be >= 1");
                 },
                 [&](const KnnLifting& c) {
                   if (c.k < 1) out.push_back("knn lifting: k must be >= 1");
                 },
             },
             structural);
  return out;
}

std::string LiftingConfig::name() const {
  static constexpr const char* names[] = {"clique", "neighborhood", "cycle", "khop", "knn"};
  return names[structural.index()];
}

std::string LiftingConfig::canonical_json() const {
  nlohmann::json s;
  s["kind"] = name();
  std::visit(Overloaded{
                 [&](const CliqueLifting& c) { s["max_dim"] = c.max_dim; },
                 [&](const NeighborhoodLifting& c) {
                   s["max_dim"] = c.max_dim;
                   s["max_neighborhood_size"] = c.max_neighborhood_size;
                 },
                 [&](const CycleLifting& c) {
                   if (c.max_cell_length) s["max_cell_length"] = *c.max_cell_length;
                 },
                 [&](const KhopLifting& c) { s["k"] = c.k; },
                 [&](const KnnLifting& c) { s["k"] = c.k; },
             },
             structural);
  nlohmann::json doc;
  doc["structural"] = std::move(s);
  doc["feature"] = "projected_sum";
  return doc.dump();
}

DomainKind LiftingConfig::target_kind() const {
  switch (structural.index()) {
    case 0:
    case 1: return DomainKind::simplicial;
    case 2: return DomainKind::cell;
    default: return DomainKind::hypergraph;
  }
}

FeaturedComplex apply_lifting(const Graph& g, const LiftingConfig& cfg) {
  if (auto v = cfg.violations(); !v.empty()) throw std::invalid_argument(v.front());
  Complex lifted = std::visit(
      Overloaded{
          [&](const CliqueLifting& c) -> Complex { return lift_clique(g, c.max_dim); },
          [&](const NeighborhoodLifting& c) -> Complex {
            return lift_neighborhood(g, c.max_dim, c.max_neighborhood_size);
          },
          [&](const CycleLifting& c) -> Complex { return lift_cycle(g, c.max_cell_length); },
          [&](const KhopLifting& c) -> Complex { return lift_khop(g, c.k); },
          [&](const KnnLifting& c) -> Complex { return lift_knn(g, c.k); },
      },
      cfg.structural);

  FeaturedComplex out;
  const DenseMatrix x0 = g.node_features ? *g.node_features : default_node_features(g.num_nodes);
  out.features = lift_features_projected_sum(lifted, x0);
  out.complex = std::move(lifted);
  out.labels = g.node_labels;
  out.targets = g.node_targets;
  out.graph_label = g.graph_label;
  return out;
}

}  // namespace topoforge
