#include <doctest.h>

#include "oracles.hpp"
#include "topoforge/error.hpp"
#include "topoforge/kernels.hpp"
#include "topoforge/liftings.hpp"
#include "topoforge/operators.hpp"

using namespace topoforge;

namespace {

Graph make(std::size_t n, std::initializer_list<std::pair<NodeId, NodeId>> edges) {
  const std::vector<std::pair<NodeId, NodeId>> e(edges);
  return build_graph(n, e).graph;
}

Graph complete(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) e.emplace_back(u, v);
  return build_graph(n, e).graph;
}

}  // namespace

TEST_CASE("clique lifting examples") {
  CHECK(count_vector(lift_clique(complete(3), 3)) == std::vector<std::size_t>{3, 3, 1, 0});
  CHECK(count_vector(lift_clique(complete(4), 3)) == std::vector<std::size_t>{4, 6, 4, 1});
}

TEST_CASE("clique counts equal subset enumeration") {
  for (const auto& g : oracle::suite_graphs())
    for (int max_dim : {2, 3}) {
      const auto sc = lift_clique(g, max_dim);
      CHECK(count_vector(sc) == oracle::clique_counts_bruteforce(g, max_dim));
    }
}

TEST_CASE("parallel clique enumeration matches the serial reference") {
  kernels::set_num_threads(4);
  for (const auto& g : oracle::suite_graphs(50)) CHECK(lift_clique_parallel(g, 3) == lift_clique(g, 3));
  kernels::set_num_threads(1);
}

TEST_CASE("clique lifting is monotone in max_dim") {
  for (const auto& g : oracle::suite_graphs(40)) {
    const auto lo = lift_clique(g, 2);
    const auto hi = lift_clique(g, 3);
    for (std::size_t r = 0; r < lo.cells.size(); ++r) CHECK(lo.cells[r] == hi.cells[r]);
  }
}

TEST_CASE("neighborhood lifting examples") {
  const auto star = make(4, {{0, 1}, {0, 2}, {0, 3}});
  CHECK(count_vector(lift_neighborhood(star, 3, 10)) == std::vector<std::size_t>{4, 6, 4, 1});
  CHECK(count_vector(lift_neighborhood(make(2, {{0, 1}}), 3, 10)) == std::vector<std::size_t>{2, 1});
  CHECK(count_vector(lift_neighborhood(make(3, {}), 3, 10)) == std::vector<std::size_t>{3, 0});
}

TEST_CASE("neighborhood guard refuses oversized neighborhoods and names the node") {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId v = 1; v < 30; ++v) e.emplace_back(0, v);
  const auto star = build_graph(30, e).graph;
  try {
    lift_neighborhood(star, 2, 10);
    FAIL("expected a refusal");
  } catch (const LiftingRefusal& err) {
    CHECK(std::string(err.what()).find("node 0") != std::string::npos);
  }
}

TEST_CASE("cycle lifting examples") {
  const auto k3 = lift_cycle(complete(3));
  REQUIRE(k3.two_cells.size() == 1);
  CHECK(k3.two_cells[0] == Cell{0, 1, 2});
  CHECK(lift_cycle(complete(4)).two_cells.size() == 3);
}

TEST_CASE("cycle count equals the cycle-space dimension") {
  for (const auto& g : oracle::suite_graphs()) {
    const auto cc = lift_cycle(g);
    CHECK(cc.two_cells.size() == g.edges.size() - g.num_nodes + oracle::components_union_find(g));
  }
}

TEST_CASE("cycle length cap drops long cycles") {
  const auto c6 = make(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}});
  CHECK(lift_cycle(c6).two_cells.size() == 1);
  CHECK(lift_cycle(c6, 5).two_cells.empty());
}

TEST_CASE("khop lifting examples") {
  const auto p3 = lift_khop(make(3, {{0, 1}, {1, 2}}), 1);
  CHECK(p3.hyperedges == std::vector<Cell>{{0, 1}, {0, 1, 2}, {1, 2}});
  CHECK(lift_khop(complete(3), 1).hyperedges == std::vector<Cell>{{0, 1, 2}});
}

TEST_CASE("khop cardinality laws") {
  for (const auto& g : oracle::suite_graphs(60)) {
    CHECK(khop_balls(g, 2).size() == g.num_nodes);
    const auto h = lift_khop(g, 2);
    CHECK(h.hyperedges.size() <= g.num_nodes);
    const auto big = lift_khop(g, static_cast<int>(g.num_nodes));
    CHECK(big.hyperedges.size() == oracle::components_union_find(g));
  }
}

TEST_CASE("knn lifting examples") {
  Graph g = make(4, {});
  g.node_features = DenseMatrix::from_rows({{0}, {1}, {2}, {10}});
  CHECK(lift_knn(g, 1).hyperedges == std::vector<Cell>{{0, 1}, {1, 2}, {2, 3}});

  Graph same = make(4, {});
  same.node_features = DenseMatrix(4, 2, 1.0);
  CHECK(lift_knn(same, 1).hyperedges == std::vector<Cell>{{0, 1}, {0, 2}, {0, 3}});

  CHECK(lift_knn(make(2, {}), 1).hyperedges == std::vector<Cell>{{0, 1}});
}

TEST_CASE("projected-sum feature lifting") {
  const Complex k3 = lift_clique(complete(3), 2);
  const auto f = lift_features_projected_sum(k3, DenseMatrix::from_rows({{1}, {2}, {3}}));
  CHECK(f[1] == DenseMatrix::from_rows({{3}, {4}, {5}}));
  CHECK(f[2] == DenseMatrix::from_rows({{12}}));

  const auto zero = lift_features_projected_sum(k3, DenseMatrix(3, 2));
  for (const auto& m : zero)
    for (double v : m.values()) CHECK(v == 0.0);

  const Complex h = lift_khop(make(3, {{0, 1}, {1, 2}}), 1);
  const auto hf = lift_features_projected_sum(h, DenseMatrix::from_rows({{1}, {2}, {3}}));
  CHECK(hf[1] == DenseMatrix::from_rows({{3}, {6}, {5}}));
}

TEST_CASE("projected-sum features equal sums over faces") {
  for (const auto& g : oracle::suite_graphs(40)) {
    const auto sc = lift_clique(g, 3);
    DenseMatrix x(g.num_nodes, 2);
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      x(i, 0) = static_cast<double>(i);
      x(i, 1) = 1.0;
    }
    const auto f = lift_features_projected_sum(sc, x);
    for (std::size_t r = 1; r < sc.cells.size(); ++r)
      for (std::size_t c = 0; c < sc.cells[r].size(); ++c) {
        const auto& cell = sc.cells[r][c];
        for (std::size_t col = 0; col < 2; ++col) {
          double expect = 0.0;
          for (std::size_t drop = 0; drop < cell.size(); ++drop) {
            Cell face;
            for (std::size_t k = 0; k < cell.size(); ++k)
              if (k != drop) face.push_back(cell[k]);
            const auto& lower = sc.cells[r - 1];
            const auto idx = static_cast<std::size_t>(std::lower_bound(lower.begin(), lower.end(), face) - lower.begin());
            expect += f[r - 1](idx, col);
          }
          CHECK(f[r](c, col) == expect);
        }
      }
  }
}

TEST_CASE("apply_lifting composes structure and features") {
  Graph k3 = complete(3);
  k3.node_features = DenseMatrix::from_rows({{1}, {2}, {3}});
  const auto fc = apply_lifting(k3, {CliqueLifting{2}, FeatureLifting::projected_sum});
  CHECK(fc.features.size() == 3);
  CHECK_FALSE(validate_featured(fc));

  const auto bare = apply_lifting(complete(3), {CliqueLifting{2}, FeatureLifting::projected_sum});
  CHECK(bare.features[0] == DenseMatrix(3, 1, 1.0));
  CHECK(bare.features[1] == DenseMatrix(3, 1, 2.0));
}

TEST_CASE("every lifting output validates") {
  const std::vector<LiftingConfig> configs = {
      {CliqueLifting{3}, FeatureLifting::projected_sum},
      {NeighborhoodLifting{2, 64}, FeatureLifting::projected_sum},
      {CycleLifting{}, FeatureLifting::projected_sum},
      {KhopLifting{2}, FeatureLifting::projected_sum},
      {KnnLifting{2}, FeatureLifting::projected_sum},
  };
  for (const auto& g : oracle::suite_graphs())
    for (const auto& cfg : configs) {
      const auto fc = apply_lifting(g, cfg);
      const auto v = validate_featured(fc);
      CHECK_MESSAGE(!v, cfg.name() << ": " << (v ? v->message() : ""));
    }
}

TEST_CASE("lifting config canonical bytes") {
  const LiftingConfig a{CliqueLifting{2}, FeatureLifting::projected_sum};
  const LiftingConfig b{CliqueLifting{3}, FeatureLifting::projected_sum};
  CHECK(a.canonical_json() == R"({"feature":"projected_sum","structural":{"kind":"clique","max_dim":2}})");
  CHECK(a.canonical_json() != b.canonical_json());
  CHECK_FALSE(LiftingConfig{KhopLifting{0}, FeatureLifting::projected_sum}.violations().empty());
}
