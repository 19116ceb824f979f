#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "topoforge/homp.hpp"
#include "topoforge/liftings.hpp"
#include "topoforge/metrics.hpp"
#include "topoforge/readout.hpp"
#include "topoforge/rng.hpp"

using namespace topoforge;

namespace {

DenseMatrix identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix pass_through(std::size_t d) {
  DenseMatrix m(2 * d, d);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix fused_slice(std::size_t d) {
  DenseMatrix m(2 * d, d);
  for (std::size_t i = 0; i < d; ++i) m(d + i, i) = 1.0;
  return m;
}

SimplicialComplex k3() {
  const std::pair<NodeId, NodeId> e[] = {{0, 1}, {0, 2}, {1, 2}};
  return lift_clique(build_graph(3, e).graph, 2);
}

ModelConfig sdp_config(std::size_t d) {
  ModelConfig cfg;
  cfg.hidden_dim = d;
  cfg.readout = ReadoutKind::signal_down_propagation;
  cfg.layer.neighborhoods = {{{NeighborhoodKind::identity, 0, false}, 0}};
  return cfg;
}

std::vector<std::size_t> zeros(std::size_t n) { return std::vector<std::size_t>(n, 0); }

}  // namespace

TEST_CASE("direct readout examples") {
  ComputationRecord rec;
  const auto h0 = rec.constant(DenseMatrix::from_rows({{1, 1}, {3, 3}}));
  const auto head = rec.constant(identity(2));
  const auto batch = zeros(2);
  const PoolingInput pool{batch, 1};
  CHECK(rec.value(readout_dr(rec, h0, TaskKind::graph_regression, Pooling::mean, head, pool)) ==
        DenseMatrix::from_rows({{2, 2}}));
  CHECK(rec.value(readout_dr(rec, h0, TaskKind::node_classification, Pooling::mean, head, pool)) ==
        DenseMatrix::from_rows({{1, 1}, {3, 3}}));

  const std::vector<std::size_t> singles = {0, 1};
  const PoolingInput each{singles, 2};
  const DenseMatrix mean = rec.value(readout_dr(rec, h0, TaskKind::graph_classification, Pooling::mean, head, each));
  const DenseMatrix sum = rec.value(readout_dr(rec, h0, TaskKind::graph_classification, Pooling::sum, head, each));
  CHECK(mean == sum);
}

TEST_CASE("SDP with zero higher ranks and pass-through projections equals DR bitwise") {
  Rng rng(4);
  const Graph g = oracle::random_graph(12, 0.5, 9);
  const Complex c = lift_clique(g, 2);
  const std::size_t d = 3;
  const auto cfg = sdp_config(d);
  const OperatorSet ops(c, cfg);
  for (TaskKind task : {TaskKind::node_classification, TaskKind::graph_regression}) {
    ComputationRecord rec;
    DenseMatrix x0(12, d), w(d, 2);
    for (double& v : x0.values()) v = rng.uniform(-1.0, 1.0);
    for (double& v : w.values()) v = rng.uniform(-1.0, 1.0);
    const std::vector<ValueId> latents = {rec.constant(x0), rec.constant(DenseMatrix(num_cells(c, 1), d)),
                                          rec.constant(DenseMatrix(num_cells(c, 2), d))};
    const std::vector<ValueId> proj = {rec.constant(pass_through(d)), rec.constant(pass_through(d))};
    const auto head = rec.constant(w);
    const auto batch = zeros(12);
    const PoolingInput pool{batch, 1};
    const DenseMatrix sdp = rec.value(readout_sdp(rec, latents, ops, proj, task, Pooling::mean, head, pool));
    const DenseMatrix dr = rec.value(readout_dr(rec, latents[0], task, Pooling::mean, head, pool));
    CHECK(sdp.bitwise_equal(dr));
  }
}

TEST_CASE("SDP on K3 fuses the triangle into every edge") {
  const Complex c = k3();
  const auto cfg = sdp_config(1);
  const OperatorSet ops(c, cfg);
  ComputationRecord rec;
  const std::vector<ValueId> latents = {rec.constant(DenseMatrix(3, 1)), rec.constant(DenseMatrix(3, 1)),
                                        rec.constant(DenseMatrix::from_rows({{1}}))};
  const auto head = rec.constant(identity(1));
  const auto batch = zeros(3);
  const PoolingInput pool{batch, 1};

  // P_1 pass-through exposes H_1 only through nothing; P_1 fused exposes |B01| H_1.
  const std::vector<ValueId> proj = {rec.constant(fused_slice(1)), rec.constant(fused_slice(1))};
  const DenseMatrix out = rec.value(readout_sdp(rec, latents, ops, proj, TaskKind::node_regression, Pooling::mean, head, pool));
  // each edge holds [1]; each node lies on two edges
  CHECK(out == DenseMatrix::from_rows({{2}, {2}, {2}}));

  const std::vector<ValueId> stop = {rec.constant(pass_through(1)), rec.constant(fused_slice(1))};
  CHECK(rec.value(readout_sdp(rec, latents, ops, stop, TaskKind::node_regression, Pooling::mean, head, pool)) ==
        DenseMatrix(3, 1));
}

TEST_CASE("SDP on a rank-0-only complex equals DR") {
  const Complex c = SimplicialComplex{6, {{{0}, {1}, {2}, {3}, {4}, {5}}}};
  const auto cfg = sdp_config(2);
  const OperatorSet ops(c, cfg);
  ComputationRecord rec;
  const auto h0 = rec.constant(DenseMatrix::from_rows({{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}}));
  const std::vector<ValueId> latents = {h0};
  const auto head = rec.constant(identity(2));
  const auto batch = zeros(6);
  const PoolingInput pool{batch, 1};
  const DenseMatrix sdp = rec.value(readout_sdp(rec, latents, ops, {}, TaskKind::graph_regression, Pooling::sum, head, pool));
  const DenseMatrix dr = rec.value(readout_dr(rec, h0, TaskKind::graph_regression, Pooling::sum, head, pool));
  CHECK(sdp == dr);
}

TEST_CASE("mean pooling ignores the order of cells within a sample") {
  Rng rng(12);
  const std::vector<std::size_t> batch = {0, 0, 0, 1, 1, 1, 1};
  const std::vector<std::size_t> order = {2, 0, 1, 6, 4, 3, 5};
  DenseMatrix h(7, 3), shuffled(7, 3);
  for (double& v : h.values()) v = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t c = 0; c < 3; ++c) shuffled(i, c) = h(order[i], c);
  ComputationRecord rec;
  const auto head = rec.constant(identity(3));
  const PoolingInput pool{batch, 2};
  const DenseMatrix a = rec.value(readout_dr(rec, rec.constant(h), TaskKind::graph_regression, Pooling::mean, head, pool));
  const DenseMatrix b = rec.value(readout_dr(rec, rec.constant(shuffled), TaskKind::graph_regression, Pooling::mean, head, pool));
  CHECK(max_abs_diff(a, b) <= 1e-15);
}

TEST_CASE("metric examples") {
  const auto preds = DenseMatrix::from_rows({{0, 1}, {1, 0}, {0, 1}});
  const std::vector<std::int64_t> labels = {1, 1, 1};
  const auto acc = metric(MetricKind::accuracy, preds, labels, {});
  CHECK(acc.value == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(acc.n == 3);

  const double tie[] = {0.5, 0.5, 0.1};
  CHECK(argmax_row(tie) == 0);

  const std::vector<double> scores = {0.1, 0.4, 0.35, 0.8};
  const std::vector<std::int64_t> y = {0, 0, 1, 1};
  CHECK(auc_roc(scores, y) == 0.75);
  CHECK(auc_roc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y) == 1.0);
  CHECK(auc_roc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y) == 0.5);
  CHECK_THROWS_AS(auc_roc(scores, std::vector<std::int64_t>{1, 1, 1, 1}), std::invalid_argument);

  const auto two_col = DenseMatrix::from_rows({{0.1, 0.0}, {0.0, 0.4}, {0.0, 0.35}, {0.0, 0.8}});
  CHECK(metric(MetricKind::auc_roc, two_col, y, {}).value == 0.75);

  const auto reg = DenseMatrix::from_rows({{0}, {2}});
  const auto zero = DenseMatrix(2, 1);
  CHECK(metric(MetricKind::mse, reg, {}, zero).value == 2.0);
  CHECK(metric(MetricKind::mae, reg, {}, zero).value == 1.0);
  CHECK_THROWS_AS(metric(MetricKind::mse, reg, {}, DenseMatrix(3, 1)), std::invalid_argument);
}

TEST_CASE("AUC matches the pair oracle and is invariant under increasing transforms") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> s(n);
    std::vector<std::int64_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(10)) / 10.0;
      y[i] = static_cast<std::int64_t>(rng.below(2));
    }
    y[0] = 0;
    y[1] = 1;
    const double a = auc_roc(s, y);
    CHECK(a == doctest::Approx(oracle::auc_pairs(s, y)).epsilon(1e-12));
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3.0 * s[i]) - 7.0;
    CHECK(auc_roc(t, y) == a);
  }
}

TEST_CASE("metrics over concatenated batches combine by sample count") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n1 = 4, n2 = 8;
    DenseMatrix p(n1 + n2, 2), t(n1 + n2, 2);
    std::vector<std::int64_t> labels(n1 + n2);
    for (double& v : p.values()) v = static_cast<double>(rng.below(16)) / 8.0;
    for (double& v : t.values()) v = static_cast<double>(rng.below(16)) / 8.0;
    for (auto& l : labels) l = static_cast<std::int64_t>(rng.below(2));
    auto slice = [](const DenseMatrix& m, std::size_t from, std::size_t to) {
      DenseMatrix out(to - from, m.cols());
      for (std::size_t i = from; i < to; ++i)
        for (std::size_t c = 0; c < m.cols(); ++c) out(i - from, c) = m(i, c);
      return out;
    };
    const auto p1 = slice(p, 0, n1), p2 = slice(p, n1, n1 + n2);
    const auto t1 = slice(t, 0, n1), t2 = slice(t, n1, n1 + n2);
    const std::span<const std::int64_t> l(labels);
    for (MetricKind kind : {MetricKind::accuracy, MetricKind::mse, MetricKind::mae}) {
      const auto whole = metric(kind, p, l, t);
      const auto a = metric(kind, p1, l.subspan(0, n1), t1);
      const auto b = metric(kind, p2, l.subspan(n1), t2);
      CHECK(whole.value == (static_cast<double>(a.n) * a.value + static_cast<double>(b.n) * b.value) /
                               static_cast<double>(a.n + b.n));
    }
  }
}

TEST_CASE("metric names") {
  for (MetricKind k : {MetricKind::accuracy, MetricKind::mse, MetricKind::mae, MetricKind::auc_roc})
    CHECK(parse_metric(to_string(k)) == k);
  CHECK(higher_is_better(MetricKind::accuracy));
  CHECK_FALSE(higher_is_better(MetricKind::mse));
  CHECK_THROWS(parse_metric("f1"));
}
