#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "topoforge/cache.hpp"
#include "topoforge/complex_io.hpp"
#include "topoforge/dataset.hpp"
#include "topoforge/error.hpp"
#include "topoforge/liftings.hpp"
#include "topoforge/optimizer.hpp"
#include "topoforge/pipeline.hpp"
#include "topoforge/splits.hpp"
#include "topoforge/train.hpp"

using namespace topoforge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(std::string_view name) {
  static std::atomic<int> counter{0};
  auto p = fs::temp_directory_path() /
           ("topoforge_test_" + std::string(name) + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, std::string_view text) {
  std::ofstream(p) << text;
}

void check_partition(const Splits& s, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto* part : {&s.train, &s.val, &s.test})
    for (std::size_t i : *part) {
      REQUIRE(i < n);
      ++seen[i];
    }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

DatasetBundle lifted_sbm(std::size_t nodes, std::uint64_t seed) {
  SbmParams p;
  p.nodes = nodes;
  p.seed = seed;
  return preprocess(make_sbm_dataset(p), {}, nullptr).bundle;
}

DatasetBundle lifted_graphs(std::size_t graphs, std::uint64_t seed) {
  GraphSetParams p;
  p.graphs = graphs;
  p.seed = seed;
  return preprocess(make_graph_set_dataset(p), LiftingConfig{CycleLifting{}}, nullptr).bundle;
}

ModelConfig small_model(const DatasetBundle& b) {
  ModelConfig cfg;
  cfg.hidden_dim = 8;
  cfg.num_layers = 1;
  cfg.layer.neighborhoods = {{{NeighborhoodKind::up_adjacency, 0, false}, 0},
                             {{NeighborhoodKind::down_incidence, 1, false}, 0}};
  return complete_model_config(cfg, b);
}

}  // namespace

TEST_CASE("random splits partition the index range") {
  for (std::size_t n : {3, 4, 5, 7, 8, 10, 33, 100, 257, 999, 1000}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      SplitSpec spec;
      spec.seed = seed;
      const auto s = make_splits(n, spec);
      CHECK(s.train.size() == n / 2);
      CHECK(s.val.size() == n / 4);
      check_partition(s, n);
      CHECK(split_violations(s, n).empty());
      CHECK(make_splits(n, spec) == s);
    }
  }
  SplitSpec spec;
  spec.seed = 3;
  const auto s = make_splits(8, spec);
  CHECK(s.train.size() == 4);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 2);
}

TEST_CASE("kfold splits cover every index once as test") {
  for (std::size_t n : {8, 9, 31, 100}) {
    for (std::size_t k : {3, 4, 5}) {
      std::vector<int> tested(n, 0);
      for (std::size_t f = 0; f < k; ++f) {
        SplitSpec spec;
        spec.strategy = SplitStrategy::kfold;
        spec.k = k;
        spec.fold = f;
        spec.seed = 7;
        const auto s = make_splits(n, spec);
        check_partition(s, n);
        CHECK(s.test.size() >= n / k);
        CHECK(s.test.size() <= n / k + 1);
        for (std::size_t i : s.test) ++tested[i];
      }
      CHECK(std::all_of(tested.begin(), tested.end(), [](int c) { return c == 1; }));
    }
  }
  SplitSpec spec;
  spec.strategy = SplitStrategy::kfold;
  spec.k = 4;
  for (spec.fold = 0; spec.fold < 4; ++spec.fold) CHECK(make_splits(8, spec).test.size() == 2);
  spec.k = 2;
  CHECK_THROWS_AS(make_splits(8, spec), ConfigError);
}

TEST_CASE("split spec violations and fixed splits") {
  SplitSpec spec;
  spec.train_frac = 0.8;
  spec.val_frac = 0.3;
  CHECK_THROWS_AS(make_splits(10, spec), ConfigError);

  const Splits s{{0, 1}, {2}, {3, 4}};
  CHECK(splits_from_json(splits_to_json(s), "mem") == s);
  CHECK_FALSE(split_violations(Splits{{0, 1}, {1}, {2}}, 3).empty());
  CHECK_FALSE(split_violations(Splits{{0}, {1}, {5}}, 3).empty());

  const auto dir = scratch("fixed");
  write_text(dir / "splits.json", splits_to_json(s));
  SplitSpec fixed;
  fixed.strategy = SplitStrategy::fixed;
  fixed.file = dir / "splits.json";
  CHECK(make_splits(5, fixed) == s);
  CHECK_THROWS_AS(make_splits(4, fixed), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("step schedule") {
  OptimizerConfig cfg;
  cfg.lr = 0.01;
  CHECK(scheduled_lr(cfg, 0) == 0.01);
  CHECK(scheduled_lr(cfg, 49) == 0.01);
  CHECK(scheduled_lr(cfg, 50) == 0.005);
  CHECK(scheduled_lr(cfg, 100) == 0.0025);
}

TEST_CASE("adam updates") {
  OptimizerConfig cfg;
  cfg.lr = 0.1;
  ModelState state;
  state.parameters = {{"w", DenseMatrix(1, 1, 1.0), true}, {"frozen", DenseMatrix(1, 1, 1.0), false}};
  Adam adam(cfg);
  const std::vector<DenseMatrix> g = {DenseMatrix(1, 1, 3.0), DenseMatrix(1, 1, 3.0)};
  adam.step(state, g, 0);
  CHECK(state.get("w").matrix(0, 0) == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(state.get("frozen").matrix(0, 0) == 1.0);

  ModelState still;
  still.parameters = {{"w", DenseMatrix::from_rows({{0.25, -3.0}}), true}};
  const auto before = still;
  Adam zero(cfg);
  for (int e = 0; e < 5; ++e) zero.step(still, std::vector<DenseMatrix>{DenseMatrix(1, 2)}, e);
  CHECK(still == before);

  std::vector<DenseMatrix> bad = {DenseMatrix::from_rows({{NAN, 0.0}})};
  try {
    zero.step(still, bad, 5);
    FAIL("expected abort");
  } catch (const RuntimeAbort& e) {
    CHECK(std::string(e.what()).find("parameter w") != std::string::npos);
  }
  CHECK(still == before);
}

TEST_CASE("early stopping on a frozen validation metric") {
  struct Case {
    bool graph;
    int eval_every, patience, min_epochs, expected;
  };
  for (const Case c : {Case{false, 1, 50, 50, 51}, Case{true, 5, 10, 50, 55}, Case{true, 3, 4, 24, 24},
                       Case{false, 2, 30, 10, 62}}) {
    const auto bundle = c.graph ? lifted_graphs(20, 1) : lifted_sbm(24, 1);
    SplitSpec spec;
    spec.seed = 1;
    const auto splits = make_splits(bundle.num_units(), spec);
    auto tc = TrainConfig::defaults_for(bundle.location, bundle.task);
    tc.optimizer.lr = 1e-300;
    tc.max_epochs = 500;
    tc.eval_every = c.eval_every;
    tc.patience = c.patience;
    tc.min_epochs = c.min_epochs;
    const auto report = train(small_model(bundle), bundle, splits, tc);
    CHECK(report.epochs_run == c.expected);
    CHECK(report.best_epoch == c.eval_every);
  }
  const auto defaults = TrainConfig::defaults_for(TargetLocation::graph, TaskKind::graph_classification);
  CHECK(defaults.eval_every == 5);
  CHECK(defaults.patience == 10);
  CHECK(defaults.min_epochs == 50);
  CHECK(TrainConfig::defaults_for(TargetLocation::node, TaskKind::node_classification).patience == 50);
}

TEST_CASE("training is deterministic and touches test data once") {
  const auto bundle = lifted_sbm(40, 2);
  SplitSpec spec;
  spec.seed = 2;
  const auto splits = make_splits(bundle.num_units(), spec);
  auto tc = TrainConfig::defaults_for(bundle.location, bundle.task);
  tc.max_epochs = 60;
  const auto cfg = small_model(bundle);
  const auto a = train(cfg, bundle, splits, tc);
  const auto b = train(cfg, bundle, splits, tc);
  auto ja = report_json(a), jb = report_json(b);
  ja.erase("runtime");
  jb.erase("runtime");
  CHECK(ja.dump() == jb.dump());
  CHECK(metrics_csv(a) == metrics_csv(b));
  CHECK(a.best_state == b.best_state);
  CHECK(a.test_accesses_during_training == 0);
  CHECK(a.test_accesses == 1);
  CHECK(metrics_csv(a).rfind("split,epoch,metric,value\n", 0) == 0);

  const auto ev = evaluate(a.best_state, cfg, bundle, splits.test, MetricKind::accuracy);
  const auto p = predict(a.best_state, cfg, bundle, splits.test);
  CHECK(ev.value == metric(MetricKind::accuracy, p.values, p.labels, p.targets).value);
  CHECK(ev.value == a.test.value);
}

TEST_CASE("graph-level evaluation matches batched predictions") {
  const auto bundle = lifted_graphs(12, 3);
  const auto cfg = small_model(bundle);
  const auto state = init_model(cfg, DomainSignature::of(bundle.samples.front()));
  const std::vector<std::size_t> idx = {0, 3, 5, 7, 11};
  const auto small = predict(state, cfg, bundle, idx, 2);
  const auto large = predict(state, cfg, bundle, idx, 64);
  CHECK(max_abs_diff(small.values, large.values) <= 1e-12);
  CHECK(small.labels == large.labels);
}

TEST_CASE("batch_iter") {
  const auto bundle = lifted_graphs(5, 4);
  const std::vector<std::size_t> idx = {0, 1, 2, 3, 4};
  const auto batches = batch_iter(bundle, idx, 2, 0, false);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].num_samples == 2);
  CHECK(batches[1].num_samples == 2);
  CHECK(batches[2].num_samples == 1);
  std::vector<std::size_t> order;
  for (const auto& b : batches) order.insert(order.end(), b.sample_indices.begin(), b.sample_indices.end());
  CHECK(order == idx);
  for (const auto& b : batches)
    for (int r = 0; r <= max_rank(b.complex.complex); ++r) {
      std::size_t total = 0;
      for (std::size_t i : b.sample_indices) total += num_cells(bundle.samples[i].complex, r);
      CHECK(num_cells(b.complex.complex, r) == total);
      CHECK(b.complex.features[static_cast<std::size_t>(r)].rows() == total);
    }
  const auto shuffled = batch_iter(bundle, idx, 2, 9, true);
  std::multiset<std::size_t> seen;
  for (const auto& b : shuffled) seen.insert(b.sample_indices.begin(), b.sample_indices.end());
  CHECK(seen == std::multiset<std::size_t>(idx.begin(), idx.end()));
  CHECK_THROWS_AS(batch_iter(bundle, std::vector<std::size_t>{7}, 2, 0, false), std::invalid_argument);
}

TEST_CASE("preprocess cache") {
  const auto root = scratch("cache");
  const CacheStore store(root);
  GraphSetParams gp;
  gp.graphs = 6;
  const auto raw = make_graph_set_dataset(gp);
  const LiftingConfig clique{CliqueLifting{2}};

  const auto first = preprocess(raw, clique, &store);
  CHECK(first.stats.computed == 6);
  CHECK(first.stats.hits == 0);
  const auto second = preprocess(raw, clique, &store);
  CHECK(second.stats.computed == 0);
  CHECK(second.stats.hits == 6);
  CHECK(second.stats.digest == first.stats.digest);
  CHECK(second.bundle.samples == first.bundle.samples);
  CHECK(preprocess(raw, clique, nullptr).bundle.samples == first.bundle.samples);

  const auto other = preprocess(raw, LiftingConfig{CliqueLifting{1}}, &store);
  CHECK(other.stats.digest != first.stats.digest);
  CHECK(other.stats.computed == 6);

  fs::remove(store.sample_path(first.stats.digest, 2));
  const auto partial = preprocess(raw, clique, &store);
  CHECK(partial.stats.computed == 1);
  CHECK(partial.stats.hits == 5);

  write_text(store.sample_path(first.stats.digest, 4), "{not json");
  const auto repaired = preprocess(raw, clique, &store);
  CHECK(repaired.stats.corrupt_recomputed == 1);
  CHECK(repaired.stats.hits == 5);
  CHECK(repaired.bundle.samples == first.bundle.samples);

  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::remove_all(root);
}

TEST_CASE("dataset loaders") {
  const auto dir = scratch("loaders");
  const std::pair<NodeId, NodeId> e[] = {{0, 1}};
  for (const char* name : {"b.json", "a.json", "c.json"}) {
    auto g = build_graph(2, e).graph;
    g.graph_label = static_cast<double>(name[0] - 'a');
    write_complex(dir / "container" / name, featured_from_graph(g));
  }
  const auto bundle = load_dataset(dir / "container", DatasetFormat::container);
  REQUIRE(bundle.samples.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(*bundle.samples[i].graph_label == static_cast<double>(i));
  CHECK(bundle.location == TargetLocation::graph);

  fs::create_directories(dir / "edges");
  write_text(dir / "edges" / "edges.txt", "nodes 3\n0 1\n1 2\n");
  const auto p3 = load_dataset(dir / "edges", DatasetFormat::edge_list_dir);
  const Graph g = graph_from_featured(p3.samples.at(0));
  CHECK(g.num_nodes == 3);
  CHECK(g.edges == std::vector<Edge>{{0, 1}, {1, 2}});

  write_text(dir / "edges" / "edges.txt", "nodes 3\n0 1\n1 x\n");
  try {
    load_dataset(dir / "edges", DatasetFormat::edge_list_dir);
    FAIL("expected a schema error");
  } catch (const SchemaError& err) {
    CHECK(std::string(err.what()).find(":3") != std::string::npos);
  }

  auto wide = build_graph(2, e).graph;
  wide.node_features = DenseMatrix(2, 3);
  wide.graph_label = 1.0;
  write_complex(dir / "container" / "d.json", featured_from_graph(wide));
  try {
    check_homogeneous(load_dataset(dir / "container", DatasetFormat::container));
    FAIL("expected a refusal");
  } catch (const SchemaError& err) {
    const std::string msg = err.what();
    CHECK(msg.find("d.json") != std::string::npos);
    CHECK(msg.find("a.json") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("run config parsing reports every violation") {
  const std::string bad = R"(
[dataset]
source = "synthetic_sbm"
[model]
hidden_dim = 0
colour = "red"
[trainer]
train_frac = 0.8
val_frac = 0.3
)";
  try {
    parse_run_config(bad, ".");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("fractions exceed 1") != std::string::npos);
    CHECK(msg.find("hidden") != std::string::npos);
    CHECK(msg.find("colour") != std::string::npos);
  }
  const auto cfg = load_run_config(fs::path(TOPOFORGE_SOURCE_DIR) / "configs" / "sbm_node_classification.toml");
  CHECK(cfg.model.hidden_dim == 32);
  CHECK(cfg.model.layer.neighborhoods.size() == 4);
  CHECK(cfg.split.train_frac == 0.5);
}
