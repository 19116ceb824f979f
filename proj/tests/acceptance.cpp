// Acceptance runner: one PASS/FAIL/SKIP line per criterion.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <unistd.h>

#include "oracles.hpp"
#include "topoforge/cli.hpp"
#include "topoforge/complex_io.hpp"
#include "topoforge/disjoint_union.hpp"
#include "topoforge/gradcheck.hpp"
#include "topoforge/kernels.hpp"
#include "topoforge/liftings.hpp"
#include "topoforge/metrics.hpp"
#include "topoforge/operators.hpp"
#include "topoforge/optimizer.hpp"
#include "topoforge/pipeline.hpp"
#include "topoforge/readout.hpp"
#include "topoforge/rng.hpp"

using namespace topoforge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  enum { pass, fail, skip } status;
  std::string detail;
};

Outcome pass(std::string d) { return {Outcome::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::fail, std::move(d)}; }

fs::path scratch(std::string_view name) {
  auto p = fs::temp_directory_path() / ("topoforge_acceptance_" + std::string(name) + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string stats_output(std::vector<std::string> args) {
  args.insert(args.begin(), {"topoforge", "stats"});
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != exit_ok) return "exit " + std::to_string(code) + ": " + err.str();
  return out.str();
}

std::string count_table(const std::vector<std::size_t>& counts, bool hyperedges = false) {
  std::string s = "rank,count\n";
  for (std::size_t r = 0; r < counts.size(); ++r)
    s += (hyperedges && r == 1 ? std::string("hyperedges") : std::to_string(r)) + "," + std::to_string(counts[r]) + "\n";
  return s;
}

// Integer product of two boundary matrices; true when every entry is zero.
bool integer_product_is_zero(const SparseOperator& a, const SparseOperator& b) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::map<std::size_t, long long> acc;
    for (const auto& e : a.row(i)) {
      const auto x = std::llround(e.value);
      if (static_cast<double>(x) != e.value) return false;
      for (const auto& f : b.row(e.col)) {
        const auto y = std::llround(f.value);
        if (static_cast<double>(y) != f.value) return false;
        acc[f.col] += x * y;
      }
    }
    for (const auto& [col, v] : acc)
      if (v != 0) return false;
  }
  return true;
}

std::size_t khop_oracle(const Graph& g) {
  const auto adj = oracle::dense_adjacency(g);
  std::set<std::vector<NodeId>> balls;
  for (NodeId v = 0; v < g.num_nodes; ++v) {
    std::vector<NodeId> ball;
    for (NodeId u = 0; u < g.num_nodes; ++u)
      if (u == v || adj[v][u]) ball.push_back(u);
    balls.insert(ball);
  }
  return balls.size();
}

ModelConfig gradcheck_base() {
  ModelConfig m;
  m.hidden_dim = 6;
  m.num_layers = 2;
  using K = NeighborhoodKind;
  m.layer.neighborhoods = {{{K::up_adjacency, 0, false}, 0},
                           {{K::up_incidence, 0, false}, 0},
                           {{K::down_incidence, 1, false}, 0},
                           {{K::up_incidence, 1, false}, 0},
                           {{K::down_incidence, 2, false}, 0}};
  return m;
}

Graph with_features(Graph g, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix x(g.num_nodes, d);
  for (double& v : x.values()) v = rng.uniform(-1.0, 1.0);
  g.node_features = x;
  return g;
}

std::vector<DenseMatrix> eval_forward(const ModelConfig& cfg, const ModelState& state, const Batch& batch) {
  ComputationRecord rec;
  const BoundParameters params(rec, state);
  const OperatorSet ops(batch.complex.complex, cfg);
  const auto res = forward(rec, params, cfg, batch, ops, false, 0);
  std::vector<DenseMatrix> out;
  for (ValueId v : res.latents) out.push_back(rec.value(v));
  return out;
}

Outcome c1_boundary() {
  const auto graphs = oracle::suite_graphs();
  std::size_t products = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Complex sc = lift_clique(graphs[i], 3);
    for (int r = 1; r < max_rank(sc); ++r, ++products)
      if (!integer_product_is_zero(boundary_matrix(sc, r, true), boundary_matrix(sc, r + 1, true)))
        return fail("clique complex of graph " + std::to_string(i) + " rank " + std::to_string(r));
    const Complex cc = lift_cycle(graphs[i]);
    ++products;
    if (!integer_product_is_zero(boundary_matrix(cc, 1, true), boundary_matrix(cc, 2, true)))
      return fail("cycle complex of graph " + std::to_string(i));
  }
  return pass(std::to_string(graphs.size()) + " graphs, " + std::to_string(products) + " integer products");
}

Outcome c2_clique_counts() {
  const auto graphs = oracle::suite_graphs();
  for (std::size_t i = 0; i < graphs.size(); ++i)
    for (int d : {2, 3}) {
      const Complex sc = lift_clique(graphs[i], d);
      const auto expected = oracle::clique_counts_bruteforce(graphs[i], d);
      for (int r = 0; r <= d; ++r)
        if (num_cells(sc, r) != expected[static_cast<std::size_t>(r)])
          return fail("graph " + std::to_string(i) + " max_dim " + std::to_string(d) + " rank " + std::to_string(r));
    }
  return pass(std::to_string(graphs.size()) + " graphs x max_dim {2,3}");
}

Outcome c3_cycle_counts() {
  const auto graphs = oracle::suite_graphs();
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& g = graphs[i];
    const std::size_t expected = g.edges.size() + oracle::components_union_find(g) - g.num_nodes;
    if (num_cells(lift_cycle(g), 2) != expected) return fail("graph " + std::to_string(i));
  }
  return pass(std::to_string(graphs.size()) + " graphs");
}

Outcome c4_table3() {
  const auto dir = scratch("c4");
  const auto graphs = oracle::suite_graphs(40);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& g = graphs[i];
    const auto file = dir / ("g" + std::to_string(i) + ".json");
    write_complex(file, Complex{g});
    const std::string in = file.string();
    if (stats_output({"--input", in, "--lifting", "clique", "--params", "max_dim=3"}) !=
        count_table(oracle::clique_counts_bruteforce(g, 3)))
      return fail("clique stats differ from the oracle on graph " + std::to_string(i));
    const std::size_t cycles = g.edges.size() + oracle::components_union_find(g) - g.num_nodes;
    if (stats_output({"--input", in, "--lifting", "cycle"}) != count_table({g.num_nodes, g.edges.size(), cycles}))
      return fail("cycle stats differ from the oracle on graph " + std::to_string(i));
    if (stats_output({"--input", in, "--lifting", "khop", "--params", "k=1"}) !=
        count_table({g.num_nodes, khop_oracle(g)}, true))
      return fail("khop stats differ from the oracle on graph " + std::to_string(i));
  }
  fs::remove_all(dir);
  const std::string synthetic = "synthetic oracle check passed on " + std::to_string(graphs.size()) + " graphs";

  const char* env = std::getenv("TOPOFORGE_CORA_DIR");
  if (!env || !fs::exists(fs::path(env) / "cora.content") || !fs::exists(fs::path(env) / "cora.cites"))
    return {Outcome::skip, "Cora files absent (set TOPOFORGE_CORA_DIR); " + synthetic};
  const std::vector<std::string> cora = {"--input", env, "--input-format", "cora"};
  auto with = [&](std::vector<std::string> extra) {
    auto args = cora;
    args.insert(args.end(), extra.begin(), extra.end());
    return stats_output(args);
  };
  const auto simplicial = with({"--lifting", "clique", "--params", "max_dim=3"});
  if (simplicial != count_table({2708, 5278, 1630, 220})) return fail("Cora simplicial:\n" + simplicial);
  const auto cellular = with({"--lifting", "cycle"});
  if (cellular != count_table({2708, 5278, 2648})) return fail("Cora cellular:\n" + cellular);
  const auto hyper = with({"--lifting", "khop", "--params", "k=1"});
  if (hyper != count_table({2708, 2708}, true)) return fail("Cora hypergraph:\n" + hyper);
  return pass("Cora simplicial/cellular/hypergraph counts match; " + synthetic);
}

Outcome c5_gradients() {
  // Same model and complex as `topoforge gradcheck --all-modes` at seed 0.
  auto base = gradcheck_base();
  base.seed = mix_seed(0, 1);
  const auto fc = gradcheck_complex(LiftingConfig{CliqueLifting{2}}, 0);
  double worst = 0.0;
  std::size_t combos = 0;
  for (const auto& v : all_mode_variants(base)) {
    const auto r = gradcheck_model(v, fc);
    worst = std::max(worst, r.max_relative_error);
    ++combos;
    if (!(r.max_relative_error <= 1e-4))
      return fail("intra=" + std::string(to_string(v.layer.intra_agg)) + " inter=" +
                  std::string(to_string(v.layer.inter_agg)) + " update=" + std::string(to_string(v.layer.update)) +
                  " readout=" + std::string(to_string(v.readout)) + " error " + std::to_string(r.max_relative_error));
  }

  // Model-seed sweep, reported but not gating: near-zero coordinates sit at
  // the finite-difference noise floor.
  std::size_t over = 0, total = 0;
  double largest_over = 0.0, sweep_worst_abs = 0.0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto b = gradcheck_base();
    b.seed = seed;
    for (const auto& v : all_mode_variants(b)) {
      const auto r = gradcheck_model(v, fc);
      ++total;
      sweep_worst_abs = std::max(sweep_worst_abs, std::abs(r.analytic - r.numeric));
      if (r.max_relative_error > 1e-4) {
        ++over;
        largest_over = std::max(largest_over, std::max(std::abs(r.analytic), std::abs(r.numeric)));
      }
    }
  }
  std::ostringstream s;
  s << combos << " combinations, max relative error " << worst << "; seed sweep: " << over << "/" << total
    << " exceed 1e-4";
  if (over > 0) s << " (all on coordinates with |g| <= " << largest_over << ")";
  s << ", worst abs diff " << sweep_worst_abs;
  return pass(s.str());
}

Outcome c6_graph_mp() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Graph g = oracle::random_graph(5 + seed % 20, 0.3, 9000 + seed);
    for (UpdateKind update : {UpdateKind::relu_residual, UpdateKind::relu_plain, UpdateKind::identity}) {
      ModelConfig cfg;
      cfg.hidden_dim = 4;
      cfg.num_layers = 1;
      cfg.layer.update = update;
      cfg.layer.neighborhoods = {{{NeighborhoodKind::up_adjacency, 0, false}, 0}};
      cfg.seed = seed;
      const auto state = init_model(cfg, DomainSignature{DomainKind::graph, {4, 1}});
      Rng rng(seed);
      DenseMatrix h(g.num_nodes, 4);
      for (double& v : h.values()) v = rng.uniform(-1.0, 1.0);
      ComputationRecord rec;
      const BoundParameters params(rec, state);
      const OperatorSet ops(Complex{g}, cfg);
      const ValueId latents[] = {rec.constant(h), rec.constant(DenseMatrix(g.edges.size(), 4))};
      const DenseMatrix out = rec.value(homp_layer_forward(rec, latents, ops, params, 0, cfg)[0]);
      const DenseMatrix u =
          update == UpdateKind::identity ? DenseMatrix(4, 4) : state.get(param_id::update(0, 0)).matrix;
      const auto kind = update == UpdateKind::relu_residual ? oracle::Update::residual
                        : update == UpdateKind::relu_plain  ? oracle::Update::plain
                                                            : oracle::Update::identity;
      const auto expected = oracle::graph_mp_layer(g, h, state.get(param_id::message(0, 0, 0)).matrix, u, kind);
      worst = std::max(worst, max_abs_diff(out, expected));
    }
  }
  std::ostringstream s;
  s << "50 graphs x 3 updates, max abs diff " << worst;
  return worst <= 1e-12 ? pass(s.str()) : fail(s.str());
}

Outcome c7_sdp_dr() {
  std::size_t checks = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto fc = apply_lifting(with_features(oracle::random_graph(12, 0.4, 7000 + seed), 3, seed), {});
    for (TaskKind task : {TaskKind::node_classification, TaskKind::graph_regression}) {
      auto cfg = gradcheck_base();
      cfg.readout = ReadoutKind::signal_down_propagation;
      cfg.task = task;
      cfg.output_dim = is_classification(task) ? 3 : 1;
      cfg.seed = seed;
      const auto state = init_model(cfg, DomainSignature::of(fc));
      const Batch batch = Batch::single(fc);
      ComputationRecord rec;
      const BoundParameters params(rec, state);
      const OperatorSet ops(fc.complex, cfg);
      auto latents = forward(rec, params, cfg, batch, ops, false, 0).latents;
      for (std::size_t r = 1; r < latents.size(); ++r) {
        const auto& v = rec.value(latents[r]);
        latents[r] = rec.constant(DenseMatrix(v.rows(), v.cols()));
      }
      auto dr_cfg = cfg;
      dr_cfg.readout = ReadoutKind::direct;
      const DenseMatrix sdp = rec.value(readout(rec, latents, ops, params, cfg, batch));
      const DenseMatrix dr = rec.value(readout(rec, latents, ops, params, dr_cfg, batch));
      if (!sdp.bitwise_equal(dr)) return fail("seed " + std::to_string(seed) + " task " + std::string(to_string(task)));
      ++checks;
    }
  }
  return pass(std::to_string(checks) + " bitwise-equal prediction sets");
}

Outcome c8_batching() {
  GraphSetParams gp;
  gp.graphs = 12;
  auto raw = make_graph_set_dataset(gp);
  for (std::size_t i = 0; i < raw.samples.size(); ++i) {
    Graph g = graph_from_featured(raw.samples[i]);
    raw.samples[i] = featured_from_graph(with_features(g, 3, i));
  }
  const auto bundle = preprocess(raw, LiftingConfig{CliqueLifting{2}}, nullptr).bundle;
  double worst = 0.0;
  std::size_t modes = 0;
  for (auto cfg : all_mode_variants(gradcheck_base())) {
    cfg.task = TaskKind::graph_classification;
    const auto state = init_model(cfg, DomainSignature::of(bundle.samples.front()));
    std::vector<std::size_t> idx(bundle.samples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (const auto& batch : batch_iter(bundle, idx, 5, 0, false)) {
      const auto joint = eval_forward(cfg, state, batch);
      std::vector<std::size_t> offset(joint.size(), 0);
      for (std::size_t s : batch.sample_indices) {
        const auto single = eval_forward(cfg, state, Batch::single(bundle.samples[s]));
        for (std::size_t r = 0; r < joint.size(); ++r) {
          for (std::size_t i = 0; i < single[r].rows(); ++i)
            for (std::size_t c = 0; c < single[r].cols(); ++c)
              worst = std::max(worst, std::abs(joint[r](offset[r] + i, c) - single[r](i, c)));
          offset[r] += single[r].rows();
        }
      }
    }
    ++modes;
  }
  if (!(worst <= 1e-12)) return fail("forward max abs diff " + std::to_string(worst));

  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n1 = 4, n2 = 8;
    DenseMatrix p(n1 + n2, 2), t(n1 + n2, 2), p1(n1, 2), p2(n2, 2), t1(n1, 2), t2(n2, 2);
    std::vector<std::int64_t> labels(n1 + n2);
    for (std::size_t i = 0; i < n1 + n2; ++i) {
      labels[i] = static_cast<std::int64_t>(rng.below(2));
      for (std::size_t c = 0; c < 2; ++c) {
        p(i, c) = static_cast<double>(rng.below(16)) / 8.0;
        t(i, c) = static_cast<double>(rng.below(16)) / 8.0;
        (i < n1 ? p1 : p2)(i < n1 ? i : i - n1, c) = p(i, c);
        (i < n1 ? t1 : t2)(i < n1 ? i : i - n1, c) = t(i, c);
      }
    }
    const std::span<const std::int64_t> l(labels);
    for (MetricKind kind : {MetricKind::accuracy, MetricKind::mse, MetricKind::mae}) {
      const auto whole = metric(kind, p, l, t);
      const auto a = metric(kind, p1, l.subspan(0, n1), t1);
      const auto b = metric(kind, p2, l.subspan(n1), t2);
      const double combined = (static_cast<double>(a.n) * a.value + static_cast<double>(b.n) * b.value) /
                              static_cast<double>(a.n + b.n);
      if (whole.value != combined) return fail(std::string(to_string(kind)) + " combination differs");
    }
  }
  std::ostringstream s;
  s << modes << " mode combinations, forward max abs diff " << worst << "; metric combination exact on 50 trials";
  return pass(s.str());
}

Outcome c9_determinism() {
  const auto dir = scratch("c9");
  auto cfg = load_run_config(fs::path(TOPOFORGE_SOURCE_DIR) / "configs" / "graph_classification.toml");
  cfg.cache_dir = dir / "cache";
  cfg.use_cache = true;
  cfg.out_dir = dir / "out";
  auto stripped = [&] {
    auto j = nlohmann::ordered_json::parse(read_file(cfg.out_dir / "report.json"));
    j.erase("runtime");
    return j.dump() + "\n" + read_file(cfg.out_dir / "metrics.csv");
  };
  const auto first = run_pipeline(cfg);
  const std::string a = stripped();
  const auto second = run_pipeline(cfg);
  const std::string b = stripped();
  fs::remove_all(dir);
  const std::size_t n = first.bundle.samples.size();
  if (a != b) return fail("reports differ between identical runs");
  if (first.report.cache.computed != n) return fail("first run computed " + std::to_string(first.report.cache.computed));
  if (second.report.cache.computed != 0 || second.report.cache.hits != n)
    return fail("second run computed " + std::to_string(second.report.cache.computed) + ", hits " +
                std::to_string(second.report.cache.hits));
  return pass("bit-identical report.json (runtime excluded) and metrics.csv; second preprocess: " +
              std::to_string(second.report.cache.hits) + " hits, 0 computed");
}

Outcome c10_smoke() {
  const auto dir = scratch("c10");
  auto cfg = load_run_config(fs::path(TOPOFORGE_SOURCE_DIR) / "configs" / "sbm_node_classification.toml");
  cfg.cache_dir = dir / "cache";
  cfg.out_dir = dir / "out";
  const auto start = std::chrono::steady_clock::now();
  const auto result = run_pipeline(cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  fs::remove_all(dir);
  const auto& r = result.report;
  std::ostringstream s;
  s << "train " << r.train_at_best.value << ", test " << r.test.value << ", epochs " << r.epochs_run << ", "
    << std::fixed << std::setprecision(2) << seconds << " s";
  const bool ok = cfg.model.num_layers == 2 && cfg.model.readout == ReadoutKind::direct &&
                  r.train_at_best.value >= 0.9 && r.test.value >= 0.8 && r.epochs_run <= 200 && seconds < 60.0;
  return ok ? pass(s.str()) : fail(s.str());
}

Outcome c11_schedule() {
  OptimizerConfig cfg;
  for (double lr0 : {0.01, 0.001, 0.1, 0.3}) {
    cfg.lr = lr0;
    if (scheduled_lr(cfg, 49) != lr0 || scheduled_lr(cfg, 50) != lr0 * 0.5 || scheduled_lr(cfg, 100) != lr0 * 0.25)
      return fail("lr0 " + std::to_string(lr0));
  }
  return pass("epochs 49/50/100 give lr0 x {1, 0.5, 0.25} exactly");
}

}  // namespace

int main() {
  kernels::set_num_threads(1);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"C1 boundary of a boundary is zero", c1_boundary},
      {"C2 clique counts match subset enumeration", c2_clique_counts},
      {"C3 cycle counts match the cycle-space dimension", c3_cycle_counts},
      {"C4 dataset statistics", c4_table3},
      {"C5 gradients match finite differences", c5_gradients},
      {"C6 graph message passing reduction", c6_graph_mp},
      {"C7 SDP equals DR at pass-through", c7_sdp_dr},
      {"C8 batch equivalence", c8_batching},
      {"C9 determinism and caching", c9_determinism},
      {"C10 SBM end-to-end smoke run", c10_smoke},
      {"C11 step schedule", c11_schedule},
  };
  const double limits[] = {10, 30, 30, 120, 60, 60, 60, 60, 60, 60, 60};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.status != Outcome::fail && seconds >= limits[i]) {
      std::ostringstream s;
      s << o.detail << "; over the " << limits[i] << " s budget";
      o = fail(s.str());
    }
    const char* tag = o.status == Outcome::pass ? "PASS" : o.status == Outcome::skip ? "SKIP" : "FAIL";
    if (o.status == Outcome::fail) ++failures;
    std::cout << tag << "  " << criteria[i].first << ": " << o.detail << " (" << std::fixed << std::setprecision(2)
              << seconds << " s)" << std::defaultfloat << "\n";
  }
  std::cout << (failures == 0 ? "all criteria met" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
