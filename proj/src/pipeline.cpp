#include "topoforge/pipeline.hpp"

#include <set>
#include <sstream>

#include <toml.hpp>

#include "topoforge/complex_io.hpp"
#include "topoforge/error.hpp"
#include "topoforge/rng.hpp"

namespace topoforge {

namespace fs = std::filesystem;

LiftingConfig make_lifting(std::string_view name, const std::map<std::string, std::int64_t>& params,
                           std::vector<std::string>& violations) {
  std::set<std::string> allowed;
  auto take = [&](const char* key, std::int64_t fallback) {
    allowed.insert(key);
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  LiftingConfig cfg;
  if (name == "clique") {
    cfg.structural = CliqueLifting{static_cast<int>(take("max_dim", 2))};
  } else if (name == "neighborhood") {
    const auto dim = take("max_dim", 2);
    const auto size = take("max_neighborhood_size", 10);
    if (size < 0) violations.push_back("max_neighborhood_size must be nonnegative");
    cfg.structural = NeighborhoodLifting{static_cast<int>(dim), static_cast<std::size_t>(std::max<std::int64_t>(size, 0))};
  } else if (name == "cycle") {
    CycleLifting c;
    if (params.contains("max_cell_length")) {
      const auto len = take("max_cell_length", 0);
      if (len < 0) violations.push_back("max_cell_length must be nonnegative");
      c.max_cell_length = static_cast<std::size_t>(std::max<std::int64_t>(len, 0));
    }
    allowed.insert("max_cell_length");
    cfg.structural = c;
  } else if (name == "khop") {
    cfg.structural = KhopLifting{static_cast<int>(take("k", 1))};
  } else if (name == "knn") {
    cfg.structural = KnnLifting{static_cast<int>(take("k", 1))};
  } else {
    violations.push_back("unknown lifting '" + std::string(name) + "' (expected clique, neighborhood, cycle, khop or knn)");
    return cfg;
  }
  for (const auto& [key, value] : params)
    if (!allowed.contains(key)) violations.push_back(std::string(name) + " lifting has no parameter '" + key + "'");
  for (auto& v : cfg.violations()) violations.push_back(std::move(v));
  return cfg;
}

namespace {

/// Typed access to one TOML table that records every problem instead of
/// stopping at the first.
class Section {
 public:
  Section(const toml::table* table, std::string name, std::vector<std::string>& violations)
      : table_(table), name_(std::move(name)), violations_(violations) {}

  bool present() const { return table_ != nullptr; }

  std::optional<std::int64_t> integer(const char* key) { return typed<std::int64_t>(key, "an integer"); }
  std::optional<double> real(const char* key) {
    const toml::node* n = lookup(key);
    if (!n) return std::nullopt;
    if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer())) return v;
    bad_type(key, "a number");
    return std::nullopt;
  }
  std::optional<std::string> string(const char* key) { return typed<std::string>(key, "a string"); }
  std::optional<bool> boolean(const char* key) { return typed<bool>(key, "a boolean"); }
  const toml::array* array(const char* key) {
    const toml::node* n = lookup(key);
    if (!n) return nullptr;
    if (const auto* a = n->as_array()) return a;
    bad_type(key, "an array");
    return nullptr;
  }

  std::size_t count(const char* key, std::size_t fallback, std::int64_t min = 0) {
    const auto v = integer(key);
    if (!v) return fallback;
    if (*v < min) {
      error(std::string(key) + " must be >= " + std::to_string(min));
      return fallback;
    }
    return static_cast<std::size_t>(*v);
  }

  void error(const std::string& message) { violations_.push_back(name_ + "." + message); }

  /// Report keys that were never read.
  void finish() {
    if (!table_) return;
    for (const auto& [key, node] : *table_)
      if (!seen_.contains(std::string(key.str()))) violations_.push_back(name_ + ": unknown key '" + std::string(key.str()) + "'");
  }

 private:
  const toml::node* lookup(const char* key) {
    seen_.insert(key);
    return table_ ? table_->get(key) : nullptr;
  }

  template <class T>
  std::optional<T> typed(const char* key, const char* what) {
    const toml::node* n = lookup(key);
    if (!n) return std::nullopt;
    if (auto v = n->value_exact<T>()) return v;
    bad_type(key, what);
    return std::nullopt;
  }

  void bad_type(const char* key, const char* what) { error(std::string(key) + " must be " + what); }

  const toml::table* table_;
  std::string name_;
  std::vector<std::string>& violations_;
  std::set<std::string> seen_;
};

template <class F>
auto parse_or_record(F&& f, std::vector<std::string>& violations, const std::string& where)
    -> std::optional<decltype(f())> {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    violations.push_back(where + ": " + e.what());
    return std::nullopt;
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

/// (domain kind, max rank) a lifting produces, for static neighborhood checks.
std::optional<std::pair<DomainKind, int>> lifted_shape(const LiftingConfig& l) {
  if (const auto* c = std::get_if<CliqueLifting>(&l.structural)) return std::pair{DomainKind::simplicial, c->max_dim};
  if (std::holds_alternative<CycleLifting>(l.structural)) return std::pair{DomainKind::cell, 2};
  if (std::holds_alternative<KhopLifting>(l.structural) || std::holds_alternative<KnnLifting>(l.structural))
    return std::pair{DomainKind::hypergraph, 1};
  return std::nullopt;  // neighborhood complexes may trim empty top ranks
}

}  // namespace

RunConfig parse_run_config(std::string_view toml_text, const fs::path& base_dir, std::string_view source) {
  toml::table doc;
  try {
    doc = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }

  std::vector<std::string> v;
  static const std::set<std::string> tables = {"dataset", "transforms", "model", "optimizer", "trainer", "evaluator"};
  for (const auto& [key, node] : doc) {
    if (!tables.contains(std::string(key.str())))
      v.push_back("unknown table [" + std::string(key.str()) + "]");
    else if (!node.is_table())
      v.push_back(std::string(key.str()) + " must be a table");
  }
  auto section = [&](const char* name) { return Section(doc[name].as_table(), name, v); };

  RunConfig cfg;

  Section ds = section("dataset");
  if (!ds.present()) v.push_back("missing table [dataset]");
  if (auto s = ds.string("source")) cfg.dataset.source = *s;
  static const std::set<std::string> sources = {"container", "edge_list_dir", "cora", "synthetic_sbm", "synthetic_graphs"};
  if (!sources.contains(cfg.dataset.source))
    ds.error("source must be one of container, edge_list_dir, cora, synthetic_sbm, synthetic_graphs");
  const bool synthetic = cfg.dataset.source.starts_with("synthetic_");
  if (auto p = ds.string("path")) cfg.dataset.path = resolve(base_dir, *p);
  else if (!synthetic && sources.contains(cfg.dataset.source)) ds.error("path is required for source '" + cfg.dataset.source + "'");
  if (auto n = ds.string("name")) cfg.dataset.name = *n;
  if (auto t = ds.string("task"))
    cfg.dataset.task = parse_or_record([&] { return parse_task(*t); }, v, "dataset.task").value_or(TaskKind::node_classification);
  const std::uint64_t data_seed = static_cast<std::uint64_t>(ds.integer("seed").value_or(0));
  cfg.dataset.sbm.seed = cfg.dataset.graphs.seed = data_seed;
  cfg.dataset.sbm.nodes = ds.count("nodes", cfg.dataset.sbm.nodes, 3);
  cfg.dataset.sbm.blocks = ds.count("blocks", cfg.dataset.sbm.blocks, 1);
  cfg.dataset.sbm.p_in = ds.real("p_in").value_or(cfg.dataset.sbm.p_in);
  cfg.dataset.sbm.p_out = ds.real("p_out").value_or(cfg.dataset.sbm.p_out);
  cfg.dataset.sbm.feature_dim = ds.count("feature_dim", cfg.dataset.sbm.feature_dim, 1);
  cfg.dataset.sbm.feature_noise = ds.real("feature_noise").value_or(cfg.dataset.sbm.feature_noise);
  cfg.dataset.graphs.graphs = ds.count("graphs", cfg.dataset.graphs.graphs, 3);
  cfg.dataset.graphs.min_nodes = ds.count("min_nodes", cfg.dataset.graphs.min_nodes, 1);
  cfg.dataset.graphs.max_nodes = ds.count("max_nodes", cfg.dataset.graphs.max_nodes, 1);
  cfg.dataset.graphs.p_sparse = ds.real("p_sparse").value_or(cfg.dataset.graphs.p_sparse);
  cfg.dataset.graphs.p_dense = ds.real("p_dense").value_or(cfg.dataset.graphs.p_dense);
  for (double p : {cfg.dataset.sbm.p_in, cfg.dataset.sbm.p_out, cfg.dataset.graphs.p_sparse, cfg.dataset.graphs.p_dense})
    if (!(p >= 0.0 && p <= 1.0)) ds.error("edge probabilities must lie in [0, 1]");
  if (cfg.dataset.sbm.feature_dim < cfg.dataset.sbm.blocks) ds.error("feature_dim must be >= blocks");
  if (cfg.dataset.graphs.max_nodes < cfg.dataset.graphs.min_nodes) ds.error("max_nodes must be >= min_nodes");
  if (cfg.dataset.name.empty())
    cfg.dataset.name = synthetic ? cfg.dataset.source : cfg.dataset.path.filename().string();
  ds.finish();

  Section tr = section("transforms");
  cfg.cache_dir = resolve(base_dir, tr.string("cache_dir").value_or(".topoforge_cache"));
  cfg.use_cache = tr.boolean("cache").value_or(true);
  if (auto name = tr.string("lifting"); name && *name != "none") {
    std::map<std::string, std::int64_t> params;
    for (const char* key : {"max_dim", "max_neighborhood_size", "max_cell_length", "k"})
      if (auto x = tr.integer(key)) params[key] = *x;
    cfg.lifting = make_lifting(*name, params, v);
  } else {
    for (const char* key : {"max_dim", "max_neighborhood_size", "max_cell_length", "k"})
      if (tr.integer(key)) tr.error(std::string(key) + " given without a lifting");
  }
  if (auto f = tr.string("feature_lifting"); f && *f != "projected_sum")
    tr.error("feature_lifting must be projected_sum");
  tr.finish();

  Section md = section("model");
  ModelConfig& m = cfg.model;
  m.hidden_dim = md.count("hidden_dim", m.hidden_dim, 1);
  m.encoder_dropout = md.real("dropout").value_or(m.encoder_dropout);
  if (!(m.encoder_dropout >= 0.0 && m.encoder_dropout < 1.0)) md.error("dropout must be in [0, 1)");
  m.num_layers = static_cast<int>(md.count("num_layers", static_cast<std::size_t>(m.num_layers), 0));
  if (auto s = md.string("intra_agg"))
    m.layer.intra_agg = parse_or_record([&] { return parse_intra_agg(*s); }, v, "model.intra_agg").value_or(m.layer.intra_agg);
  if (auto s = md.string("inter_agg"))
    m.layer.inter_agg = parse_or_record([&] { return parse_inter_agg(*s); }, v, "model.inter_agg").value_or(m.layer.inter_agg);
  if (auto s = md.string("update"))
    m.layer.update = parse_or_record([&] { return parse_update(*s); }, v, "model.update").value_or(m.layer.update);
  if (auto s = md.string("readout"))
    m.readout = parse_or_record([&] { return parse_readout(*s); }, v, "model.readout").value_or(m.readout);
  if (auto s = md.string("pooling"))
    m.pooling = parse_or_record([&] { return parse_pooling(*s); }, v, "model.pooling").value_or(m.pooling);
  if (const auto* arr = md.array("neighborhoods")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string where = "model.neighborhoods[" + std::to_string(i) + "]";
      const auto* t = (*arr)[i].as_table();
      if (!t) {
        v.push_back(where + " must be a table {kind, rank}");
        continue;
      }
      Section nb(t, where, v);
      NeighborhoodUse use;
      if (auto k = nb.string("kind"))
        use.spec.kind = parse_or_record([&] { return parse_neighborhood_kind(*k); }, v, where + ".kind")
                            .value_or(NeighborhoodKind::identity);
      else
        nb.error("kind is required");
      use.spec.rank = static_cast<int>(nb.count("rank", 0, 0));
      use.spec.is_signed = nb.boolean("signed").value_or(false);
      use.width = nb.count("width", 0, 1);
      nb.finish();
      m.layer.neighborhoods.push_back(use);
    }
  } else {
    m.layer.neighborhoods.push_back({NeighborhoodSpec{NeighborhoodKind::up_adjacency, 0, false}, 0});
  }
  md.finish();

  Section op = section("optimizer");
  auto& o = cfg.trainer.optimizer;
  o.lr = op.real("lr").value_or(o.lr);
  o.step_size = static_cast<int>(op.count("step_size", static_cast<std::size_t>(o.step_size), 1));
  o.gamma = op.real("gamma").value_or(o.gamma);
  o.beta1 = op.real("beta1").value_or(o.beta1);
  o.beta2 = op.real("beta2").value_or(o.beta2);
  o.eps = op.real("eps").value_or(o.eps);
  if (!(o.lr > 0.0)) op.error("lr must be positive");
  if (!(o.gamma > 0.0)) op.error("gamma must be positive");
  if (!(o.beta1 >= 0.0 && o.beta1 < 1.0) || !(o.beta2 >= 0.0 && o.beta2 < 1.0)) op.error("betas must be in [0, 1)");
  if (!(o.eps > 0.0)) op.error("eps must be positive");
  op.finish();

  Section tn = section("trainer");
  auto& t = cfg.trainer;
  t.max_epochs = static_cast<int>(tn.count("max_epochs", static_cast<std::size_t>(t.max_epochs), 1));
  t.batch_size = tn.count("batch_size", t.batch_size, 1);
  t.min_epochs = static_cast<int>(tn.count("min_epochs", static_cast<std::size_t>(t.min_epochs), 0));
  if (auto e = tn.integer("eval_every")) {
    if (*e < 1) tn.error("eval_every must be >= 1");
    else cfg.eval_every = static_cast<int>(*e);
  }
  if (auto p = tn.integer("patience")) {
    if (*p < 1) tn.error("patience must be >= 1");
    else cfg.patience = static_cast<int>(*p);
  }
  const auto seed = static_cast<std::uint64_t>(tn.integer("seed").value_or(0));
  t.seed = seed;
  m.seed = mix_seed(seed, 1);
  cfg.split.seed = seed;
  if (auto s = tn.string("split"))
    cfg.split.strategy =
        parse_or_record([&] { return parse_split_strategy(*s); }, v, "trainer.split").value_or(cfg.split.strategy);
  cfg.split.train_frac = tn.real("train_frac").value_or(cfg.split.train_frac);
  cfg.split.val_frac = tn.real("val_frac").value_or(cfg.split.val_frac);
  cfg.split.k = tn.count("k", cfg.split.k, 0);
  cfg.split.fold = tn.count("fold", cfg.split.fold, 0);
  if (auto f = tn.string("splits_file")) cfg.split.file = resolve(base_dir, *f);
  for (auto& s : cfg.split.violations()) v.push_back("trainer: " + s);
  tn.finish();

  Section ev = section("evaluator");
  if (auto s = ev.string("metric"))
    cfg.metric = parse_or_record([&] { return parse_metric(*s); }, v, "evaluator.metric");
  cfg.out_dir = resolve(base_dir, ev.string("out_dir").value_or("runs/" + cfg.dataset.name));
  ev.finish();

  // Cross-table checks that do not need the data.
  if (cfg.lifting) {
    if (auto shape = lifted_shape(*cfg.lifting)) {
      for (const auto& use : m.layer.neighborhoods)
        if (!use.spec.resolvable_with_max_rank(shape->second, shape->first))
          v.push_back("model.neighborhoods: " + use.spec.to_string() + " is not resolvable on the " +
                      std::string(to_string(shape->first)) + " domain produced by the " + cfg.lifting->name() +
                      " lifting");
    }
  }
  if (cfg.dataset.task && cfg.metric) {
    if (is_classification(*cfg.dataset.task) != is_classification_metric(*cfg.metric))
      v.push_back("evaluator.metric " + std::string(to_string(*cfg.metric)) + " does not fit task " +
                  std::string(to_string(*cfg.dataset.task)));
  }

  if (!v.empty()) {
    std::string msg = std::to_string(v.size()) + " configuration violation" + (v.size() == 1 ? "" : "s") + ":";
    for (const auto& s : v) msg += "\n  " + s;
    throw ConfigError(msg);
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(path.string() + ": cannot read config (" + e.what() + ")");
  }
  return parse_run_config(text, path.parent_path(), path.string());
}

nlohmann::ordered_json RunConfig::echo() const {
  nlohmann::ordered_json j;
  j["dataset"]["source"] = dataset.source;
  j["dataset"]["name"] = dataset.name;
  if (!dataset.path.empty()) j["dataset"]["path"] = dataset.path.string();
  if (dataset.source == "synthetic_sbm") {
    j["dataset"]["nodes"] = dataset.sbm.nodes;
    j["dataset"]["blocks"] = dataset.sbm.blocks;
    j["dataset"]["p_in"] = dataset.sbm.p_in;
    j["dataset"]["p_out"] = dataset.sbm.p_out;
    j["dataset"]["feature_dim"] = dataset.sbm.feature_dim;
    j["dataset"]["feature_noise"] = dataset.sbm.feature_noise;
    j["dataset"]["seed"] = dataset.sbm.seed;
  } else if (dataset.source == "synthetic_graphs") {
    j["dataset"]["graphs"] = dataset.graphs.graphs;
    j["dataset"]["min_nodes"] = dataset.graphs.min_nodes;
    j["dataset"]["max_nodes"] = dataset.graphs.max_nodes;
    j["dataset"]["p_sparse"] = dataset.graphs.p_sparse;
    j["dataset"]["p_dense"] = dataset.graphs.p_dense;
    j["dataset"]["seed"] = dataset.graphs.seed;
  }
  j["transforms"] = lifting ? nlohmann::ordered_json::parse(lifting->canonical_json()) : nlohmann::ordered_json("none");
  j["model"]["hidden_dim"] = model.hidden_dim;
  j["model"]["dropout"] = model.encoder_dropout;
  j["model"]["num_layers"] = model.num_layers;
  j["model"]["intra_agg"] = to_string(model.layer.intra_agg);
  j["model"]["inter_agg"] = to_string(model.layer.inter_agg);
  j["model"]["update"] = to_string(model.layer.update);
  j["model"]["readout"] = to_string(model.readout);
  j["model"]["pooling"] = to_string(model.pooling);
  j["model"]["task"] = to_string(model.task);
  j["model"]["output_dim"] = model.output_dim;
  for (const auto& use : model.layer.neighborhoods) {
    nlohmann::ordered_json n;
    n["kind"] = to_string(use.spec.kind);
    n["rank"] = use.spec.rank;
    n["signed"] = use.spec.is_signed;
    n["width"] = use.width;
    j["model"]["neighborhoods"].push_back(std::move(n));
  }
  j["optimizer"]["lr"] = trainer.optimizer.lr;
  j["optimizer"]["step_size"] = trainer.optimizer.step_size;
  j["optimizer"]["gamma"] = trainer.optimizer.gamma;
  j["optimizer"]["beta1"] = trainer.optimizer.beta1;
  j["optimizer"]["beta2"] = trainer.optimizer.beta2;
  j["optimizer"]["eps"] = trainer.optimizer.eps;
  j["trainer"]["max_epochs"] = trainer.max_epochs;
  j["trainer"]["batch_size"] = trainer.batch_size;
  j["trainer"]["eval_every"] = trainer.eval_every;
  j["trainer"]["patience"] = trainer.patience;
  j["trainer"]["min_epochs"] = trainer.min_epochs;
  j["trainer"]["seed"] = trainer.seed;
  j["trainer"]["split"] = to_string(split.strategy);
  if (split.strategy == SplitStrategy::random) {
    j["trainer"]["train_frac"] = split.train_frac;
    j["trainer"]["val_frac"] = split.val_frac;
  } else if (split.strategy == SplitStrategy::kfold) {
    j["trainer"]["k"] = split.k;
    j["trainer"]["fold"] = split.fold;
  } else {
    j["trainer"]["splits_file"] = split.file.string();
  }
  j["evaluator"]["metric"] = to_string(trainer.metric);
  return j;
}

DatasetBundle load_configured_dataset(const DatasetConfig& cfg) {
  DatasetBundle b;
  if (cfg.source == "synthetic_sbm") b = make_sbm_dataset(cfg.sbm);
  else if (cfg.source == "synthetic_graphs") b = make_graph_set_dataset(cfg.graphs);
  else b = load_dataset(cfg.path, parse_dataset_format(cfg.source));
  if (!cfg.name.empty()) b.name = cfg.name;
  if (cfg.task) {
    b.task = *cfg.task;
    b.location = is_node_task(*cfg.task) ? TargetLocation::node : TargetLocation::graph;
  }
  if (b.location == TargetLocation::node && b.samples.size() != 1)
    throw SchemaError("node-level tasks need exactly one complex, got " + std::to_string(b.samples.size()));
  return b;
}

PipelineResult run_pipeline(const RunConfig& cfg) {
  PipelineResult out;
  const DatasetBundle raw = load_configured_dataset(cfg.dataset);
  PreprocessStats stats;
  if (cfg.lifting) {
    const CacheStore store(cache_root(cfg.cache_dir));
    auto pre = preprocess(raw, *cfg.lifting, cfg.use_cache ? &store : nullptr);
    out.bundle = std::move(pre.bundle);
    stats = pre.stats;
  } else {
    out.bundle = raw;
    pad_samples(out.bundle);
  }
  check_homogeneous(out.bundle);

  out.model = complete_model_config(cfg.model, out.bundle);
  if (auto v = out.model.violations(DomainSignature::of(out.bundle.samples.front())); !v.empty()) {
    std::string msg = std::to_string(v.size()) + " configuration violation" + (v.size() == 1 ? "" : "s") + ":";
    for (const auto& s : v) msg += "\n  model: " + s;
    throw ConfigError(msg);
  }

  TrainConfig tc = cfg.trainer;
  const TrainConfig level = TrainConfig::defaults_for(out.bundle.location, out.bundle.task);
  tc.eval_every = cfg.eval_every.value_or(level.eval_every);
  tc.patience = cfg.patience.value_or(level.patience);
  tc.metric = cfg.metric.value_or(level.metric);
  if (is_classification(out.bundle.task) != is_classification_metric(tc.metric))
    throw ConfigError("1 configuration violation:\n  evaluator.metric " + std::string(to_string(tc.metric)) +
                      " does not fit task " + std::string(to_string(out.bundle.task)));

  out.splits = make_splits(out.bundle.num_units(), cfg.split);

  RunConfig resolved = cfg;
  resolved.model = out.model;
  resolved.trainer = tc;
  out.report = train(out.model, out.bundle, out.splits, tc);
  out.report.cache = stats;
  out.report.config_echo = resolved.echo();
  if (!cfg.out_dir.empty()) write_run_report(cfg.out_dir, out.report);
  return out;
}

}  // namespace topoforge
