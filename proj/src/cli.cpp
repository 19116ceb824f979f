#include "topoforge/cli.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "topoforge/cache.hpp"
#include "topoforge/complex_io.hpp"
#include "topoforge/dataset.hpp"
#include "topoforge/error.hpp"
#include "topoforge/gradcheck.hpp"
#include "topoforge/pipeline.hpp"
#include "topoforge/rng.hpp"
#include "topoforge/splits.hpp"

namespace topoforge {

namespace fs = std::filesystem;

namespace {

struct LiftArgs {
  std::string lifting;
  std::vector<std::string> params;
};

std::map<std::string, std::int64_t> parse_params(const std::vector<std::string>& raw) {
  std::map<std::string, std::int64_t> out;
  for (const auto& p : raw) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--params expects key=value, got '" + p + "'");
    try {
      std::size_t used = 0;
      const auto value = std::stoll(p.substr(eq + 1), &used);
      if (used != p.size() - eq - 1) throw std::invalid_argument("trailing characters");
      out[p.substr(0, eq)] = value;
    } catch (const std::logic_error&) {
      throw ConfigError("--params " + p.substr(0, eq) + " must be an integer");
    }
  }
  return out;
}

LiftingConfig lifting_from_args(const LiftArgs& a) {
  std::vector<std::string> violations;
  auto cfg = make_lifting(a.lifting, parse_params(a.params), violations);
  if (!violations.empty()) {
    std::string msg = violations.front();
    for (std::size_t i = 1; i < violations.size(); ++i) msg += "; " + violations[i];
    throw ConfigError(msg);
  }
  return cfg;
}

DatasetFormat detect_format(const fs::path& input, const std::string& requested) {
  if (!requested.empty()) return parse_dataset_format(requested);
  if (fs::is_directory(input)) {
    if (fs::exists(input / "edges.txt")) return DatasetFormat::edge_list_dir;
    if (fs::exists(input / "cora.content")) return DatasetFormat::cora;
    return DatasetFormat::container;
  }
  return input.extension() == ".json" ? DatasetFormat::container : DatasetFormat::edge_list_dir;
}

void require_path(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw SchemaError(std::string(what) + " " + p.string() + ": no such file or directory");
}

/// Dataset-level counts: per-rank sums over all samples.
struct Totals {
  std::map<int, std::size_t> by_rank;
  bool hyperedges = false;
};

Totals total_counts(const DatasetBundle& b) {
  Totals t;
  for (const auto& s : b.samples)
    for (const auto& c : cell_counts(s.complex)) {
      t.by_rank[c.rank] += c.count;
      t.hyperedges = t.hyperedges || c.hyperedges;
    }
  return t;
}

std::string row_label(int rank, const Totals& t) {
  return t.hyperedges && rank == 1 ? "hyperedges" : std::to_string(rank);
}

int cmd_lift(const fs::path& input, const std::string& format, const LiftArgs& la, const fs::path& out_dir,
             std::ostream& out) {
  require_path(input, "input");
  const LiftingConfig cfg = lifting_from_args(la);
  const DatasetBundle raw = load_dataset(input, detect_format(input, format));
  const auto pre = preprocess(raw, cfg, nullptr);
  fs::create_directories(out_dir);
  nlohmann::ordered_json manifest;
  manifest["lifting"] = cfg.name();
  manifest["config"] = nlohmann::ordered_json::parse(cfg.canonical_json());
  manifest["digest"] = pre.stats.digest;
  manifest["samples"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < pre.bundle.samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "sample_%06zu.json", i);
    write_complex(out_dir / name, pre.bundle.samples[i]);
    nlohmann::ordered_json entry;
    entry["file"] = name;
    entry["source"] = raw.sources[i];
    entry["counts"] = count_vector(pre.bundle.samples[i].complex);
    manifest["samples"].push_back(std::move(entry));
  }
  const Totals t = total_counts(pre.bundle);
  std::vector<std::size_t> counts;
  for (const auto& [rank, n] : t.by_rank) counts.push_back(n);
  manifest["counts"] = counts;
  manifest["hyperedges"] = t.hyperedges;
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  out << "lifted " << pre.bundle.samples.size() << " sample(s) with " << cfg.name() << " -> " << out_dir.string()
      << "\n";
  out << "counts";
  for (auto c : counts) out << " " << c;
  out << "\n";
  return exit_ok;
}

int cmd_stats(const fs::path& input, const std::string& input_format, const std::optional<LiftArgs>& la,
              const std::string& format, std::ostream& out) {
  require_path(input, "input");
  if (format != "csv" && format != "tsv" && format != "json") throw ConfigError("--format must be csv, tsv or json");
  DatasetBundle b = load_dataset(input, detect_format(input, input_format));
  if (la) b = preprocess(b, lifting_from_args(*la), nullptr).bundle;
  const Totals t = total_counts(b);
  if (format == "json") {
    nlohmann::ordered_json j;
    for (const auto& [rank, n] : t.by_rank) j[row_label(rank, t)] = n;
    out << j.dump() << "\n";
    return exit_ok;
  }
  const char sep = format == "csv" ? ',' : '\t';
  out << "rank" << sep << "count\n";
  for (const auto& [rank, n] : t.by_rank) out << row_label(rank, t) << sep << n << "\n";
  return exit_ok;
}

int cmd_split(std::optional<std::size_t> n, const fs::path& input, const std::string& input_format,
              SplitSpec spec, const fs::path& out_path, std::ostream& out) {
  if (!n && input.empty()) throw ConfigError("split needs --n or --input");
  if (n && !input.empty()) throw ConfigError("split takes only one of --n and --input");
  if (spec.strategy == SplitStrategy::fixed && !fs::exists(spec.file))
    throw ConfigError("--file " + spec.file.string() + ": no such file");
  std::size_t units = n.value_or(0);
  if (!n) {
    require_path(input, "input");
    units = load_dataset(input, detect_format(input, input_format)).num_units();
  }
  const Splits s = make_splits(units, spec);
  if (!out_path.empty()) {
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_file_atomic(out_path, splits_to_json(s));
  }
  out << "train " << s.train.size() << "\nval " << s.val.size() << "\ntest " << s.test.size() << "\n";
  return exit_ok;
}

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.trainer.seed = seed;
  cfg.model.seed = mix_seed(seed, 1);
  cfg.split.seed = seed;
}

int cmd_run(const fs::path& config, std::optional<std::uint64_t> seed, const fs::path& out_dir, std::ostream& out) {
  if (!fs::exists(config)) throw ConfigError("--config " + config.string() + ": no such file");
  RunConfig cfg = load_run_config(config);
  if (seed) apply_seed(cfg, *seed);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  const auto result = run_pipeline(cfg);
  const auto& r = result.report;
  out << "dataset " << result.bundle.name << " (" << result.bundle.samples.size() << " sample(s), "
      << to_string(result.bundle.task) << ")\n";
  out << "cache " << r.cache.hits << " hit(s), " << r.cache.computed << " computed\n";
  out << "best epoch " << r.best_epoch << " of " << r.epochs_run << "\n";
  out << "TRAIN " << r.train_at_best.name << " " << format_double(r.train_at_best.value) << "\n";
  out << "VAL " << r.best_val.name << " " << format_double(r.best_val.value) << "\n";
  out << "TEST " << r.test.name << " " << format_double(r.test.value) << "\n";
  if (!cfg.out_dir.empty()) out << "report " << (cfg.out_dir / "report.json").string() << "\n";
  return exit_ok;
}

ModelConfig default_gradcheck_model() {
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

int cmd_gradcheck(const fs::path& config, bool all_modes, std::uint64_t seed, double tolerance, std::ostream& out) {
  ModelConfig base = default_gradcheck_model();
  std::optional<LiftingConfig> lifting = LiftingConfig{CliqueLifting{2}, FeatureLifting::projected_sum};
  if (!config.empty()) {
    if (!fs::exists(config)) throw ConfigError("--config " + config.string() + ": no such file");
    const RunConfig cfg = load_run_config(config);
    base = cfg.model;
    base.task = cfg.dataset.task.value_or(TaskKind::node_classification);
    lifting = cfg.lifting;
  }
  base.seed = mix_seed(seed, 1);
  const FeaturedComplex fc = gradcheck_complex(lifting, seed);
  const auto variants = all_modes ? all_mode_variants(base) : std::vector<ModelConfig>{base};
  double worst = 0.0;
  for (const auto& v : variants) {
    const auto r = gradcheck_model(v, fc);
    worst = std::max(worst, r.max_relative_error);
    out << "intra=" << to_string(v.layer.intra_agg) << " inter=" << to_string(v.layer.inter_agg)
        << " update=" << to_string(v.layer.update) << " readout=" << to_string(v.readout)
        << " coords=" << r.coordinates << " max_rel_err=" << r.max_relative_error
        << (r.max_relative_error <= tolerance ? " ok" : " FAIL") << "\n";
  }
  out << "max relative error " << worst << "\n";
  return worst <= tolerance ? exit_ok : exit_runtime;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"topoforge: topological liftings and higher-order message passing"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  fs::path input, out_dir, config, file;
  std::string format, input_format, stats_format = "csv";
  LiftArgs la;
  auto* lift = app.add_subcommand("lift", "Lift graphs into higher-order domains");
  lift->add_option("--input", input, "Input dataset (container file/dir, edge-list dir, or Cora dir)")->required();
  lift->add_option("--format", format, "Input format: container | edge_list_dir | cora (default: detect)");
  lift->add_option("--lifting", la.lifting, "clique | neighborhood | cycle | khop | knn")->required();
  lift->add_option("--params", la.params, "Lifting parameters key=value (repeatable or comma-separated)")
      ->delimiter(',');
  lift->add_option("--out", out_dir, "Output directory for containers and manifest.json")->required();

  LiftArgs stats_la;
  auto* stats = app.add_subcommand("stats", "Print per-rank cell counts");
  stats->add_option("--input", input, "Complex container file or directory")->required();
  stats->add_option("--input-format", input_format, "container | edge_list_dir | cora (default: detect)");
  stats->add_option("--lifting", stats_la.lifting, "Lift the input first");
  stats->add_option("--params", stats_la.params, "Lifting parameters key=value")->delimiter(',');
  stats->add_option("--format", stats_format, "csv | tsv | json")->check(CLI::IsMember({"csv", "tsv", "json"}));

  std::optional<std::size_t> n;
  std::string strategy = "random";
  SplitSpec spec;
  std::uint64_t seed = 0;
  auto* split = app.add_subcommand("split", "Generate train/val/test indices");
  split->add_option("--n", n, "Number of units");
  split->add_option("--input", input, "Dataset whose units are split");
  split->add_option("--input-format", input_format, "container | edge_list_dir | cora (default: detect)");
  split->add_option("--strategy", strategy, "random | kfold | fixed")->check(CLI::IsMember({"random", "kfold", "fixed"}));
  split->add_option("--seed", seed, "Permutation seed");
  split->add_option("--train-frac", spec.train_frac, "Random strategy train fraction");
  split->add_option("--val-frac", spec.val_frac, "Random strategy val fraction");
  split->add_option("--k", spec.k, "Number of folds");
  split->add_option("--fold", spec.fold, "Test fold index");
  split->add_option("--file", file, "Splits file for the fixed strategy");
  split->add_option("--out", out_dir, "Output splits JSON");

  std::optional<std::uint64_t> run_seed;
  auto* run = app.add_subcommand("run", "Train and evaluate from a TOML config");
  run->add_option("--config", config, "Run configuration (TOML)")->required();
  run->add_option("--seed", run_seed, "Override the config seed");
  run->add_option("--out", out_dir, "Override the report directory");

  bool all_modes = false;
  double tolerance = 1e-4;
  auto* grad = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad->add_option("--config", config, "Run configuration whose model is checked");
  grad->add_flag("--all-modes", all_modes, "Check every aggregation/update/readout combination");
  grad->add_option("--seed", seed, "Synthetic complex and initialization seed");
  grad->add_option("--tolerance", tolerance, "Maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  }

  try {
    if (*lift) return cmd_lift(input, format, la, out_dir, out);
    if (*stats)
      return cmd_stats(input, input_format,
                       stats_la.lifting.empty() ? std::nullopt : std::optional<LiftArgs>(stats_la), stats_format,
                       out);
    if (*split) {
      spec.strategy = parse_split_strategy(strategy);
      spec.seed = seed;
      spec.file = file;
      return cmd_split(n, input, input_format, spec, out_dir, out);
    }
    if (*run) return cmd_run(config, run_seed, out_dir, out);
    if (*grad) return cmd_gradcheck(config, all_modes, seed, tolerance, out);
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << "\n";
    return exit_schema;
  } catch (const LiftingRefusal& e) {
    err << "lifting refused: " << e.what() << "\n";
    return exit_lifting;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const RuntimeAbort& e) {
    err << "aborted: " << e.what() << "\n";
    return exit_runtime;
  } catch (const std::out_of_range& e) {
    err << "schema error: " << e.what() << "\n";
    return exit_schema;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    err << "aborted: " << e.what() << "\n";
    return exit_runtime;
  }
  return exit_config;
}

}  // namespace topoforge
