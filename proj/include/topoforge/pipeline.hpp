#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "topoforge/cache.hpp"
#include "topoforge/dataset.hpp"
#include "topoforge/homp.hpp"
#include "topoforge/liftings.hpp"
#include "topoforge/splits.hpp"
#include "topoforge/train.hpp"

namespace topoforge {

/// Build a lifting from its name and integer parameters. Unknown names and
/// parameters are reported in `violations`.
LiftingConfig make_lifting(std::string_view name, const std::map<std::string, std::int64_t>& params,
                           std::vector<std::string>& violations);

struct DatasetConfig {
  std::string source = "synthetic_sbm";  // container | edge_list_dir | cora | synthetic_sbm | synthetic_graphs
  std::filesystem::path path;
  std::string name;
  std::optional<TaskKind> task;
  SbmParams sbm;
  GraphSetParams graphs;
};

/// A full run configuration; mirrors the TOML tables [dataset]
/// [transforms] [model] [optimizer] [trainer] [evaluator].
struct RunConfig {
  DatasetConfig dataset;
  std::optional<LiftingConfig> lifting;  // none: the dataset is used as loaded
  std::filesystem::path cache_dir;
  bool use_cache = true;
  ModelConfig model;
  TrainConfig trainer;
  // Level-dependent trainer defaults apply unless these are set.
  std::optional<int> eval_every;
  std::optional<int> patience;
  SplitSpec split;
  std::optional<MetricKind> metric;
  std::filesystem::path out_dir;

  nlohmann::ordered_json echo() const;
};

/// Parse a TOML document. Relative paths resolve against `base_dir`. Throws
/// ConfigError whose message lists every violation, one per line.
RunConfig parse_run_config(std::string_view toml_text, const std::filesystem::path& base_dir,
                           std::string_view source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

DatasetBundle load_configured_dataset(const DatasetConfig& cfg);

struct PipelineResult {
  RunReport report;
  ModelConfig model;
  DatasetBundle bundle;
  Splits splits;
};

/// load -> preprocess -> split -> train -> evaluate, then write report.json
/// and metrics.csv under cfg.out_dir when it is set.
PipelineResult run_pipeline(const RunConfig& cfg);

}  // namespace topoforge
