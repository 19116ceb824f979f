#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "topoforge/cache.hpp"
#include "topoforge/dataset.hpp"
#include "topoforge/homp.hpp"
#include "topoforge/metrics.hpp"
#include "topoforge/optimizer.hpp"
#include "topoforge/splits.hpp"

namespace topoforge {

/// Graph-level: optional seeded shuffle, then chunks of batch_size, each the
/// disjoint union of its samples. Node-level: one batch holding the single
/// complex. Throws std::invalid_argument on empty or out-of-range indices.
std::vector<Batch> batch_iter(const DatasetBundle& bundle, std::span<const std::size_t> indices,
                              std::size_t batch_size, std::uint64_t seed, bool shuffle);

struct TrainConfig {
  OptimizerConfig optimizer;
  std::size_t batch_size = 32;
  int max_epochs = 200;
  int eval_every = 1;
  int patience = 50;
  int min_epochs = 50;
  std::uint64_t seed = 0;
  MetricKind metric = MetricKind::accuracy;

  /// Node-level: validate every epoch, patience 50. Graph-level: every 5
  /// epochs, patience 10 evaluations. Both enforce 50 epochs minimum.
  static TrainConfig defaults_for(TargetLocation location, TaskKind task);
  std::vector<std::string> violations() const;
};

/// Fill in the task and output width implied by the bundle.
ModelConfig complete_model_config(ModelConfig cfg, const DatasetBundle& bundle);

/// Predictions and ground truth for a set of units.
struct Predictions {
  DenseMatrix values;
  std::vector<std::int64_t> labels;
  DenseMatrix targets;
};

/// Eval-mode forward (dropout off) over `indices`.
Predictions predict(const ModelState& state, const ModelConfig& cfg, const DatasetBundle& bundle,
                    std::span<const std::size_t> indices, std::size_t batch_size = 64);

MetricReport evaluate(const ModelState& state, const ModelConfig& cfg, const DatasetBundle& bundle,
                      std::span<const std::size_t> indices, MetricKind kind, std::size_t batch_size = 64);

struct TrajectoryRow {
  std::string split;
  int epoch = 0;
  std::string metric;
  double value = 0.0;
};

struct RunReport {
  std::vector<TrajectoryRow> trajectory;
  int best_epoch = 0;
  int epochs_run = 0;
  MetricReport best_val;
  MetricReport train_at_best;
  MetricReport test;
  ModelState best_state;
  std::size_t test_accesses_during_training = 0;
  std::size_t test_accesses = 0;
  double wall_clock_seconds = 0.0;
  PreprocessStats cache;
  nlohmann::ordered_json config_echo;
};

/// Train with Adam + step schedule and early stopping on the validation
/// metric, restore the best parameters and evaluate the test split once.
/// Throws RuntimeAbort on a non-finite loss or gradient.
RunReport train(const ModelConfig& cfg, const DatasetBundle& bundle, const Splits& splits, const TrainConfig& tc);

/// report.json: everything except the "runtime" block is a pure function of
/// (config, seed). metrics.csv: header split,epoch,metric,value.
nlohmann::ordered_json report_json(const RunReport& r);
std::string metrics_csv(const RunReport& r);
void write_run_report(const std::filesystem::path& dir, const RunReport& r);

/// Shortest decimal that round-trips.
std::string format_double(double v);

}  // namespace topoforge
