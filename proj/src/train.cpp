#include "topoforge/train.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "topoforge/complex_io.hpp"
#include "topoforge/disjoint_union.hpp"
#include "topoforge/error.hpp"
#include "topoforge/readout.hpp"
#include "topoforge/rng.hpp"

namespace topoforge {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<Batch> batch_iter(const DatasetBundle& bundle, std::span<const std::size_t> indices,
                              std::size_t batch_size, std::uint64_t seed, bool shuffle) {
  if (indices.empty()) throw std::invalid_argument("batch_iter: empty indices");
  if (batch_size == 0) throw std::invalid_argument("batch_iter: batch_size must be positive");
  const std::size_t units = bundle.num_units();
  for (std::size_t i : indices)
    if (i >= units) throw std::invalid_argument("batch_iter: index " + std::to_string(i) + " out of range");
  if (bundle.location == TargetLocation::node) return {Batch::single(bundle.samples.front())};

  std::vector<std::size_t> order(indices.begin(), indices.end());
  if (shuffle) {
    const auto p = permutation(order.size(), seed);
    std::vector<std::size_t> shuffled;
    for (std::size_t i : p) shuffled.push_back(order[i]);
    order = std::move(shuffled);
  }
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<FeaturedComplex> members;
    for (std::size_t k = start; k < end; ++k) members.push_back(bundle.samples[order[k]]);
    auto u = disjoint_union(members);
    Batch b;
    b.complex = std::move(u.complex);
    b.batch = std::move(u.batch);
    b.num_samples = members.size();
    b.sample_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                            order.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(std::move(b));
  }
  return out;
}

TrainConfig TrainConfig::defaults_for(TargetLocation location, TaskKind task) {
  TrainConfig tc;
  if (location == TargetLocation::graph) {
    tc.eval_every = 5;
    tc.patience = 10;
  }
  tc.metric = is_classification(task) ? MetricKind::accuracy : MetricKind::mse;
  return tc;
}

std::vector<std::string> TrainConfig::violations() const {
  std::vector<std::string> out;
  if (!(optimizer.lr > 0.0)) out.push_back("optimizer.lr must be positive");
  if (optimizer.step_size < 1) out.push_back("optimizer.step_size must be >= 1");
  if (!(optimizer.gamma > 0.0)) out.push_back("optimizer.gamma must be positive");
  if (batch_size < 1) out.push_back("trainer.batch_size must be >= 1");
  if (max_epochs < 1) out.push_back("trainer.max_epochs must be >= 1");
  if (eval_every < 1) out.push_back("trainer.eval_every must be >= 1");
  if (patience < 1) out.push_back("trainer.patience must be >= 1");
  if (min_epochs < 0) out.push_back("trainer.min_epochs must be >= 0");
  return out;
}

namespace {

std::size_t num_classes(const DatasetBundle& b) {
  std::int64_t top = 1;
  if (b.location == TargetLocation::node) {
    if (b.samples.front().labels)
      for (auto y : *b.samples.front().labels) top = std::max(top, y);
  } else {
    for (const auto& s : b.samples)
      if (s.graph_label) top = std::max(top, static_cast<std::int64_t>(*s.graph_label));
  }
  return static_cast<std::size_t>(top + 1);
}

std::int64_t label_of(const DatasetBundle& b, std::size_t unit) {
  if (b.location == TargetLocation::node) {
    const auto& labels = b.samples.front().labels;
    if (!labels) throw SchemaError(b.sources.front() + ": node classification needs node labels");
    return (*labels)[unit];
  }
  const auto& g = b.samples[unit].graph_label;
  if (!g) throw SchemaError(b.sources[unit] + ": graph classification needs a graph_label");
  return static_cast<std::int64_t>(*g);
}

double target_of(const DatasetBundle& b, std::size_t unit) {
  if (b.location == TargetLocation::node) {
    const auto& targets = b.samples.front().targets;
    if (!targets) throw SchemaError(b.sources.front() + ": node regression needs node targets");
    return (*targets)[unit];
  }
  const auto& g = b.samples[unit].graph_label;
  if (!g) throw SchemaError(b.sources[unit] + ": graph regression needs a graph_label");
  return *g;
}

struct Truth {
  std::vector<std::int64_t> labels;
  DenseMatrix targets;
};

Truth truth_for(const DatasetBundle& b, std::span<const std::size_t> units, bool classification) {
  Truth t;
  t.targets = DenseMatrix(classification ? 0 : units.size(), classification ? 0 : 1);
  for (std::size_t k = 0; k < units.size(); ++k) {
    if (classification) t.labels.push_back(label_of(b, units[k]));
    else t.targets(k, 0) = target_of(b, units[k]);
  }
  return t;
}

struct Prepared {
  Batch batch;
  OperatorSet ops;
};

std::vector<Prepared> prepare(const DatasetBundle& bundle, std::span<const std::size_t> indices,
                              std::size_t batch_size, std::uint64_t seed, bool shuffle, const ModelConfig& cfg) {
  std::vector<Prepared> out;
  for (auto& b : batch_iter(bundle, indices, batch_size, seed, shuffle)) {
    OperatorSet ops(b.complex.complex, cfg);
    out.push_back({std::move(b), std::move(ops)});
  }
  return out;
}

/// Predictions for the units of one prepared batch: all nodes (node-level)
/// or one row per member sample (graph-level).
ValueId batch_predictions(ComputationRecord& rec, const BoundParameters& params, const ModelConfig& cfg,
                          const Prepared& p, bool training, std::uint64_t dropout_seed) {
  const auto fwd = forward(rec, params, cfg, p.batch, p.ops, training, dropout_seed);
  return readout(rec, fwd.latents, p.ops, params, cfg, p.batch);
}

LossKind loss_for(TaskKind task) {
  return is_classification(task) ? LossKind::softmax_cross_entropy : LossKind::mse;
}

Predictions predict_prepared(const ModelState& state, const ModelConfig& cfg, const DatasetBundle& bundle,
                             std::span<const std::size_t> indices, const std::vector<Prepared>& prepared) {
  Predictions out;
  const bool cls = is_classification(cfg.task);
  std::vector<DenseMatrix> parts;
  for (const auto& p : prepared) {
    ComputationRecord rec;
    BoundParameters params(rec, state);
    const ValueId pred = batch_predictions(rec, params, cfg, p, false, 0);
    if (bundle.location == TargetLocation::node) {
      const ValueId rows = rec.row_slice(pred, indices);
      parts.push_back(rec.value(rows));
    } else {
      parts.push_back(rec.value(pred));
    }
  }
  out.values = vstack(parts);
  std::vector<std::size_t> units;
  if (bundle.location == TargetLocation::node) units.assign(indices.begin(), indices.end());
  else
    for (const auto& p : prepared) units.insert(units.end(), p.batch.sample_indices.begin(), p.batch.sample_indices.end());
  auto truth = truth_for(bundle, units, cls);
  out.labels = std::move(truth.labels);
  out.targets = std::move(truth.targets);
  return out;
}

MetricReport score(MetricKind kind, const Predictions& p) { return metric(kind, p.values, p.labels, p.targets); }

}  // namespace

ModelConfig complete_model_config(ModelConfig cfg, const DatasetBundle& bundle) {
  cfg.task = bundle.task;
  cfg.output_dim = is_classification(bundle.task) ? num_classes(bundle) : 1;
  return cfg;
}

Predictions predict(const ModelState& state, const ModelConfig& cfg, const DatasetBundle& bundle,
                    std::span<const std::size_t> indices, std::size_t batch_size) {
  const auto prepared = prepare(bundle, indices, batch_size, 0, false, cfg);
  return predict_prepared(state, cfg, bundle, indices, prepared);
}

MetricReport evaluate(const ModelState& state, const ModelConfig& cfg, const DatasetBundle& bundle,
                      std::span<const std::size_t> indices, MetricKind kind, std::size_t batch_size) {
  return score(kind, predict(state, cfg, bundle, indices, batch_size));
}

RunReport train(const ModelConfig& cfg, const DatasetBundle& bundle, const Splits& splits, const TrainConfig& tc) {
  if (auto v = tc.violations(); !v.empty()) throw ConfigError(v.front());
  if (bundle.samples.empty()) throw SchemaError("train: empty dataset");
  if (splits.train.empty() || splits.val.empty() || splits.test.empty())
    throw ConfigError("train: every split must be nonempty");
  const auto started = std::chrono::steady_clock::now();

  RunReport report;
  ModelState state = init_model(cfg, DomainSignature::of(bundle.samples.front()));
  Adam adam(tc.optimizer);
  const bool node_level = bundle.location == TargetLocation::node;
  const bool cls = is_classification(cfg.task);
  const LossKind loss_kind = loss_for(cfg.task);

  // Batches that do not change across epochs are built once.
  std::vector<Prepared> node_batch;
  if (node_level) node_batch = prepare(bundle, splits.train, tc.batch_size, 0, false, cfg);
  const auto train_eval = prepare(bundle, splits.train, tc.batch_size, 0, false, cfg);
  const auto val_eval = prepare(bundle, splits.val, tc.batch_size, 0, false, cfg);
  const Truth node_truth = node_level ? truth_for(bundle, splits.train, cls) : Truth{};

  const bool higher = higher_is_better(tc.metric);
  double best = higher ? -INFINITY : INFINITY;
  int bad_evals = 0;
  bool have_best = false;
  report.best_state = state;

  for (int epoch = 0; epoch < tc.max_epochs; ++epoch) {
    const std::vector<Prepared> shuffled =
        node_level ? std::vector<Prepared>{}
                   : prepare(bundle, splits.train, tc.batch_size, mix_seed(tc.seed, static_cast<std::uint64_t>(epoch)),
                             true, cfg);
    const auto& batches = node_level ? node_batch : shuffled;
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& p = batches[b];
      ComputationRecord rec;
      BoundParameters params(rec, state);
      const std::uint64_t dropout_seed =
          mix_seed(mix_seed(tc.seed ^ 0xD0D0u, static_cast<std::uint64_t>(epoch)), b);
      ValueId pred = batch_predictions(rec, params, cfg, p, true, dropout_seed);
      Truth batch_truth;
      if (node_level) pred = rec.row_slice(pred, splits.train);
      else batch_truth = truth_for(bundle, p.batch.sample_indices, cls);
      const Truth& truth = node_level ? node_truth : batch_truth;
      const ValueId loss = record_loss(rec, loss_kind, pred, truth.labels, truth.targets);
      const double value = rec.value(loss)(0, 0);
      if (!std::isfinite(value)) throw RuntimeAbort("non-finite loss at epoch " + std::to_string(epoch + 1));
      epoch_loss += value;
      const auto grads = rec.backward(loss, state.parameters);
      try {
        adam.step(state, grads, epoch);
      } catch (const RuntimeAbort& e) {
        throw RuntimeAbort(std::string(e.what()) + " at epoch " + std::to_string(epoch + 1));
      }
    }
    const int done = epoch + 1;
    report.epochs_run = done;
    report.trajectory.push_back({"train", done, "loss", epoch_loss / static_cast<double>(batches.size())});
    if (done % tc.eval_every != 0) continue;

    const auto train_metric = score(tc.metric, predict_prepared(state, cfg, bundle, splits.train, train_eval));
    const auto val_metric = score(tc.metric, predict_prepared(state, cfg, bundle, splits.val, val_eval));
    report.trajectory.push_back({"train", done, train_metric.name, train_metric.value});
    report.trajectory.push_back({"val", done, val_metric.name, val_metric.value});
    const bool improved = !have_best || (higher ? val_metric.value > best : val_metric.value < best);
    if (improved) {
      have_best = true;
      best = val_metric.value;
      report.best_epoch = done;
      report.best_val = val_metric;
      report.train_at_best = train_metric;
      report.best_state = state;
      bad_evals = 0;
    } else {
      ++bad_evals;
    }
    if (bad_evals >= tc.patience && done >= tc.min_epochs) break;
  }
  if (!have_best) report.best_state = state;

  report.test_accesses_during_training = report.test_accesses;
  const auto test_prepared = prepare(bundle, splits.test, tc.batch_size, 0, false, cfg);
  report.test = score(tc.metric, predict_prepared(report.best_state, cfg, bundle, splits.test, test_prepared));
  ++report.test_accesses;
  report.trajectory.push_back({"test", report.best_epoch, report.test.name, report.test.value});
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

nlohmann::ordered_json report_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["config"] = r.config_echo;
  j["best_epoch"] = r.best_epoch;
  j["epochs_run"] = r.epochs_run;
  auto metric_json = [](const MetricReport& m) {
    nlohmann::ordered_json o;
    o["metric"] = m.name;
    o["value"] = m.value;
    o["n"] = m.n;
    return o;
  };
  j["final"]["train"] = metric_json(r.train_at_best);
  j["final"]["val"] = metric_json(r.best_val);
  j["final"]["test"] = metric_json(r.test);
  j["trajectory"] = nlohmann::ordered_json::array();
  for (const auto& row : r.trajectory) {
    nlohmann::ordered_json o;
    o["split"] = row.split;
    o["epoch"] = row.epoch;
    o["metric"] = row.metric;
    o["value"] = row.value;
    j["trajectory"].push_back(std::move(o));
  }
  j["audit"]["test_accesses_during_training"] = r.test_accesses_during_training;
  j["audit"]["test_accesses"] = r.test_accesses;
  j["runtime"]["wall_clock_seconds"] = r.wall_clock_seconds;
  j["runtime"]["cache"]["digest"] = r.cache.digest;
  j["runtime"]["cache"]["computed"] = r.cache.computed;
  j["runtime"]["cache"]["hits"] = r.cache.hits;
  j["runtime"]["cache"]["corrupt_recomputed"] = r.cache.corrupt_recomputed;
  return j;
}

std::string metrics_csv(const RunReport& r) {
  std::string out = "split,epoch,metric,value\n";
  for (const auto& row : r.trajectory)
    out += row.split + "," + std::to_string(row.epoch) + "," + row.metric + "," + format_double(row.value) + "\n";
  return out;
}

void write_run_report(const std::filesystem::path& dir, const RunReport& r) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "report.json", report_json(r).dump(2) + "\n");
  write_file_atomic(dir / "metrics.csv", metrics_csv(r));
}

}  // namespace topoforge
