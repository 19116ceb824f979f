#include "topoforge/gradcheck.hpp"

#include <cmath>

#include "topoforge/dataset.hpp"
#include "topoforge/readout.hpp"
#include "topoforge/rng.hpp"

namespace topoforge {

FeaturedComplex gradcheck_complex(const std::optional<LiftingConfig>& lifting, std::uint64_t seed) {
  constexpr std::size_t n = 10;
  Rng rng(seed);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId v = 0; v < n; ++v) edges.emplace_back(v, static_cast<NodeId>((v + 1) % n));
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 2; v < n; ++v)
      if (rng.uniform() < 0.3) edges.emplace_back(u, v);
  DenseMatrix x(n, 3);
  for (double& value : x.values()) value = rng.uniform(-1.0, 1.0);
  std::vector<std::int64_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::int64_t>(i % 2);
  Graph g = build_graph(n, edges, std::move(x), std::move(labels)).graph;
  g.node_targets = std::vector<double>(n);
  for (std::size_t i = 0; i < n; ++i) (*g.node_targets)[i] = std::sin(static_cast<double>(i));
  g.graph_label = 1.0;
  return lifting ? apply_lifting(g, *lifting) : featured_from_graph(g);
}

GradCheckResult gradcheck_model(ModelConfig cfg, const FeaturedComplex& fc) {
  const bool node = is_node_task(cfg.task);
  const bool cls = is_classification(cfg.task);
  cfg.output_dim = cls ? 2 : 1;
  const ModelState state = init_model(cfg, DomainSignature::of(fc));
  const Batch batch = Batch::single(fc);
  const OperatorSet ops(batch.complex.complex, cfg);

  std::vector<std::int64_t> labels;
  DenseMatrix targets;
  if (node) {
    if (cls) labels = *fc.labels;
    else {
      targets = DenseMatrix(fc.targets->size(), 1);
      for (std::size_t i = 0; i < fc.targets->size(); ++i) targets(i, 0) = (*fc.targets)[i];
    }
  } else {
    if (cls) labels = {static_cast<std::int64_t>(*fc.graph_label)};
    else targets = DenseMatrix(1, 1, *fc.graph_label);
  }
  const LossKind loss_kind = cls ? LossKind::softmax_cross_entropy : LossKind::mse;

  const ScalarFunction f = [&](const std::vector<Parameter>& params) {
    ModelState s{params};
    ComputationRecord rec;
    BoundParameters bound(rec, s);
    const auto fwd = forward(rec, bound, cfg, batch, ops, cfg.encoder_dropout > 0.0, 7);
    const ValueId pred = readout(rec, fwd.latents, ops, bound, cfg, batch);
    const ValueId loss = record_loss(rec, loss_kind, pred, labels, targets);
    return Evaluation{rec.value(loss)(0, 0), rec.backward(loss, params)};
  };
  return finite_diff_check(f, state.parameters);
}

std::vector<ModelConfig> all_mode_variants(const ModelConfig& base) {
  std::vector<ModelConfig> out;
  for (auto intra : {IntraAgg::sum, IntraAgg::mean})
    for (auto inter : {InterAgg::sum, InterAgg::concat})
      for (auto update : {UpdateKind::relu_residual, UpdateKind::relu_plain, UpdateKind::identity})
        for (auto ro : {ReadoutKind::direct, ReadoutKind::signal_down_propagation}) {
          ModelConfig c = base;
          c.layer.intra_agg = intra;
          c.layer.inter_agg = inter;
          c.layer.update = update;
          c.readout = ro;
          for (auto& use : c.layer.neighborhoods) use.width = 0;
          out.push_back(c);
        }
  return out;
}

}  // namespace topoforge
