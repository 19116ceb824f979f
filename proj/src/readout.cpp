#include "topoforge/readout.hpp"

#include <stdexcept>

namespace topoforge {

ValueId readout_dr(ComputationRecord& rec, ValueId h0, TaskKind task, Pooling pooling, ValueId head,
                   const PoolingInput& pool) {
  if (is_node_task(task)) return rec.matmul(h0, head);
  const ValueId pooled = pooling == Pooling::mean ? rec.segment_mean(h0, pool.batch, pool.num_samples)
                                                  : rec.segment_sum(h0, pool.batch, pool.num_samples);
  return rec.matmul(pooled, head);
}

ValueId readout_sdp(ComputationRecord& rec, std::span<const ValueId> latents, const OperatorSet& ops,
                    std::span<const ValueId> projections, TaskKind task, Pooling pooling, ValueId head,
                    const PoolingInput& pool) {
  if (latents.empty()) throw std::invalid_argument("readout_sdp: missing rank 0");
  if (projections.size() + 1 < latents.size())
    throw std::invalid_argument("readout_sdp: missing projection for rank " + std::to_string(projections.size() + 1));
  std::vector<ValueId> h(latents.begin(), latents.end());
  for (std::size_t r = h.size() - 1; r >= 1; --r) {
    const auto& b = ops.unsigned_boundary(static_cast<int>(r));
    const ValueId fused = rec.sparse_dense_matmul(b.op, h[r], b.op_t);
    const ValueId parts[] = {h[r - 1], fused};
    h[r - 1] = rec.matmul(rec.concat_cols(parts), projections[r - 1]);
  }
  return readout_dr(rec, h[0], task, pooling, head, pool);
}

ValueId readout(ComputationRecord& rec, std::span<const ValueId> latents, const OperatorSet& ops,
                const BoundParameters& params, const ModelConfig& cfg, const Batch& batch) {
  if (batch.batch.empty()) throw std::invalid_argument("readout: missing rank 0");
  const PoolingInput pool{batch.batch[0], batch.num_samples};
  const ValueId head = params[param_id::head];
  if (cfg.readout == ReadoutKind::direct) return readout_dr(rec, latents[0], cfg.task, cfg.pooling, head, pool);
  std::vector<ValueId> projections;
  for (std::size_t r = 1; r < latents.size(); ++r)
    projections.push_back(params[param_id::sdp_projection(static_cast<int>(r))]);
  return readout_sdp(rec, latents, ops, projections, cfg.task, cfg.pooling, head, pool);
}

}  // namespace topoforge
