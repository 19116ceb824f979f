#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "topoforge/autodiff.hpp"
#include "topoforge/homp.hpp"

namespace topoforge {

/// Per-rank sample vectors and sample count needed to pool rank 0.
struct PoolingInput {
  std::span<const std::size_t> batch;  // batch[i] = sample of node i
  std::size_t num_samples = 1;
};

/// Node tasks: H_0 · head per node. Graph tasks: pool(H_0 by sample) · head.
ValueId readout_dr(ComputationRecord& rec, ValueId h0, TaskKind task, Pooling pooling, ValueId head,
                   const PoolingInput& pool);

/// Top-down fusion: for r = R..1, H_{r-1} <- [H_{r-1} | |B_{r-1,r}| H_r] · P_r,
/// then readout_dr on the fused H_0. `projections[r-1]` is P_r (2d x d).
ValueId readout_sdp(ComputationRecord& rec, std::span<const ValueId> latents, const OperatorSet& ops,
                    std::span<const ValueId> projections, TaskKind task, Pooling pooling, ValueId head,
                    const PoolingInput& pool);

/// Readout selected by cfg.readout with parameters taken from `params`.
ValueId readout(ComputationRecord& rec, std::span<const ValueId> latents, const OperatorSet& ops,
                const BoundParameters& params, const ModelConfig& cfg, const Batch& batch);

}  // namespace topoforge
