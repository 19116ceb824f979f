#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "topoforge/autodiff.hpp"
#include "topoforge/homp.hpp"
#include "topoforge/liftings.hpp"

namespace topoforge {

/// Seeded 10-node graph (a 10-cycle plus random chords, 3 feature
/// columns, alternating labels) lifted with `lifting` when given.
FeaturedComplex gradcheck_complex(const std::optional<LiftingConfig>& lifting, std::uint64_t seed);

/// finite_diff_check of loss(readout(forward(.))) over every parameter of
/// a freshly initialized model on `fc`. Dropout uses a fixed mask.
GradCheckResult gradcheck_model(ModelConfig cfg, const FeaturedComplex& fc);

/// Every intra_agg x inter_agg x update x readout combination of `base`.
std::vector<ModelConfig> all_mode_variants(const ModelConfig& base);

}  // namespace topoforge
