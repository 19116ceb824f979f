#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "topoforge/homp.hpp"

namespace topoforge {

struct OptimizerConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int step_size = 50;
  double gamma = 0.5;
};

/// Step schedule: lr0 * gamma^floor(epoch / step_size), epoch 0-based.
double scheduled_lr(const OptimizerConfig& cfg, int epoch);

/// Adaptive moments with bias correction, one moment pair per parameter.
class Adam {
 public:
  explicit Adam(OptimizerConfig cfg) : cfg_(cfg) {}

  /// Apply one update at `epoch`'s scheduled rate. Throws RuntimeAbort
  /// naming the parameter when a gradient is non-finite; the state is left
  /// untouched in that case.
  void step(ModelState& state, std::span<const DenseMatrix> gradients, int epoch);

  std::size_t steps_taken() const { return t_; }

 private:
  OptimizerConfig cfg_;
  std::vector<DenseMatrix> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace topoforge
