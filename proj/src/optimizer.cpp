#include "topoforge/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "topoforge/error.hpp"

namespace topoforge {

double scheduled_lr(const OptimizerConfig& cfg, int epoch) {
  return cfg.lr * std::pow(cfg.gamma, epoch / cfg.step_size);
}

void Adam::step(ModelState& state, std::span<const DenseMatrix> gradients, int epoch) {
  auto& params = state.parameters;
  if (gradients.size() != params.size()) throw std::invalid_argument("Adam: gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (gradients[i].rows() != params[i].matrix.rows() || gradients[i].cols() != params[i].matrix.cols())
      throw std::invalid_argument("Adam: gradient shape mismatch for " + params[i].id);
    if (!gradients[i].all_finite()) throw RuntimeAbort("non-finite gradient for parameter " + params[i].id);
  }
  if (m_.empty())
    for (const auto& p : params) {
      m_.emplace_back(p.matrix.rows(), p.matrix.cols());
      v_.emplace_back(p.matrix.rows(), p.matrix.cols());
    }
  ++t_;
  const double lr = scheduled_lr(cfg_, epoch);
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].requires_grad) continue;
    auto w = params[i].matrix.values();
    const auto g = gradients[i].values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
      w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.eps);
    }
  }
}

}  // namespace topoforge
