#include "topoforge/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>

#include "topoforge/error.hpp"
#include "topoforge/kernels.hpp"
#include "topoforge/rng.hpp"

namespace topoforge {

namespace {

[[noreturn]] void shape_error(const char* kind, const std::string& detail) {
  throw std::invalid_argument(std::string(kind) + ": " + detail);
}

void add_into(DenseMatrix& dst, const DenseMatrix& src) {
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

ValueId ComputationRecord::push(Node n) {
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

const ComputationRecord::Node& ComputationRecord::node(ValueId id) const {
  if (id >= nodes_.size()) throw std::out_of_range("ComputationRecord: unknown value id " + std::to_string(id));
  return nodes_[id];
}

const DenseMatrix& ComputationRecord::value(ValueId id) const { return node(id).value; }
OpKind ComputationRecord::kind(ValueId id) const { return node(id).kind; }

ValueId ComputationRecord::parameter(const Parameter& p) {
  Node n{OpKind::parameter, {}, p.matrix};
  n.param_id = p.id;
  n.requires_grad = p.requires_grad;
  return push(std::move(n));
}

ValueId ComputationRecord::constant(DenseMatrix value) {
  return push(Node{OpKind::constant, {}, std::move(value)});
}

ValueId ComputationRecord::matmul(ValueId a, ValueId b) {
  const auto& va = value(a);
  const auto& vb = value(b);
  if (va.cols() != vb.rows()) shape_error("matmul", va.shape_string() + " x " + vb.shape_string());
  return push(Node{OpKind::matmul, {a, b}, kernels::matmul(va, vb)});
}

ValueId ComputationRecord::sparse_dense_matmul(std::shared_ptr<const SparseOperator> op, ValueId x,
                                               std::shared_ptr<const SparseOperator> op_transposed) {
  const auto& vx = value(x);
  if (op->cols() != vx.rows())
    shape_error("sparse_dense_matmul", "operator (" + std::to_string(op->rows()) + "x" +
                                           std::to_string(op->cols()) + ") x " + vx.shape_string());
  Node n{OpKind::sparse_dense_matmul, {x}, kernels::spmm(*op, vx)};
  n.op = std::move(op);
  n.op_t = std::move(op_transposed);
  return push(std::move(n));
}

ValueId ComputationRecord::add(ValueId a, ValueId b) {
  const auto& va = value(a);
  const auto& vb = value(b);
  if (va.rows() != vb.rows() || va.cols() != vb.cols())
    shape_error("add", va.shape_string() + " + " + vb.shape_string());
  DenseMatrix out = va;
  add_into(out, vb);
  return push(Node{OpKind::add, {a, b}, std::move(out)});
}

ValueId ComputationRecord::scale(ValueId a, double factor) {
  DenseMatrix out = value(a);
  for (double& v : out.values()) v *= factor;
  Node n{OpKind::scale, {a}, std::move(out)};
  n.factor = factor;
  return push(std::move(n));
}

ValueId ComputationRecord::relu(ValueId a) {
  DenseMatrix out = value(a);
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return push(Node{OpKind::relu, {a}, std::move(out)});
}

ValueId ComputationRecord::concat_cols(std::span<const ValueId> parts) {
  if (parts.empty()) shape_error("concat_cols", "no inputs");
  const std::size_t rows = value(parts.front()).rows();
  std::size_t cols = 0;
  for (ValueId p : parts) {
    if (value(p).rows() != rows)
      shape_error("concat_cols", value(parts.front()).shape_string() + " vs " + value(p).shape_string());
    cols += value(p).cols();
  }
  DenseMatrix out(rows, cols);
  std::size_t offset = 0;
  for (ValueId p : parts) {
    const auto& vp = value(p);
    for (std::size_t i = 0; i < rows; ++i)
      std::copy(vp.row(i).begin(), vp.row(i).end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(offset));
    offset += vp.cols();
  }
  return push(Node{OpKind::concat_cols, {parts.begin(), parts.end()}, std::move(out)});
}

namespace {

std::vector<std::size_t> segment_sizes(const char* kind, const DenseMatrix& x,
                                       std::span<const std::size_t> segments, std::size_t num_segments) {
  if (segments.size() != x.rows())
    shape_error(kind, std::to_string(segments.size()) + " segment ids for " + std::to_string(x.rows()) + " rows");
  std::vector<std::size_t> sizes(num_segments, 0);
  for (std::size_t s : segments) {
    if (s >= num_segments) shape_error(kind, "segment id " + std::to_string(s) + " >= " + std::to_string(num_segments));
    ++sizes[s];
  }
  return sizes;
}

}  // namespace

ValueId ComputationRecord::segment_sum(ValueId a, std::span<const std::size_t> segments, std::size_t num_segments) {
  const auto& x = value(a);
  segment_sizes("segment_reduce_sum", x, segments, num_segments);
  DenseMatrix out(num_segments, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(segments[i], j) += x(i, j);
  Node n{OpKind::segment_sum, {a}, std::move(out)};
  n.index.assign(segments.begin(), segments.end());
  n.count = num_segments;
  return push(std::move(n));
}

ValueId ComputationRecord::segment_mean(ValueId a, std::span<const std::size_t> segments, std::size_t num_segments) {
  const auto& x = value(a);
  const auto sizes = segment_sizes("segment_reduce_mean", x, segments, num_segments);
  DenseMatrix out(num_segments, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(segments[i], j) += x(i, j);
  for (std::size_t s = 0; s < num_segments; ++s)
    if (sizes[s] > 0)
      for (double& v : out.row(s)) v /= static_cast<double>(sizes[s]);
  Node n{OpKind::segment_mean, {a}, std::move(out)};
  n.index.assign(segments.begin(), segments.end());
  n.count = num_segments;
  n.aux = DenseMatrix(num_segments, 1);
  for (std::size_t s = 0; s < num_segments; ++s) n.aux(s, 0) = static_cast<double>(sizes[s]);
  return push(std::move(n));
}

ValueId ComputationRecord::dropout(ValueId a, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) shape_error("dropout", "probability must be in [0, 1)");
  const auto& x = value(a);
  DenseMatrix mask(x.rows(), x.cols(), 1.0);
  if (p > 0.0) {
    Rng rng(seed);
    const double keep_scale = 1.0 / (1.0 - p);
    for (double& m : mask.values()) m = rng.uniform() < p ? 0.0 : keep_scale;
  }
  DenseMatrix out = x;
  if (p > 0.0)
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= mask.values()[i];
  Node n{OpKind::dropout, {a}, std::move(out)};
  n.aux = std::move(mask);
  n.factor = p;
  return push(std::move(n));
}

ValueId ComputationRecord::row_slice(ValueId a, std::span<const std::size_t> rows) {
  const auto& x = value(a);
  DenseMatrix out(rows.size(), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= x.rows())
      shape_error("row_slice", "row " + std::to_string(rows[k]) + " of " + x.shape_string());
    std::copy(x.row(rows[k]).begin(), x.row(rows[k]).end(), out.row(k).begin());
  }
  Node n{OpKind::row_slice, {a}, std::move(out)};
  n.index.assign(rows.begin(), rows.end());
  return push(std::move(n));
}

ValueId ComputationRecord::softmax_cross_entropy(ValueId logits, std::span<const std::int64_t> labels) {
  const auto& z = value(logits);
  if (labels.size() != z.rows())
    shape_error("softmax_cross_entropy", std::to_string(labels.size()) + " labels for " + z.shape_string());
  if (z.rows() == 0) shape_error("softmax_cross_entropy", "no samples");
  DenseMatrix probs(z.rows(), z.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= z.cols())
      throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                              " outside [0, " + std::to_string(z.cols()) + ")");
    const auto row = z.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) sum += std::exp(row[j] - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t j = 0; j < z.cols(); ++j) probs(i, j) = std::exp(row[j] - lse);
    total += lse - row[static_cast<std::size_t>(labels[i])];
  }
  Node n{OpKind::softmax_cross_entropy, {logits}, DenseMatrix(1, 1, total / static_cast<double>(z.rows()))};
  n.aux = std::move(probs);
  for (auto l : labels) n.index.push_back(static_cast<std::size_t>(l));
  return push(std::move(n));
}

ValueId ComputationRecord::mse(ValueId predictions, const DenseMatrix& targets) {
  const auto& p = value(predictions);
  if (p.rows() != targets.rows() || p.cols() != targets.cols())
    shape_error("mse", p.shape_string() + " vs targets " + targets.shape_string());
  if (p.size() == 0) shape_error("mse", "no samples");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p.values()[i] - targets.values()[i];
    total += d * d;
  }
  Node n{OpKind::mse, {predictions}, DenseMatrix(1, 1, total / static_cast<double>(p.size()))};
  n.aux = targets;
  return push(std::move(n));
}

ValueId ComputationRecord::mae(ValueId predictions, const DenseMatrix& targets) {
  const auto& p = value(predictions);
  if (p.rows() != targets.rows() || p.cols() != targets.cols())
    shape_error("mae", p.shape_string() + " vs targets " + targets.shape_string());
  if (p.size() == 0) shape_error("mae", "no samples");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p.values()[i] - targets.values()[i]);
  Node n{OpKind::mae, {predictions}, DenseMatrix(1, 1, total / static_cast<double>(p.size()))};
  n.aux = targets;
  return push(std::move(n));
}

std::vector<DenseMatrix> ComputationRecord::backward(ValueId loss, std::span<const Parameter> params) const {
  const auto& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1)
    throw std::invalid_argument("backward: loss must be 1x1, got " + lv.shape_string());

  std::vector<std::optional<DenseMatrix>> grads(loss + 1);
  grads[loss] = DenseMatrix(1, 1, 1.0);
  auto accumulate = [&](ValueId id, DenseMatrix g) {
    if (!grads[id]) grads[id] = std::move(g);
    else add_into(*grads[id], g);
  };

  std::map<std::string, DenseMatrix> param_grads;
  for (ValueId id = loss + 1; id-- > 0;) {
    if (!grads[id]) continue;
    const Node& n = nodes_[id];
    const DenseMatrix& g = *grads[id];
    switch (n.kind) {
      case OpKind::parameter: {
        if (!n.requires_grad) break;
        auto [it, inserted] = param_grads.try_emplace(n.param_id, g);
        if (!inserted) add_into(it->second, g);
        break;
      }
      case OpKind::constant: break;
      case OpKind::matmul:
        accumulate(n.inputs[0], kernels::matmul_nt(g, value(n.inputs[1])));
        accumulate(n.inputs[1], kernels::matmul_tn(value(n.inputs[0]), g));
        break;
      case OpKind::sparse_dense_matmul:
        accumulate(n.inputs[0], n.op_t ? kernels::spmm(*n.op_t, g) : kernels::spmm(n.op->transposed(), g));
        break;
      case OpKind::add:
        accumulate(n.inputs[0], g);
        accumulate(n.inputs[1], g);
        break;
      case OpKind::scale: {
        DenseMatrix d = g;
        for (double& v : d.values()) v *= n.factor;
        accumulate(n.inputs[0], std::move(d));
        break;
      }
      case OpKind::relu: {
        DenseMatrix d = g;
        for (std::size_t i = 0; i < d.size(); ++i)
          if (!(n.value.values()[i] > 0.0)) d.values()[i] = 0.0;
        accumulate(n.inputs[0], std::move(d));
        break;
      }
      case OpKind::concat_cols: {
        std::size_t offset = 0;
        for (ValueId in : n.inputs) {
          const std::size_t w = value(in).cols();
          DenseMatrix d(g.rows(), w);
          for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < w; ++j) d(i, j) = g(i, offset + j);
          accumulate(in, std::move(d));
          offset += w;
        }
        break;
      }
      case OpKind::segment_sum:
      case OpKind::segment_mean: {
        const auto& x = value(n.inputs[0]);
        DenseMatrix d(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
          const std::size_t s = n.index[i];
          const double w = n.kind == OpKind::segment_mean ? 1.0 / n.aux(s, 0) : 1.0;
          for (std::size_t j = 0; j < x.cols(); ++j) d(i, j) = g(s, j) * w;
        }
        accumulate(n.inputs[0], std::move(d));
        break;
      }
      case OpKind::dropout: {
        DenseMatrix d = g;
        if (n.factor > 0.0)
          for (std::size_t i = 0; i < d.size(); ++i) d.values()[i] *= n.aux.values()[i];
        accumulate(n.inputs[0], std::move(d));
        break;
      }
      case OpKind::row_slice: {
        const auto& x = value(n.inputs[0]);
        DenseMatrix d(x.rows(), x.cols());
        for (std::size_t k = 0; k < n.index.size(); ++k)
          for (std::size_t j = 0; j < x.cols(); ++j) d(n.index[k], j) += g(k, j);
        accumulate(n.inputs[0], std::move(d));
        break;
      }
      case OpKind::softmax_cross_entropy: {
        DenseMatrix d = n.aux;
        const double w = g(0, 0) / static_cast<double>(d.rows());
        for (std::size_t i = 0; i < d.rows(); ++i) {
          d(i, n.index[i]) -= 1.0;
          for (double& v : d.row(i)) v *= w;
        }
        accumulate(n.inputs[0], std::move(d));
        break;
      }
      case OpKind::mse:
      case OpKind::mae: {
        const auto& p = value(n.inputs[0]);
        DenseMatrix d(p.rows(), p.cols());
        const double w = g(0, 0) / static_cast<double>(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
          const double diff = p.values()[i] - n.aux.values()[i];
          d.values()[i] = n.kind == OpKind::mse ? 2.0 * diff * w
                                                : (diff > 0.0 ? w : (diff < 0.0 ? -w : 0.0));
        }
        accumulate(n.inputs[0], std::move(d));
        break;
      }
    }
    if (n.kind != OpKind::parameter) grads[id].reset();
  }

  std::vector<DenseMatrix> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    auto it = param_grads.find(p.id);
    if (it != param_grads.end() && p.requires_grad) {
      if (it->second.rows() != p.matrix.rows() || it->second.cols() != p.matrix.cols())
        throw std::invalid_argument("backward: parameter '" + p.id + "' shape " + p.matrix.shape_string() +
                                    " differs from its recorded use " + it->second.shape_string());
      out.push_back(it->second);
    } else {
      out.emplace_back(p.matrix.rows(), p.matrix.cols());
    }
  }
  return out;
}

ValueId record_loss(ComputationRecord& rec, LossKind kind, ValueId predictions,
                    std::span<const std::int64_t> labels, const DenseMatrix& targets) {
  switch (kind) {
    case LossKind::softmax_cross_entropy: return rec.softmax_cross_entropy(predictions, labels);
    case LossKind::mse: return rec.mse(predictions, targets);
    case LossKind::mae: return rec.mae(predictions, targets);
  }
  throw std::logic_error("record_loss: unhandled kind");
}

GradCheckResult finite_diff_check(const ScalarFunction& f, std::vector<Parameter> params, double h) {
  const Evaluation base = f(params);
  if (!std::isfinite(base.value)) throw RuntimeAbort("finite_diff_check: f is not finite at the base point");
  if (base.gradients.size() != params.size())
    throw std::invalid_argument("finite_diff_check: f returned " + std::to_string(base.gradients.size()) +
                                " gradients for " + std::to_string(params.size()) + " parameters");
  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!params[p].requires_grad) continue;
    auto values = params[p].matrix.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + h;
      const double plus = f(params).value;
      values[i] = original - h;
      const double minus = f(params).value;
      values[i] = original;
      if (!std::isfinite(plus) || !std::isfinite(minus))
        throw RuntimeAbort("finite_diff_check: f is not finite near '" + params[p].id + "'[" +
                           std::to_string(i) + "]");
      const double numeric = (plus - minus) / (2.0 * h);
      const double analytic = base.gradients[p].values()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.coordinates;
      if (result.coordinates == 1 || rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = params[p].id;
        result.worst_index = i;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace topoforge
