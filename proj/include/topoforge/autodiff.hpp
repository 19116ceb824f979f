#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "topoforge/matrix.hpp"
#include "topoforge/sparse.hpp"

namespace topoforge {

struct Parameter {
  std::string id;
  DenseMatrix matrix;
  bool requires_grad = true;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

using ValueId = std::size_t;

enum class OpKind {
  parameter,
  constant,
  matmul,
  sparse_dense_matmul,
  add,
  scale,
  relu,
  concat_cols,
  segment_sum,
  segment_mean,
  dropout,
  row_slice,
  softmax_cross_entropy,
  mse,
  mae,
};

enum class LossKind { softmax_cross_entropy, mse, mae };

/// Forward computation recorded as a topologically ordered list of
/// primitive applications over a closed kernel set. Every primitive stores
/// what its hand-written backward rule needs; backward() replays the list in
/// reverse. Shape errors throw std::invalid_argument naming the primitive.
class ComputationRecord {
 public:
  ValueId parameter(const Parameter& p);
  ValueId constant(DenseMatrix value);

  ValueId matmul(ValueId a, ValueId b);
  /// `op` times x; `op_transposed` (optional) is reused by backward.
  ValueId sparse_dense_matmul(std::shared_ptr<const SparseOperator> op, ValueId x,
                              std::shared_ptr<const SparseOperator> op_transposed = nullptr);
  ValueId add(ValueId a, ValueId b);
  ValueId scale(ValueId a, double factor);
  ValueId relu(ValueId a);
  ValueId concat_cols(std::span<const ValueId> parts);
  /// Rows grouped by `segments[i]` in [0, num_segments); empty segments give
  /// zero rows in both modes.
  ValueId segment_sum(ValueId a, std::span<const std::size_t> segments, std::size_t num_segments);
  ValueId segment_mean(ValueId a, std::span<const std::size_t> segments, std::size_t num_segments);
  /// Inverted dropout with a mask drawn from `seed`; p = 0 is the identity.
  ValueId dropout(ValueId a, double p, std::uint64_t seed);
  ValueId row_slice(ValueId a, std::span<const std::size_t> rows);

  /// Mean cross-entropy of logits (n x C) against labels in [0, C).
  ValueId softmax_cross_entropy(ValueId logits, std::span<const std::int64_t> labels);
  /// Mean over all elements of (p - t)^2.
  ValueId mse(ValueId predictions, const DenseMatrix& targets);
  /// Mean over all elements of |p - t|.
  ValueId mae(ValueId predictions, const DenseMatrix& targets);

  /// Valid until the next node is recorded.
  const DenseMatrix& value(ValueId id) const;
  OpKind kind(ValueId id) const;
  std::size_t size() const { return nodes_.size(); }

  /// Reverse-mode gradients of the 1x1 value `loss` with respect to each of
  /// `params`, matched by id. Parameters never used get zero matrices.
  std::vector<DenseMatrix> backward(ValueId loss, std::span<const Parameter> params) const;

 private:
  struct Node {
    OpKind kind;
    std::vector<ValueId> inputs;
    DenseMatrix value;
    double factor = 0.0;
    std::shared_ptr<const SparseOperator> op{};
    std::shared_ptr<const SparseOperator> op_t{};
    std::vector<std::size_t> index{};
    std::size_t count = 0;
    DenseMatrix aux{};
    std::string param_id{};
    bool requires_grad = false;
  };

  ValueId push(Node node);
  const Node& node(ValueId id) const;

  std::vector<Node> nodes_;
};

/// Loss dispatcher used by training; labels are read for cross-entropy,
/// targets for the regression losses.
ValueId record_loss(ComputationRecord& rec, LossKind kind, ValueId predictions,
                    std::span<const std::int64_t> labels, const DenseMatrix& targets);

struct Evaluation {
  double value = 0.0;
  std::vector<DenseMatrix> gradients;  // aligned with the parameter list
};

using ScalarFunction = std::function<Evaluation(const std::vector<Parameter>&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Compare f's analytic gradients with central differences
/// (f(θ+h) - f(θ-h)) / 2h on every coordinate of every parameter that
/// requires a gradient. Relative error uses max(|analytic|, |numeric|, 1e-8)
/// as denominator. f must be deterministic. Throws RuntimeAbort if f
/// returns a non-finite value.
GradCheckResult finite_diff_check(const ScalarFunction& f, std::vector<Parameter> params, double h = 1e-6);

}  // namespace topoforge
