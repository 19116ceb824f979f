#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "topoforge/autodiff.hpp"
#include "topoforge/complex.hpp"
#include "topoforge/operators.hpp"

namespace topoforge {

enum class IntraAgg { sum, mean };
enum class InterAgg { sum, concat };
enum class UpdateKind { relu_residual, relu_plain, identity };
enum class ReadoutKind { direct, signal_down_propagation };
enum class Pooling { mean, sum };
enum class TaskKind { node_classification, node_regression, graph_classification, graph_regression };

bool is_node_task(TaskKind t);
bool is_classification(TaskKind t);

std::string_view to_string(IntraAgg v);
std::string_view to_string(InterAgg v);
std::string_view to_string(UpdateKind v);
std::string_view to_string(ReadoutKind v);
std::string_view to_string(Pooling v);
std::string_view to_string(TaskKind v);
IntraAgg parse_intra_agg(std::string_view s);
InterAgg parse_inter_agg(std::string_view s);
UpdateKind parse_update(std::string_view s);
ReadoutKind parse_readout(std::string_view s);
Pooling parse_pooling(std::string_view s);
TaskKind parse_task(std::string_view s);

/// One neighborhood feeding a target rank. `width` is the message width;
/// 0 means "derive from the hidden dim" (hidden for sum, an even share of
/// hidden for concat).
struct NeighborhoodUse {
  NeighborhoodSpec spec;
  std::size_t width = 0;

  friend bool operator==(const NeighborhoodUse&, const NeighborhoodUse&) = default;
};

struct HompLayerConfig {
  std::vector<NeighborhoodUse> neighborhoods;
  IntraAgg intra_agg = IntraAgg::sum;
  InterAgg inter_agg = InterAgg::sum;
  UpdateKind update = UpdateKind::relu_residual;

  /// Ranks updated by the layer, ascending. Other ranks pass through.
  std::vector<int> target_ranks() const;
  /// Neighborhoods targeting `rank`, in configuration order.
  std::vector<NeighborhoodUse> for_rank(int rank) const;
  /// Resolved message widths of the neighborhoods targeting `rank`.
  std::vector<std::size_t> message_widths(int rank, std::size_t hidden) const;

  friend bool operator==(const HompLayerConfig&, const HompLayerConfig&) = default;
};

/// Populated ranks and their input feature widths.
struct DomainSignature {
  DomainKind kind = DomainKind::graph;
  std::vector<std::size_t> feature_widths;  // index = rank

  int max_rank() const { return static_cast<int>(feature_widths.size()) - 1; }
  static DomainSignature of(const FeaturedComplex& fc);
  friend bool operator==(const DomainSignature&, const DomainSignature&) = default;
};

struct ModelConfig {
  std::size_t hidden_dim = 32;
  double encoder_dropout = 0.0;
  int num_layers = 2;
  HompLayerConfig layer;
  ReadoutKind readout = ReadoutKind::direct;
  Pooling pooling = Pooling::mean;
  TaskKind task = TaskKind::node_classification;
  std::size_t output_dim = 2;
  std::uint64_t seed = 0;

  /// Every violated constraint against the given domain; empty when valid.
  std::vector<std::string> violations(const DomainSignature& domain) const;
};

/// All learnable parameters in a fixed order: encoder per rank, then per
/// layer and target rank the message weights followed by the update weight,
/// then the readout (SDP projections, then head).
struct ModelState {
  std::vector<Parameter> parameters;

  const Parameter& get(std::string_view id) const;
  Parameter& get(std::string_view id);
  bool contains(std::string_view id) const;
  std::size_t scalar_count() const;
  friend bool operator==(const ModelState&, const ModelState&) = default;
};

namespace param_id {
std::string encoder(int rank);
std::string message(int layer, int rank, std::size_t k);
std::string update(int layer, int rank);
std::string sdp_projection(int rank);
inline constexpr const char* head = "readout.head";
}  // namespace param_id

/// Deterministic initialization: every weight uniform(-a, a) with
/// a = 1/sqrt(fan_in) from a SplitMix64 stream seeded with cfg.seed. SDP
/// projections start as pass-through [I; 0].
ModelState init_model(const ModelConfig& cfg, const DomainSignature& domain);

/// Checkpoint document: {"parameters": [{"id", "rows", "cols", "values"}]}.
void save_model_state(const std::filesystem::path& path, const ModelState& state);
ModelState load_model_state(const std::filesystem::path& path);

struct ResolvedOperator {
  std::shared_ptr<const SparseOperator> op;
  std::shared_ptr<const SparseOperator> op_t;
};

/// Every operator a model needs on one (possibly unioned) complex, resolved
/// once and shared across forward passes.
class OperatorSet {
 public:
  OperatorSet() = default;
  OperatorSet(const Complex& c, const ModelConfig& cfg);

  /// The neighborhood operator, row-normalized for mean aggregation.
  const ResolvedOperator& neighborhood(const NeighborhoodSpec& spec, IntraAgg agg) const;
  /// |B_{r-1,r}| for SDP fusion.
  const ResolvedOperator& unsigned_boundary(int r) const;

 private:
  std::map<std::string, ResolvedOperator> ops_;
};

/// A model input: one complex (possibly a disjoint union) with per-rank
/// sample indices.
struct Batch {
  FeaturedComplex complex;
  std::vector<std::vector<std::size_t>> batch;  // batch[r][i] = sample of cell i
  std::size_t num_samples = 1;
  std::vector<std::size_t> sample_indices;      // dataset indices of the samples

  static Batch single(FeaturedComplex fc);
};

/// Parameters bound into a computation record by id.
class BoundParameters {
 public:
  BoundParameters(ComputationRecord& rec, const ModelState& state);
  ValueId operator[](std::string_view id) const;

 private:
  std::map<std::string, ValueId, std::less<>> ids_;
};

/// H_r <- dropout(relu(X_r · E_r)); dropout only when training.
std::vector<ValueId> encode(ComputationRecord& rec, const BoundParameters& params,
                            std::span<const DenseMatrix> features, const ModelConfig& cfg, bool training,
                            std::uint64_t dropout_seed);

/// One HOMP layer: for each target rank r and each neighborhood k with
/// source rank s, M_k = G_k · (H_s · W_k); m = Σ_k M_k or [M_1 | M_2 | ...];
/// then H_r <- β(H_r, m). All ranks read the previous layer's latents.
std::vector<ValueId> homp_layer_forward(ComputationRecord& rec, std::span<const ValueId> latents,
                                        const OperatorSet& ops, const BoundParameters& params, int layer,
                                        const ModelConfig& cfg);

struct ForwardResult {
  std::vector<ValueId> latents;
};

/// encode followed by cfg.num_layers HOMP layers.
ForwardResult forward(ComputationRecord& rec, const BoundParameters& params, const ModelConfig& cfg,
                      const Batch& batch, const OperatorSet& ops, bool training, std::uint64_t dropout_seed);

}  // namespace topoforge
