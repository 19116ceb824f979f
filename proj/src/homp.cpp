#include "topoforge/homp.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "topoforge/complex_io.hpp"
#include "topoforge/error.hpp"
#include "topoforge/rng.hpp"

namespace topoforge {

namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view s, const std::array<E, N>& values, const char* what) {
  for (E v : values)
    if (to_string(v) == s) return v;
  throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace

bool is_node_task(TaskKind t) { return t == TaskKind::node_classification || t == TaskKind::node_regression; }
bool is_classification(TaskKind t) {
  return t == TaskKind::node_classification || t == TaskKind::graph_classification;
}

std::string_view to_string(IntraAgg v) { return v == IntraAgg::sum ? "sum" : "mean"; }
std::string_view to_string(InterAgg v) { return v == InterAgg::sum ? "sum" : "concat"; }
std::string_view to_string(UpdateKind v) {
  switch (v) {
    case UpdateKind::relu_residual: return "relu_residual";
    case UpdateKind::relu_plain: return "relu_plain";
    case UpdateKind::identity: return "identity";
  }
  return "unknown";
}
std::string_view to_string(ReadoutKind v) { return v == ReadoutKind::direct ? "DR" : "SDP"; }
std::string_view to_string(Pooling v) { return v == Pooling::mean ? "mean" : "sum"; }
std::string_view to_string(TaskKind v) {
  switch (v) {
    case TaskKind::node_classification: return "node_classification";
    case TaskKind::node_regression: return "node_regression";
    case TaskKind::graph_classification: return "graph_classification";
    case TaskKind::graph_regression: return "graph_regression";
  }
  return "unknown";
}

IntraAgg parse_intra_agg(std::string_view s) {
  return parse_enum(s, std::array{IntraAgg::sum, IntraAgg::mean}, "intra_agg");
}
InterAgg parse_inter_agg(std::string_view s) {
  return parse_enum(s, std::array{InterAgg::sum, InterAgg::concat}, "inter_agg");
}
UpdateKind parse_update(std::string_view s) {
  return parse_enum(s, std::array{UpdateKind::relu_residual, UpdateKind::relu_plain, UpdateKind::identity},
                    "update");
}
ReadoutKind parse_readout(std::string_view s) {
  return parse_enum(s, std::array{ReadoutKind::direct, ReadoutKind::signal_down_propagation}, "readout");
}
Pooling parse_pooling(std::string_view s) { return parse_enum(s, std::array{Pooling::mean, Pooling::sum}, "pooling"); }
TaskKind parse_task(std::string_view s) {
  return parse_enum(s,
                    std::array{TaskKind::node_classification, TaskKind::node_regression,
                               TaskKind::graph_classification, TaskKind::graph_regression},
                    "task");
}

std::vector<int> HompLayerConfig::target_ranks() const {
  std::set<int> ranks;
  for (const auto& n : neighborhoods) ranks.insert(n.spec.rank);
  return {ranks.begin(), ranks.end()};
}

std::vector<NeighborhoodUse> HompLayerConfig::for_rank(int rank) const {
  std::vector<NeighborhoodUse> out;
  for (const auto& n : neighborhoods)
    if (n.spec.rank == rank) out.push_back(n);
  return out;
}

std::vector<std::size_t> HompLayerConfig::message_widths(int rank, std::size_t hidden) const {
  const auto uses = for_rank(rank);
  std::vector<std::size_t> widths;
  if (inter_agg == InterAgg::sum) {
    for (const auto& u : uses) widths.push_back(u.width == 0 ? hidden : u.width);
    return widths;
  }
  std::size_t fixed = 0, open = 0;
  for (const auto& u : uses) {
    if (u.width == 0) ++open;
    fixed += u.width;
  }
  const std::size_t remaining = hidden > fixed ? hidden - fixed : 0;
  std::size_t handed = 0;
  for (const auto& u : uses) {
    if (u.width != 0) {
      widths.push_back(u.width);
      continue;
    }
    const std::size_t share = remaining / open + (handed < remaining % open ? 1 : 0);
    ++handed;
    widths.push_back(share);
  }
  return widths;
}

DomainSignature DomainSignature::of(const FeaturedComplex& fc) {
  DomainSignature sig;
  sig.kind = kind_of(fc.complex);
  for (const auto& f : fc.features) sig.feature_widths.push_back(f.cols());
  return sig;
}

std::vector<std::string> ModelConfig::violations(const DomainSignature& domain) const {
  std::vector<std::string> out;
  if (hidden_dim < 1) out.push_back("model.hidden_dim must be >= 1");
  if (!(encoder_dropout >= 0.0 && encoder_dropout < 1.0)) out.push_back("model.dropout must be in [0, 1)");
  if (num_layers < 0) out.push_back("model.num_layers must be >= 0");
  if (output_dim < 1) out.push_back("model output dimension must be >= 1");
  if (domain.feature_widths.empty()) out.push_back("domain has no feature matrices");
  if (num_layers > 0 && layer.neighborhoods.empty())
    out.push_back("model.neighborhoods must list at least one neighborhood");
  for (const auto& n : layer.neighborhoods)
    if (!n.spec.resolvable_with_max_rank(domain.max_rank(), domain.kind))
      out.push_back("neighborhood " + n.spec.to_string() + " is not resolvable on a " +
                    std::string(to_string(domain.kind)) + " domain with max rank " +
                    std::to_string(domain.max_rank()));
  for (int r : layer.target_ranks()) {
    const auto widths = layer.message_widths(r, hidden_dim);
    if (layer.inter_agg == InterAgg::sum) {
      for (auto w : widths)
        if (w != hidden_dim)
          out.push_back("rank " + std::to_string(r) + ": inter_agg=sum needs every message width equal to hidden_dim");
    } else {
      std::size_t total = 0;
      for (auto w : widths) {
        total += w;
        if (w == 0) out.push_back("rank " + std::to_string(r) + ": concat leaves a neighborhood with width 0");
      }
      if (total != hidden_dim)
        out.push_back("rank " + std::to_string(r) + ": concat widths sum to " + std::to_string(total) +
                      ", expected hidden_dim " + std::to_string(hidden_dim));
    }
  }
  return out;
}

const Parameter& ModelState::get(std::string_view id) const {
  for (const auto& p : parameters)
    if (p.id == id) return p;
  throw std::out_of_range("ModelState: no parameter '" + std::string(id) + "'");
}

Parameter& ModelState::get(std::string_view id) {
  return const_cast<Parameter&>(std::as_const(*this).get(id));
}

bool ModelState::contains(std::string_view id) const {
  return std::any_of(parameters.begin(), parameters.end(), [&](const Parameter& p) { return p.id == id; });
}

std::size_t ModelState::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters) n += p.matrix.size();
  return n;
}

namespace param_id {
std::string encoder(int rank) { return "encoder.r" + std::to_string(rank); }
std::string message(int layer, int rank, std::size_t k) {
  return "layer" + std::to_string(layer) + ".r" + std::to_string(rank) + ".msg" + std::to_string(k);
}
std::string update(int layer, int rank) {
  return "layer" + std::to_string(layer) + ".r" + std::to_string(rank) + ".update";
}
std::string sdp_projection(int rank) { return "readout.sdp.r" + std::to_string(rank); }
}  // namespace param_id

ModelState init_model(const ModelConfig& cfg, const DomainSignature& domain) {
  if (auto v = cfg.violations(domain); !v.empty()) throw ConfigError(v.front());
  Rng rng(cfg.seed);
  ModelState state;
  auto uniform = [&](std::string id, std::size_t rows, std::size_t cols) {
    DenseMatrix m(rows, cols);
    const double a = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(rows, 1)));
    for (double& v : m.values()) v = rng.uniform(-a, a);
    state.parameters.push_back({std::move(id), std::move(m), true});
  };
  const std::size_t h = cfg.hidden_dim;
  for (int r = 0; r <= domain.max_rank(); ++r)
    uniform(param_id::encoder(r), domain.feature_widths[static_cast<std::size_t>(r)], h);
  for (int l = 0; l < cfg.num_layers; ++l)
    for (int r : cfg.layer.target_ranks()) {
      const auto widths = cfg.layer.message_widths(r, h);
      for (std::size_t k = 0; k < widths.size(); ++k) uniform(param_id::message(l, r, k), h, widths[k]);
      if (cfg.layer.update != UpdateKind::identity) uniform(param_id::update(l, r), h, h);
    }
  if (cfg.readout == ReadoutKind::signal_down_propagation)
    for (int r = 1; r <= domain.max_rank(); ++r) {
      DenseMatrix pass(2 * h, h);
      for (std::size_t i = 0; i < h; ++i) pass(i, i) = 1.0;
      state.parameters.push_back({param_id::sdp_projection(r), std::move(pass), true});
    }
  uniform(param_id::head, h, cfg.output_dim);
  return state;
}

void save_model_state(const std::filesystem::path& path, const ModelState& state) {
  nlohmann::ordered_json doc;
  doc["parameters"] = nlohmann::ordered_json::array();
  for (const auto& p : state.parameters) {
    nlohmann::ordered_json entry;
    entry["id"] = p.id;
    entry["rows"] = p.matrix.rows();
    entry["cols"] = p.matrix.cols();
    entry["values"] = std::vector<double>(p.matrix.values().begin(), p.matrix.values().end());
    doc["parameters"].push_back(std::move(entry));
  }
  write_file_atomic(path, doc.dump() + "\n");
}

ModelState load_model_state(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
    ModelState state;
    for (const auto& entry : doc.at("parameters")) {
      const auto rows = entry.at("rows").get<std::size_t>();
      const auto cols = entry.at("cols").get<std::size_t>();
      state.parameters.push_back(
          {entry.at("id").get<std::string>(), DenseMatrix(rows, cols, entry.at("values").get<std::vector<double>>()), true});
    }
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": invalid checkpoint (" + e.what() + ")");
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path.string() + ": invalid checkpoint (" + e.what() + ")");
  }
}

namespace {

std::string op_key(const NeighborhoodSpec& spec, IntraAgg agg) {
  return spec.to_string() + "/" + std::string(to_string(agg));
}

ResolvedOperator share(SparseOperator op) {
  auto t = std::make_shared<const SparseOperator>(op.transposed());
  return {std::make_shared<const SparseOperator>(std::move(op)), std::move(t)};
}

}  // namespace

OperatorSet::OperatorSet(const Complex& c, const ModelConfig& cfg) {
  for (const auto& use : cfg.layer.neighborhoods) {
    const auto key = op_key(use.spec, cfg.layer.intra_agg);
    if (ops_.contains(key)) continue;
    SparseOperator op = resolve_neighborhood(c, use.spec);
    if (cfg.layer.intra_agg == IntraAgg::mean) op = op.row_normalized();
    ops_.emplace(key, share(std::move(op)));
  }
  if (cfg.readout == ReadoutKind::signal_down_propagation)
    for (int r = 1; r <= max_rank(c); ++r)
      ops_.emplace("sdp/" + std::to_string(r), share(boundary_matrix(c, r, false)));
}

const ResolvedOperator& OperatorSet::neighborhood(const NeighborhoodSpec& spec, IntraAgg agg) const {
  const auto it = ops_.find(op_key(spec, agg));
  if (it == ops_.end()) throw std::invalid_argument("OperatorSet: " + spec.to_string() + " was not resolved");
  return it->second;
}

const ResolvedOperator& OperatorSet::unsigned_boundary(int r) const {
  const auto it = ops_.find("sdp/" + std::to_string(r));
  if (it == ops_.end())
    throw std::invalid_argument("OperatorSet: no incidence between ranks " + std::to_string(r - 1) + " and " +
                                std::to_string(r));
  return it->second;
}

Batch Batch::single(FeaturedComplex fc) {
  Batch b;
  const int top = max_rank(fc.complex);
  for (int r = 0; r <= top; ++r) b.batch.emplace_back(num_cells(fc.complex, r), 0);
  b.complex = std::move(fc);
  b.num_samples = 1;
  b.sample_indices = {0};
  return b;
}

BoundParameters::BoundParameters(ComputationRecord& rec, const ModelState& state) {
  for (const auto& p : state.parameters) ids_.emplace(p.id, rec.parameter(p));
}

ValueId BoundParameters::operator[](std::string_view id) const {
  const auto it = ids_.find(id);
  if (it == ids_.end()) throw std::out_of_range("BoundParameters: no parameter '" + std::string(id) + "'");
  return it->second;
}

std::vector<ValueId> encode(ComputationRecord& rec, const BoundParameters& params,
                            std::span<const DenseMatrix> features, const ModelConfig& cfg, bool training,
                            std::uint64_t dropout_seed) {
  std::vector<ValueId> latents;
  for (std::size_t r = 0; r < features.size(); ++r) {
    const int rank = static_cast<int>(r);
    const ValueId x = rec.constant(features[r]);
    ValueId h = rec.relu(rec.matmul(x, params[param_id::encoder(rank)]));
    if (training && cfg.encoder_dropout > 0.0)
      h = rec.dropout(h, cfg.encoder_dropout, mix_seed(dropout_seed, r));
    latents.push_back(h);
  }
  return latents;
}

std::vector<ValueId> homp_layer_forward(ComputationRecord& rec, std::span<const ValueId> latents,
                                        const OperatorSet& ops, const BoundParameters& params, int layer,
                                        const ModelConfig& cfg) {
  std::vector<ValueId> next(latents.begin(), latents.end());
  for (int r : cfg.layer.target_ranks()) {
    const auto uses = cfg.layer.for_rank(r);
    std::vector<ValueId> messages;
    for (std::size_t k = 0; k < uses.size(); ++k) {
      const auto& spec = uses[k].spec;
      const auto& op = ops.neighborhood(spec, cfg.layer.intra_agg);
      const ValueId source = latents[static_cast<std::size_t>(spec.source_rank())];
      const ValueId transformed = rec.matmul(source, params[param_id::message(layer, r, k)]);
      messages.push_back(rec.sparse_dense_matmul(op.op, transformed, op.op_t));
    }
    ValueId m = messages.front();
    if (cfg.layer.inter_agg == InterAgg::sum) {
      for (std::size_t k = 1; k < messages.size(); ++k) m = rec.add(m, messages[k]);
    } else if (messages.size() > 1) {
      m = rec.concat_cols(messages);
    }
    const ValueId h = latents[static_cast<std::size_t>(r)];
    switch (cfg.layer.update) {
      case UpdateKind::relu_residual:
        next[static_cast<std::size_t>(r)] =
            rec.add(rec.relu(rec.add(rec.matmul(h, params[param_id::update(layer, r)]), m)), h);
        break;
      case UpdateKind::relu_plain:
        next[static_cast<std::size_t>(r)] = rec.relu(rec.add(rec.matmul(h, params[param_id::update(layer, r)]), m));
        break;
      case UpdateKind::identity: next[static_cast<std::size_t>(r)] = m; break;
    }
  }
  return next;
}

ForwardResult forward(ComputationRecord& rec, const BoundParameters& params, const ModelConfig& cfg,
                      const Batch& batch, const OperatorSet& ops, bool training, std::uint64_t dropout_seed) {
  ForwardResult out;
  out.latents = encode(rec, params, batch.complex.features, cfg, training, dropout_seed);
  for (int l = 0; l < cfg.num_layers; ++l)
    out.latents = homp_layer_forward(rec, out.latents, ops, params, l, cfg);
  return out;
}

}  // namespace topoforge
