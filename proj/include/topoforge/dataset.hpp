#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "topoforge/complex.hpp"
#include "topoforge/graph.hpp"
#include "topoforge/homp.hpp"

namespace topoforge {

enum class TargetLocation { node, graph };

/// Samples are featured graphs before preprocessing and featured complexes
/// after. `sources` names each sample in diagnostics.
struct DatasetBundle {
  std::string name;
  TaskKind task = TaskKind::node_classification;
  TargetLocation location = TargetLocation::node;
  std::vector<FeaturedComplex> samples;
  std::vector<std::string> sources;

  /// Number of prediction units: nodes of the single complex for node
  /// tasks, samples for graph tasks.
  std::size_t num_units() const;
};

enum class DatasetFormat { container, edge_list_dir, cora };
std::string_view to_string(DatasetFormat f);
DatasetFormat parse_dataset_format(std::string_view s);

/// container: one container file, or every *.json file of a directory in
/// file-name order. edge_list_dir: a directory holding edges.txt ("nodes N"
/// header, then "u v" lines) with optional features.csv and labels.csv, or
/// the edge-list file itself. cora: a directory with cora.content and
/// cora.cites. Throws SchemaError with file/line diagnostics.
DatasetBundle load_dataset(const std::filesystem::path& path, DatasetFormat format);

/// Node-level task when the samples carry node labels/targets, graph-level
/// otherwise. Used when a config does not name the task.
TaskKind infer_task(const DatasetBundle& b);

FeaturedComplex featured_from_graph(const Graph& g);
/// Inverse of featured_from_graph; the sample must be of graph kind.
Graph graph_from_featured(const FeaturedComplex& fc);

/// Refuse bundles with mixed domain kinds or feature widths, naming both
/// offending sources.
void check_homogeneous(const DatasetBundle& b);

/// Pad simplicial/combinatorial samples with empty ranks so that every
/// sample populates the dataset-wide top rank.
void pad_samples(DatasetBundle& b);

struct SbmParams {
  std::size_t nodes = 60;
  std::size_t blocks = 2;
  double p_in = 0.5;
  double p_out = 0.05;
  std::size_t feature_dim = 4;
  double feature_noise = 1.0;
  std::uint64_t seed = 0;
};

/// Stochastic block model node-classification graph. Node i belongs to
/// block i mod blocks; features are a noisy one-hot of the block padded to
/// feature_dim columns.
DatasetBundle make_sbm_dataset(const SbmParams& p);

struct GraphSetParams {
  std::size_t graphs = 60;
  std::size_t min_nodes = 8;
  std::size_t max_nodes = 14;
  double p_sparse = 0.15;
  double p_dense = 0.45;
  std::uint64_t seed = 0;
};

/// Graph classification: Erdos-Renyi graphs, label 1 for the dense edge
/// probability and 0 for the sparse one, all-ones node features.
DatasetBundle make_graph_set_dataset(const GraphSetParams& p);

/// G(n, p) with the given seed.
Graph erdos_renyi(std::size_t n, double p, std::uint64_t seed);

}  // namespace topoforge
