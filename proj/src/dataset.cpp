#include "topoforge/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "topoforge/complex_io.hpp"
#include "topoforge/disjoint_union.hpp"
#include "topoforge/error.hpp"
#include "topoforge/liftings.hpp"
#include "topoforge/rng.hpp"

namespace topoforge {

namespace fs = std::filesystem;

std::size_t DatasetBundle::num_units() const {
  if (location == TargetLocation::graph) return samples.size();
  return samples.empty() ? 0 : num_nodes(samples.front().complex);
}

std::string_view to_string(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::container: return "container";
    case DatasetFormat::edge_list_dir: return "edge_list_dir";
    case DatasetFormat::cora: return "cora";
  }
  return "unknown";
}

DatasetFormat parse_dataset_format(std::string_view s) {
  for (auto f : {DatasetFormat::container, DatasetFormat::edge_list_dir, DatasetFormat::cora})
    if (to_string(f) == s) return f;
  throw std::invalid_argument("unknown dataset format '" + std::string(s) + "'");
}

TaskKind infer_task(const DatasetBundle& b) {
  if (b.samples.empty()) return TaskKind::node_classification;
  const auto& s = b.samples.front();
  if (s.labels) return TaskKind::node_classification;
  if (s.targets) return TaskKind::node_regression;
  bool integral = true;
  for (const auto& x : b.samples)
    if (x.graph_label && *x.graph_label != static_cast<double>(static_cast<std::int64_t>(*x.graph_label)))
      integral = false;
  return integral ? TaskKind::graph_classification : TaskKind::graph_regression;
}

FeaturedComplex featured_from_graph(const Graph& g) {
  Graph structure;
  structure.num_nodes = g.num_nodes;
  structure.edges = g.edges;
  FeaturedComplex fc;
  fc.complex = structure;
  if (g.node_features) fc.features = lift_features_projected_sum(fc.complex, *g.node_features);
  fc.labels = g.node_labels;
  fc.targets = g.node_targets;
  fc.graph_label = g.graph_label;
  return fc;
}

Graph graph_from_featured(const FeaturedComplex& fc) {
  const auto* g = std::get_if<Graph>(&fc.complex);
  if (!g) throw SchemaError("expected a graph sample, got a " + std::string(to_string(kind_of(fc.complex))));
  Graph out;
  out.num_nodes = g->num_nodes;
  out.edges = g->edges;
  if (!fc.features.empty()) out.node_features = fc.features.front();
  out.node_labels = fc.labels;
  out.node_targets = fc.targets;
  out.graph_label = fc.graph_label;
  return out;
}

namespace {

std::string location(const fs::path& p, std::size_t line) { return p.string() + ":" + std::to_string(line); }

template <class T>
T parse_number(std::string_view token, const fs::path& p, std::size_t line) {
  T value{};
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw SchemaError(location(p, line) + ": expected a number, got '" + std::string(token) + "'");
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  if (sep == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
      if (j > i) out.push_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  }
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i)
    if (i == line.size() || line[i] == sep) {
      auto field = line.substr(start, i - start);
      while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.remove_suffix(1);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      out.push_back(field);
      start = i + 1;
    }
  return out;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw SchemaError(p.string() + ": cannot open");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  return lines;
}

DenseMatrix to_matrix(const std::vector<std::vector<double>>& rows) {
  DenseMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  return m;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

DenseMatrix read_features_csv(const fs::path& p) {
  const auto lines = read_lines(p);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    std::vector<double> row;
    for (auto f : split_fields(lines[i], ',')) row.push_back(parse_number<double>(f, p, i + 1));
    if (!rows.empty() && row.size() != rows.front().size())
      throw SchemaError(location(p, i + 1) + ": " + std::to_string(row.size()) + " columns, expected " +
                        std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  return to_matrix(rows);
}

std::vector<std::int64_t> read_labels_csv(const fs::path& p) {
  const auto lines = read_lines(p);
  std::vector<std::int64_t> labels;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const auto fields = split_fields(lines[i], ',');
    if (fields.size() != 1) throw SchemaError(location(p, i + 1) + ": expected one label per line");
    labels.push_back(parse_number<std::int64_t>(fields[0], p, i + 1));
  }
  return labels;
}

Graph load_edge_list(const fs::path& file) {
  const auto lines = read_lines(file);
  std::optional<std::size_t> n;
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    if (blank(line) || line.front() == '#') continue;
    const auto fields = split_fields(line, ' ');
    if (!n) {
      if (fields.size() != 2 || fields[0] != "nodes")
        throw SchemaError(location(file, i + 1) + ": expected header 'nodes N'");
      n = parse_number<std::size_t>(fields[1], file, i + 1);
      continue;
    }
    if (fields.size() != 2) throw SchemaError(location(file, i + 1) + ": expected 'u v'");
    const auto u = parse_number<NodeId>(fields[0], file, i + 1);
    const auto v = parse_number<NodeId>(fields[1], file, i + 1);
    if (u >= *n || v >= *n)
      throw SchemaError(location(file, i + 1) + ": endpoint out of range for " + std::to_string(*n) + " nodes");
    edges.emplace_back(u, v);
  }
  if (!n) throw SchemaError(file.string() + ": missing header 'nodes N'");
  const fs::path dir = file.parent_path();
  std::optional<DenseMatrix> features;
  std::optional<std::vector<std::int64_t>> labels;
  if (fs::exists(dir / "features.csv")) features = read_features_csv(dir / "features.csv");
  if (fs::exists(dir / "labels.csv")) labels = read_labels_csv(dir / "labels.csv");
  try {
    return build_graph(*n, edges, std::move(features), std::move(labels)).graph;
  } catch (const SchemaError& e) {
    throw SchemaError(dir.string() + ": " + e.what());
  }
}

DatasetBundle load_cora(const fs::path& dir) {
  const fs::path content = dir / "cora.content";
  const fs::path cites = dir / "cora.cites";
  std::map<std::string, NodeId> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> class_names;
  const auto content_lines = read_lines(content);
  for (std::size_t i = 0; i < content_lines.size(); ++i) {
    const std::string_view line = content_lines[i];
    if (blank(line)) continue;
    const auto fields = split_fields(line, ' ');
    if (fields.size() < 3) throw SchemaError(location(content, i + 1) + ": expected id, features, label");
    if (!ids.emplace(std::string(fields.front()), static_cast<NodeId>(rows.size())).second)
      throw SchemaError(location(content, i + 1) + ": duplicate paper id " + std::string(fields.front()));
    std::vector<double> row;
    for (std::size_t k = 1; k + 1 < fields.size(); ++k) row.push_back(parse_number<double>(fields[k], content, i + 1));
    if (!rows.empty() && row.size() != rows.front().size())
      throw SchemaError(location(content, i + 1) + ": inconsistent feature count");
    rows.push_back(std::move(row));
    class_names.emplace_back(fields.back());
  }
  std::vector<std::string> classes = class_names;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::vector<std::int64_t> labels;
  for (const auto& c : class_names)
    labels.push_back(std::lower_bound(classes.begin(), classes.end(), c) - classes.begin());

  std::vector<std::pair<NodeId, NodeId>> edges;
  const auto cite_lines = read_lines(cites);
  for (std::size_t i = 0; i < cite_lines.size(); ++i) {
    if (blank(cite_lines[i])) continue;
    const auto fields = split_fields(cite_lines[i], ' ');
    if (fields.size() != 2) throw SchemaError(location(cites, i + 1) + ": expected 'cited citing'");
    const auto a = ids.find(std::string(fields[0]));
    const auto b = ids.find(std::string(fields[1]));
    if (a == ids.end() || b == ids.end()) throw SchemaError(location(cites, i + 1) + ": unknown paper id");
    edges.emplace_back(a->second, b->second);
  }
  DatasetBundle bundle;
  bundle.name = "cora";
  bundle.location = TargetLocation::node;
  bundle.task = TaskKind::node_classification;
  bundle.samples.push_back(
      featured_from_graph(build_graph(rows.size(), edges, to_matrix(rows), labels).graph));
  bundle.sources.push_back(dir.string());
  return bundle;
}

}  // namespace

void check_homogeneous(const DatasetBundle& b) {
  for (std::size_t i = 1; i < b.samples.size(); ++i) {
    const auto& a = b.samples.front();
    const auto& s = b.samples[i];
    if (kind_of(a.complex) != kind_of(s.complex))
      throw SchemaError("mixed domain kinds: " + b.sources.front() + " is " +
                        std::string(to_string(kind_of(a.complex))) + ", " + b.sources[i] + " is " +
                        std::string(to_string(kind_of(s.complex))));
    if (a.features.empty() != s.features.empty() ||
        (!a.features.empty() && a.features.front().cols() != s.features.front().cols()))
      throw SchemaError("mixed feature widths: " + b.sources.front() + " has " +
                        (a.features.empty() ? std::string("none") : std::to_string(a.features.front().cols())) +
                        ", " + b.sources[i] + " has " +
                        (s.features.empty() ? std::string("none") : std::to_string(s.features.front().cols())));
  }
}

void pad_samples(DatasetBundle& b) {
  int top = 0;
  for (const auto& s : b.samples) top = std::max(top, max_rank(s.complex));
  for (auto& s : b.samples) {
    const std::size_t width = s.features.empty() ? 0 : s.features.front().cols();
    pad_to_rank(s, top, width);
  }
}

DatasetBundle load_dataset(const fs::path& path, DatasetFormat format) {
  if (!fs::exists(path)) throw SchemaError(path.string() + ": no such file or directory");
  DatasetBundle bundle;
  bundle.name = path.filename().empty() ? path.parent_path().filename().string() : path.filename().string();
  switch (format) {
    case DatasetFormat::container: {
      std::vector<fs::path> files;
      if (fs::is_directory(path)) {
        for (const auto& e : fs::directory_iterator(path))
          if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "manifest.json")
            files.push_back(e.path());
        std::sort(files.begin(), files.end(),
                  [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
        if (files.empty()) throw SchemaError(path.string() + ": no container files");
      } else {
        files.push_back(path);
      }
      for (const auto& f : files) {
        bundle.samples.push_back(read_complex(f));
        bundle.sources.push_back(f.string());
      }
      const bool node_level = bundle.samples.size() == 1 && !bundle.samples.front().graph_label;
      bundle.location = node_level ? TargetLocation::node : TargetLocation::graph;
      break;
    }
    case DatasetFormat::edge_list_dir: {
      const fs::path file = fs::is_directory(path) ? path / "edges.txt" : path;
      if (!fs::exists(file)) throw SchemaError(file.string() + ": no such file");
      bundle.samples.push_back(featured_from_graph(load_edge_list(file)));
      bundle.sources.push_back(file.string());
      bundle.location = TargetLocation::node;
      break;
    }
    case DatasetFormat::cora: return load_cora(path);
  }
  check_homogeneous(bundle);
  bundle.task = infer_task(bundle);
  return bundle;
}

Graph erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (rng.uniform() < p) edges.emplace_back(u, v);
  return build_graph(n, edges).graph;
}

DatasetBundle make_sbm_dataset(const SbmParams& p) {
  if (p.blocks == 0 || p.feature_dim < p.blocks)
    throw std::invalid_argument("sbm: need 1 <= blocks <= feature_dim");
  Rng rng(p.seed);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId u = 0; u < p.nodes; ++u)
    for (NodeId v = u + 1; v < p.nodes; ++v)
      if (rng.uniform() < (u % p.blocks == v % p.blocks ? p.p_in : p.p_out)) edges.emplace_back(u, v);
  DenseMatrix x(p.nodes, p.feature_dim);
  std::vector<std::int64_t> labels(p.nodes);
  for (std::size_t i = 0; i < p.nodes; ++i) {
    labels[i] = static_cast<std::int64_t>(i % p.blocks);
    for (std::size_t j = 0; j < p.feature_dim; ++j)
      x(i, j) = (j == i % p.blocks ? 1.0 : 0.0) + p.feature_noise * rng.normal();
  }
  DatasetBundle b;
  b.name = "sbm";
  b.task = TaskKind::node_classification;
  b.location = TargetLocation::node;
  b.samples.push_back(featured_from_graph(build_graph(p.nodes, edges, std::move(x), std::move(labels)).graph));
  b.sources.push_back("sbm(seed=" + std::to_string(p.seed) + ")");
  return b;
}

DatasetBundle make_graph_set_dataset(const GraphSetParams& p) {
  if (p.min_nodes == 0 || p.max_nodes < p.min_nodes) throw std::invalid_argument("graph set: bad node range");
  Rng rng(p.seed);
  DatasetBundle b;
  b.name = "graph_set";
  b.task = TaskKind::graph_classification;
  b.location = TargetLocation::graph;
  for (std::size_t i = 0; i < p.graphs; ++i) {
    const std::size_t n = p.min_nodes + rng.below(p.max_nodes - p.min_nodes + 1);
    const bool dense = rng.below(2) == 1;
    Graph g = erdos_renyi(n, dense ? p.p_dense : p.p_sparse, mix_seed(p.seed, i));
    g.node_features = default_node_features(n);
    g.graph_label = dense ? 1.0 : 0.0;
    b.samples.push_back(featured_from_graph(g));
    b.sources.push_back("graph_set[" + std::to_string(i) + "]");
  }
  return b;
}

}  // namespace topoforge
