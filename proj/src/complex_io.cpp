#include "topoforge/complex_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "topoforge/error.hpp"

namespace topoforge {

namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

ordered_json cell_list(const std::vector<Cell>& cells) {
  ordered_json arr = ordered_json::array();
  for (const auto& c : cells) arr.push_back(c);
  return arr;
}

ordered_json node_list(std::size_t n) {
  ordered_json arr = ordered_json::array();
  for (NodeId v = 0; v < n; ++v) arr.push_back(ordered_json::array({v}));
  return arr;
}

ordered_json edge_list(const std::vector<Edge>& edges) {
  ordered_json arr = ordered_json::array();
  for (const auto& e : edges) arr.push_back(ordered_json::array({e[0], e[1]}));
  return arr;
}

class Reader {
 public:
  explicit Reader(std::string_view source) : source_(source) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw SchemaError(std::string(source_) + ": field '" + field + "': " + what);
  }

  const json& require(const json& obj, const char* key) const {
    if (!obj.contains(key)) fail(key, "missing");
    return obj.at(key);
  }

  std::size_t count(const json& v, const std::string& field) const {
    if (!v.is_number_unsigned()) fail(field, "expected a non-negative integer");
    return v.get<std::size_t>();
  }

  Cell cell(const json& v, const std::string& field) const {
    if (!v.is_array()) fail(field, "expected an array of node ids");
    Cell out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto id = count(v[i], field + "[" + std::to_string(i) + "]");
      if (id > UINT32_MAX) fail(field, "node id too large");
      out.push_back(static_cast<NodeId>(id));
    }
    return out;
  }

  std::vector<Cell> cells(const json& v, const std::string& field) const {
    if (!v.is_array()) fail(field, "expected an array of cells");
    std::vector<Cell> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(cell(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::vector<Edge> edges(const json& v, const std::string& field) const {
    std::vector<Edge> out;
    const auto raw = cells(v, field);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i].size() != 2) fail(field + "[" + std::to_string(i) + "]", "edges need 2 endpoints");
      out.push_back({raw[i][0], raw[i][1]});
    }
    return out;
  }

  void expect_nodes(const std::vector<Cell>& rank0, std::size_t n, const std::string& field) const {
    if (rank0.size() != n)
      fail(field, std::to_string(rank0.size()) + " 0-cells for num_nodes " + std::to_string(n));
    for (NodeId v = 0; v < n; ++v)
      if (rank0[v] != Cell{v})
        fail(field + "[" + std::to_string(v) + "]", "expected [" + std::to_string(v) + "]");
  }

  DenseMatrix matrix(const json& v, const std::string& field) const {
    if (!v.is_object()) fail(field, "expected {rows, cols, values}");
    const std::size_t rows = count(require(v, "rows"), field + ".rows");
    const std::size_t cols = count(require(v, "cols"), field + ".cols");
    const json& values = require(v, "values");
    if (!values.is_array() || values.size() != rows * cols)
      fail(field + ".values", "expected " + std::to_string(rows * cols) + " numbers");
    std::vector<double> data;
    data.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!values[i].is_number())
        fail(field + ".values[" + std::to_string(i) + "]", "expected a number");
      data.push_back(values[i].get<double>());
    }
    return DenseMatrix(rows, cols, std::move(data));
  }

 private:
  std::string_view source_;
};

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

std::string to_container_json(const FeaturedComplex& fc) {
  ordered_json doc;
  doc["kind"] = std::string(to_string(kind_of(fc.complex)));
  doc["num_nodes"] = num_nodes(fc.complex);
  std::visit(Overloaded{
                 [&](const Graph& g) {
                   doc["cells"] = ordered_json::array({node_list(g.num_nodes), edge_list(g.edges)});
                 },
                 [&](const SimplicialComplex& sc) {
                   ordered_json ranks = ordered_json::array();
                   for (const auto& r : sc.cells) ranks.push_back(cell_list(r));
                   doc["cells"] = std::move(ranks);
                 },
                 [&](const CellComplex& cc) {
                   doc["cells"] = ordered_json::array({node_list(cc.num_nodes), edge_list(cc.edges)});
                   doc["two_cells"] = cell_list(cc.two_cells);
                 },
                 [&](const Hypergraph& h) {
                   doc["cells"] = ordered_json::array({node_list(h.num_nodes), cell_list(h.hyperedges)});
                 },
                 [&](const CombinatorialComplex& ccc) {
                   ordered_json ranks = ordered_json::array();
                   for (const auto& r : ccc.cells) ranks.push_back(cell_list(r));
                   doc["cells"] = std::move(ranks);
                 },
             },
             fc.complex);
  ordered_json features = ordered_json::array();
  for (std::size_t r = 0; r < fc.features.size(); ++r) {
    const auto& m = fc.features[r];
    if (!m.all_finite())
      throw SchemaError("to_container_json: rank " + std::to_string(r) + " features are not finite");
    ordered_json entry;
    entry["rows"] = m.rows();
    entry["cols"] = m.cols();
    entry["values"] = std::vector<double>(m.values().begin(), m.values().end());
    features.push_back(std::move(entry));
  }
  doc["features"] = std::move(features);
  if (fc.labels) doc["labels"] = *fc.labels;
  if (fc.targets) doc["targets"] = *fc.targets;
  if (fc.graph_label) doc["graph_label"] = *fc.graph_label;
  return doc.dump();
}

FeaturedComplex from_container_json(std::string_view text, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string(source) + ": line " + std::to_string(line_of(text, e.byte)) +
                      ": malformed JSON (" + e.what() + ")");
  }
  Reader rd(source);
  if (!doc.is_object()) rd.fail("<root>", "expected an object");
  const json& kind_field = rd.require(doc, "kind");
  if (!kind_field.is_string()) rd.fail("kind", "expected a string");
  DomainKind kind;
  try {
    kind = parse_domain_kind(kind_field.get<std::string>());
  } catch (const std::invalid_argument& e) {
    rd.fail("kind", e.what());
  }
  const std::size_t n = rd.count(rd.require(doc, "num_nodes"), "num_nodes");
  const json& cells = rd.require(doc, "cells");
  if (!cells.is_array() || cells.empty()) rd.fail("cells", "expected per-rank arrays");
  auto rank_field = [](std::size_t r) { return "cells[" + std::to_string(r) + "]"; };
  auto two_ranks = [&]() {
    if (cells.size() != 2) rd.fail("cells", "expected exactly ranks 0 and 1");
    rd.expect_nodes(rd.cells(cells[0], rank_field(0)), n, rank_field(0));
  };

  FeaturedComplex fc;
  switch (kind) {
    case DomainKind::graph: {
      two_ranks();
      Graph g;
      g.num_nodes = n;
      g.edges = rd.edges(cells[1], rank_field(1));
      fc.complex = std::move(g);
      break;
    }
    case DomainKind::cell: {
      two_ranks();
      CellComplex cc;
      cc.num_nodes = n;
      cc.edges = rd.edges(cells[1], rank_field(1));
      cc.two_cells = rd.cells(rd.require(doc, "two_cells"), "two_cells");
      fc.complex = std::move(cc);
      break;
    }
    case DomainKind::hypergraph: {
      two_ranks();
      Hypergraph h;
      h.num_nodes = n;
      h.hyperedges = rd.cells(cells[1], rank_field(1));
      fc.complex = std::move(h);
      break;
    }
    case DomainKind::simplicial:
    case DomainKind::combinatorial: {
      std::vector<std::vector<Cell>> ranks;
      for (std::size_t r = 0; r < cells.size(); ++r) ranks.push_back(rd.cells(cells[r], rank_field(r)));
      if (kind == DomainKind::simplicial)
        fc.complex = SimplicialComplex{n, std::move(ranks)};
      else
        fc.complex = CombinatorialComplex{n, std::move(ranks)};
      break;
    }
  }

  if (doc.contains("features")) {
    const json& features = doc.at("features");
    if (!features.is_array()) rd.fail("features", "expected an array");
    for (std::size_t r = 0; r < features.size(); ++r)
      fc.features.push_back(rd.matrix(features[r], "features[" + std::to_string(r) + "]"));
  }
  if (doc.contains("labels")) {
    const json& labels = doc.at("labels");
    if (!labels.is_array()) rd.fail("labels", "expected an integer array");
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!labels[i].is_number_integer()) rd.fail("labels[" + std::to_string(i) + "]", "expected an integer");
      out.push_back(labels[i].get<std::int64_t>());
    }
    fc.labels = std::move(out);
  }
  if (doc.contains("targets")) {
    const json& targets = doc.at("targets");
    if (!targets.is_array()) rd.fail("targets", "expected a number array");
    std::vector<double> out;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (!targets[i].is_number()) rd.fail("targets[" + std::to_string(i) + "]", "expected a number");
      out.push_back(targets[i].get<double>());
    }
    fc.targets = std::move(out);
  }
  if (doc.contains("graph_label")) {
    if (!doc.at("graph_label").is_number()) rd.fail("graph_label", "expected a number");
    fc.graph_label = doc.at("graph_label").get<double>();
  }

  if (auto v = validate_featured(fc)) throw SchemaError(std::string(source) + ": " + v->message());
  return fc;
}

void write_complex(const std::filesystem::path& path, const FeaturedComplex& fc) {
  write_file_atomic(path, to_container_json(fc) + "\n");
}

void write_complex(const std::filesystem::path& path, const Complex& c) {
  write_complex(path, FeaturedComplex{c, {}, std::nullopt, std::nullopt, std::nullopt});
}

FeaturedComplex read_complex(const std::filesystem::path& path) {
  return from_container_json(read_file(path), path.string());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace topoforge
