#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "topoforge/complex.hpp"

namespace topoforge {

// Container document (UTF-8 JSON, keys in this order):
//   kind        graph | simplicial | cell | hypergraph | combinatorial
//   num_nodes   integer
//   cells       per-rank arrays of sorted id arrays (rank 0 lists [v] for every node)
//   two_cells   cell complexes only: canonical cycles
//   features    per-rank {"rows", "cols", "values"} with row-major values
//   labels      optional integer node labels
//   targets     optional real node targets
//   graph_label optional number
// Reals are written in shortest round-trip decimal form, so a write/read
// cycle reproduces every feature bit-for-bit.

std::string to_container_json(const FeaturedComplex& fc);

/// Parse and validate a container document. `source` names the document in
/// diagnostics. Throws SchemaError naming the line or field at fault.
FeaturedComplex from_container_json(std::string_view text, std::string_view source = "<memory>");

void write_complex(const std::filesystem::path& path, const FeaturedComplex& fc);
void write_complex(const std::filesystem::path& path, const Complex& c);
FeaturedComplex read_complex(const std::filesystem::path& path);

/// Write via a sibling temporary file and rename, so readers never observe
/// a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace topoforge
