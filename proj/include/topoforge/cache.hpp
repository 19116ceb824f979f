#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "topoforge/dataset.hpp"
#include "topoforge/liftings.hpp"

namespace topoforge {

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// Digest of the raw samples' container documents, in order.
std::string dataset_digest(const DatasetBundle& raw);

/// Canonical bytes keying a preprocessed dataset: sorted-key compact JSON of
/// the dataset name, the raw-data digest and the transform config.
std::string canonical_transform_key(const DatasetBundle& raw, const LiftingConfig& cfg);

/// Directory-per-digest store of lifted samples. Entries are written
/// atomically and never modified afterwards.
class CacheStore {
 public:
  explicit CacheStore(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path entry_dir(std::string_view digest) const { return root_ / std::string(digest); }
  std::filesystem::path sample_path(std::string_view digest, std::size_t index) const;

 private:
  std::filesystem::path root_;
};

struct PreprocessStats {
  std::string digest;
  std::size_t computed = 0;            // liftings actually run
  std::size_t hits = 0;                // samples served from the cache
  std::size_t corrupt_recomputed = 0;  // unreadable entries that were recomputed
};

struct Preprocessed {
  DatasetBundle bundle;
  PreprocessStats stats;
};

/// Lift every graph sample, serving unchanged configurations from the
/// cache. Without a cache every sample is computed. Lifting failures are
/// rethrown with the sample index and source. Samples are processed in
/// parallel; the result does not depend on the thread count.
Preprocessed preprocess(const DatasetBundle& raw, const LiftingConfig& cfg, const CacheStore* cache);

/// Cache root: TOPOFORGE_CACHE when set, otherwise `fallback`.
std::filesystem::path cache_root(const std::filesystem::path& fallback);

}  // namespace topoforge
