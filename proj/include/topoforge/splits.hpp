#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace topoforge {

enum class SplitStrategy { random, kfold, fixed };
std::string_view to_string(SplitStrategy s);
SplitStrategy parse_split_strategy(std::string_view s);

struct SplitSpec {
  SplitStrategy strategy = SplitStrategy::random;
  double train_frac = 0.5;
  double val_frac = 0.25;
  std::size_t k = 5;
  std::size_t fold = 0;
  std::filesystem::path file;
  std::uint64_t seed = 0;

  /// Every violated constraint, independent of n.
  std::vector<std::string> violations() const;
};

struct Splits {
  std::vector<std::size_t> train, val, test;
  friend bool operator==(const Splits&, const Splits&) = default;
};

/// random: seeded Fisher-Yates permutation, first floor(train_frac*n) train,
/// next floor(val_frac*n) val, rest test. kfold: contiguous folds of the
/// seeded permutation (sizes differ by at most one); fold f is test, fold
/// (f+1) mod k is val. fixed: read from the splits file. Throws ConfigError
/// on any violation.
Splits make_splits(std::size_t n, const SplitSpec& spec);

/// Indices must lie in [0, n) and the three sets must be pairwise disjoint.
std::vector<std::string> split_violations(const Splits& s, std::size_t n);

std::string splits_to_json(const Splits& s);
Splits splits_from_json(std::string_view text, std::string_view source);

/// Seeded permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed);

}  // namespace topoforge
