#include "topoforge/splits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "topoforge/complex_io.hpp"
#include "topoforge/error.hpp"
#include "topoforge/rng.hpp"

namespace topoforge {

std::string_view to_string(SplitStrategy s) {
  switch (s) {
    case SplitStrategy::random: return "random";
    case SplitStrategy::kfold: return "kfold";
    case SplitStrategy::fixed: return "fixed";
  }
  return "unknown";
}

SplitStrategy parse_split_strategy(std::string_view s) {
  for (auto x : {SplitStrategy::random, SplitStrategy::kfold, SplitStrategy::fixed})
    if (to_string(x) == s) return x;
  throw std::invalid_argument("unknown split strategy '" + std::string(s) + "'");
}

std::vector<std::string> SplitSpec::violations() const {
  std::vector<std::string> out;
  switch (strategy) {
    case SplitStrategy::random:
      if (!(train_frac > 0.0)) out.push_back("train_frac must be positive");
      if (!(val_frac > 0.0)) out.push_back("val_frac must be positive");
      if (train_frac + val_frac >= 1.0) out.push_back("fractions exceed 1: train_frac + val_frac must leave a test remainder");
      break;
    case SplitStrategy::kfold:
      if (k < 3) out.push_back("kfold needs k >= 3 so that train, val and test folds differ");
      if (fold >= k) out.push_back("fold must be in [0, k)");
      break;
    case SplitStrategy::fixed:
      if (file.empty()) out.push_back("fixed splits need a splits file");
      break;
  }
  return out;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

std::vector<std::string> split_violations(const Splits& s, std::size_t n) {
  std::vector<std::string> out;
  std::vector<int> owner(n, -1);
  const std::vector<std::size_t>* sets[] = {&s.train, &s.val, &s.test};
  const char* names[] = {"train", "val", "test"};
  for (int k = 0; k < 3; ++k)
    for (std::size_t i : *sets[k]) {
      if (i >= n) {
        out.push_back(std::string(names[k]) + " index " + std::to_string(i) + " out of range for " +
                      std::to_string(n) + " units");
        continue;
      }
      if (owner[i] >= 0) {
        out.push_back("index " + std::to_string(i) + " appears in both " + names[owner[i]] + " and " + names[k]);
        continue;
      }
      owner[i] = k;
    }
  return out;
}

Splits make_splits(std::size_t n, const SplitSpec& spec) {
  if (auto v = spec.violations(); !v.empty()) throw ConfigError(v.front());
  Splits s;
  switch (spec.strategy) {
    case SplitStrategy::random: {
      if (n < 3) throw ConfigError("random splits need n >= 3");
      const auto p = permutation(n, spec.seed);
      const auto n_train = static_cast<std::size_t>(std::floor(spec.train_frac * static_cast<double>(n)));
      const auto n_val = static_cast<std::size_t>(std::floor(spec.val_frac * static_cast<double>(n)));
      s.train.assign(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n_train));
      s.val.assign(p.begin() + static_cast<std::ptrdiff_t>(n_train),
                   p.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
      s.test.assign(p.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), p.end());
      break;
    }
    case SplitStrategy::kfold: {
      if (n < spec.k) throw ConfigError("kfold needs n >= k");
      const auto p = permutation(n, spec.seed);
      auto fold_of = [&](std::size_t pos) {
        // contiguous folds, the first n % k folds one larger
        const std::size_t base = n / spec.k, extra = n % spec.k;
        const std::size_t big = extra * (base + 1);
        return pos < big ? pos / (base + 1) : extra + (pos - big) / base;
      };
      const std::size_t val_fold = (spec.fold + 1) % spec.k;
      for (std::size_t pos = 0; pos < n; ++pos) {
        const std::size_t f = fold_of(pos);
        (f == spec.fold ? s.test : f == val_fold ? s.val : s.train).push_back(p[pos]);
      }
      break;
    }
    case SplitStrategy::fixed: {
      s = splits_from_json(read_file(spec.file), spec.file.string());
      if (auto v = split_violations(s, n); !v.empty()) throw ConfigError(spec.file.string() + ": " + v.front());
      break;
    }
  }
  return s;
}

std::string splits_to_json(const Splits& s) {
  nlohmann::ordered_json j;
  j["train"] = s.train;
  j["val"] = s.val;
  j["test"] = s.test;
  return j.dump() + "\n";
}

Splits splits_from_json(std::string_view text, std::string_view source) {
  try {
    const auto j = nlohmann::json::parse(text);
    Splits s;
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.val = j.at("val").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string(source) + ": invalid splits file (" + e.what() + ")");
  }
}

}  // namespace topoforge
