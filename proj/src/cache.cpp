#include "topoforge/cache.hpp"

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "topoforge/complex_io.hpp"
#include "topoforge/error.hpp"

namespace topoforge {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest failed");
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string dataset_digest(const DatasetBundle& raw) {
  std::string all;
  for (const auto& s : raw.samples) {
    all += to_container_json(s);
    all += '\n';
  }
  return sha256_hex(all);
}

std::string canonical_transform_key(const DatasetBundle& raw, const LiftingConfig& cfg) {
  nlohmann::json key;
  key["dataset"] = raw.name;
  key["data"] = dataset_digest(raw);
  key["transform"] = nlohmann::json::parse(cfg.canonical_json());
  return key.dump();
}

fs::path CacheStore::sample_path(std::string_view digest, std::size_t index) const {
  char name[32];
  std::snprintf(name, sizeof name, "sample_%06zu.json", index);
  return entry_dir(digest) / name;
}

fs::path cache_root(const fs::path& fallback) {
  if (const char* env = std::getenv("TOPOFORGE_CACHE"); env && *env) return env;
  return fallback;
}

Preprocessed preprocess(const DatasetBundle& raw, const LiftingConfig& cfg, const CacheStore* cache) {
  if (auto v = cfg.violations(); !v.empty()) throw ConfigError(v.front());
  Preprocessed out;
  out.bundle.name = raw.name;
  out.bundle.task = raw.task;
  out.bundle.location = raw.location;
  out.bundle.sources = raw.sources;
  out.stats.digest = sha256_hex(canonical_transform_key(raw, cfg));
  if (cache) fs::create_directories(cache->entry_dir(out.stats.digest));

  const std::size_t n = raw.samples.size();
  out.bundle.samples.resize(n);
  enum class Outcome { computed, hit, corrupt };
  std::vector<Outcome> outcome(n, Outcome::computed);
  std::vector<std::exception_ptr> errors(n);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      if (cache) {
        const fs::path p = cache->sample_path(out.stats.digest, i);
        if (fs::exists(p)) {
          try {
            out.bundle.samples[i] = read_complex(p);
            outcome[i] = Outcome::hit;
            continue;
          } catch (const SchemaError&) {
            outcome[i] = Outcome::corrupt;
          }
        }
      }
      out.bundle.samples[i] = apply_lifting(graph_from_featured(raw.samples[i]), cfg);
      if (cache) write_complex(cache->sample_path(out.stats.digest, i), out.bundle.samples[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    const std::string where = "sample " + std::to_string(i) + " (" + raw.sources[i] + "): ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const LiftingRefusal& e) {
      throw LiftingRefusal(where + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError(where + e.what());
    }
  }
  for (auto o : outcome) {
    if (o == Outcome::hit) ++out.stats.hits;
    else ++out.stats.computed;
    if (o == Outcome::corrupt) ++out.stats.corrupt_recomputed;
  }
  pad_samples(out.bundle);
  return out;
}

}  // namespace topoforge
