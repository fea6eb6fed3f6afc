#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ost/prompts.hpp"

namespace ost {

struct DescriptorCacheKey {
  std::string model_id;
  std::string template_version;
  DescriptorKind kind = DescriptorKind::spatio;
  std::string category;
  std::size_t n = 0;
  double temperature = 0.7;

  auto operator<=>(const DescriptorCacheKey&) const = default;

  // Canonical JSON (fixed key order) used both for hashing and storage.
  std::string canonical_json() const;
  // Lowercase hex SHA-256 of canonical_json(); the cache file stem.
  std::string digest() const;
};

struct CacheEntry {
  DescriptorCacheKey key;
  std::string raw_response;
  std::vector<std::string> items;
  std::int64_t created_unix = 0;
};

// One JSON file per key under `dir`, named <digest>.json:
//   {"key": {...}, "raw_response": str, "items": [str], "created_unix": int}
// Entries are write-once; a second store() for an existing key is a no-op.
class DescriptorCache {
 public:
  explicit DescriptorCache(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path path_for(const DescriptorCacheKey& key) const;

  // Returns nullopt on a miss or when the stored key does not match.
  std::optional<CacheEntry> lookup(const DescriptorCacheKey& key) const;
  void store(const DescriptorCacheKey& key, const std::string& raw_response,
             const std::vector<std::string>& items) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace ost
