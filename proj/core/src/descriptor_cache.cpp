#include "ost/descriptor_cache.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "ost/error.hpp"

namespace ost {

namespace {

using json = nlohmann::ordered_json;

json key_json(const DescriptorCacheKey& k) {
  json j;
  j["model_id"] = k.model_id;
  j["template_version"] = k.template_version;
  j["kind"] = std::string(to_string(k.kind));
  j["category"] = k.category;
  j["n"] = k.n;
  j["temperature"] = k.temperature;
  return j;
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xF];
  }
  return out;
}

}  // namespace

std::string DescriptorCacheKey::canonical_json() const { return key_json(*this).dump(); }

std::string DescriptorCacheKey::digest() const { return sha256_hex(canonical_json()); }

DescriptorCache::DescriptorCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::filesystem::path DescriptorCache::path_for(const DescriptorCacheKey& key) const {
  return dir_ / (key.digest() + ".json");
}

std::optional<CacheEntry> DescriptorCache::lookup(const DescriptorCacheKey& key) const {
  const auto path = path_for(key);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    const json doc = json::parse(ss.str());
    if (doc.at("key") != key_json(key)) return std::nullopt;
    CacheEntry e;
    e.key = key;
    e.raw_response = doc.at("raw_response").get<std::string>();
    e.items = doc.at("items").get<std::vector<std::string>>();
    e.created_unix = doc.at("created_unix").get<std::int64_t>();
    if (e.items.size() != key.n) return std::nullopt;
    return e;
  } catch (const json::exception&) {
    // Unreadable entries are treated as misses and regenerated.
    return std::nullopt;
  }
}

void DescriptorCache::store(const DescriptorCacheKey& key, const std::string& raw_response,
                            const std::vector<std::string>& items) const {
  const auto path = path_for(key);
  if (std::filesystem::exists(path)) return;

  json doc;
  doc["key"] = key_json(key);
  doc["raw_response"] = raw_response;
  doc["items"] = items;
  doc["created_unix"] = std::chrono::duration_cast<std::chrono::seconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();

  // Write to a unique temporary name, then rename into place.
  std::random_device rd;
  const auto tmp = path.string() + ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry " + tmp);
    out << doc.dump(2) << '\n';
    if (!out.flush()) throw IoError("cannot write cache entry " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move cache entry into place: " + path.string());
  }
}

}  // namespace ost
