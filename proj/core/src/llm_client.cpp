#include "ost/llm_client.hpp"

#include <array>
#include <cstdlib>
#include <random>
#include <regex>

#include "httplib.h"
#include "json.hpp"
#include "ost/error.hpp"
#include "ost/prompts.hpp"

namespace ost {

namespace {

using json = nlohmann::ordered_json;

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

constexpr std::array<std::string_view, 32> kVocabulary = {
    "wooden",  "table",   "hand",     "ball",    "field",   "water",  "rope",    "metal",
    "outdoor", "indoor",  "crowd",    "bright",  "kitchen", "tool",   "grip",    "turn",
    "lift",    "step",    "surface",  "helmet",  "bench",   "glove",  "motion",  "slow",
    "rapid",   "balance", "platform", "fabric",  "engine",  "garden", "mirror",  "paper"};

}  // namespace

void LlmRequest::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw ValidationError("temperature must be in [0, 2], got " + std::to_string(temperature));
  }
}

HttpChatConfig HttpChatConfig::from_env() {
  HttpChatConfig cfg;
  cfg.base_url = env_or_empty("OST_LLM_BASE_URL");
  cfg.model = env_or_empty("OST_LLM_MODEL");
  cfg.api_key = env_or_empty("OST_LLM_API_KEY");
  if (cfg.base_url.empty()) throw ConfigError("OST_LLM_BASE_URL is not set");
  if (cfg.model.empty()) throw ConfigError("OST_LLM_MODEL is not set");
  return cfg;
}

std::string chat_request_json(const LlmRequest& request) {
  json doc;
  doc["model"] = request.model_id;
  doc["temperature"] = request.temperature;
  doc["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt}}});
  return doc.dump();
}

std::string parse_chat_response(const std::string& body) {
  try {
    const json doc = json::parse(body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed chat completion response: ") + e.what());
  }
}

HttpChatClient::HttpChatClient(HttpChatConfig config) : config_(std::move(config)) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, url_re)) {
    throw ConfigError("invalid LLM base URL \"" + config_.base_url + "\"");
  }
  scheme_host_port_ = m[1].str();
  path_prefix_ = m[2].matched ? m[2].str() : std::string();
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string HttpChatClient::complete(const LlmRequest& request) {
  request.validate();
  httplib::Client cli(scheme_host_port_);
  cli.set_connection_timeout(config_.timeout);
  cli.set_read_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  LlmRequest wire = request;
  if (wire.model_id.empty()) wire.model_id = config_.model;
  auto res = cli.Post(path_prefix_ + "/chat/completions", headers, chat_request_json(wire),
                      "application/json");
  if (!res) {
    throw TransportError("request to " + scheme_host_port_ + " failed: " +
                         httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("LLM endpoint returned HTTP " + std::to_string(res->status));
  }
  return parse_chat_response(res->body);
}

MockLlmClient::MockLlmClient(std::uint64_t seed, std::size_t list_length)
    : seed_(seed), list_length_(list_length) {}

void MockLlmClient::enqueue_response(std::string response) {
  std::lock_guard lock(mu_);
  scripted_.push_back(std::move(response));
}

void MockLlmClient::fail_next(std::size_t count) {
  std::lock_guard lock(mu_);
  failures_left_ = count;
}

std::string MockLlmClient::complete(const LlmRequest& request) {
  request.validate();
  ++calls_;
  {
    std::lock_guard lock(mu_);
    if (failures_left_ > 0) {
      --failures_left_;
      throw TransportError("mock transport failure");
    }
    if (!scripted_.empty()) {
      std::string r = std::move(scripted_.front());
      scripted_.pop_front();
      return r;
    }
  }
  return generated_response(request.prompt);
}

std::string MockLlmClient::generated_response(const std::string& prompt) const {
  std::mt19937_64 rng(seed_ ^ fnv1a(prompt));
  std::vector<std::string> items;
  items.reserve(list_length_);
  for (std::size_t i = 0; i < list_length_; ++i) {
    std::string item;
    for (int w = 0; w < 3; ++w) {
      if (w) item += ' ';
      item += kVocabulary[rng() % kVocabulary.size()];
    }
    items.push_back(std::move(item));
  }
  return "Here is the list you asked for:\n" + render_numbered_list(items) + "\n";
}

}  // namespace ost
