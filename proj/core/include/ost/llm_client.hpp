#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>

namespace ost {

struct LlmRequest {
  std::string prompt;
  double temperature = 0.7;
  std::string model_id;

  // Throws ValidationError unless temperature is in [0, 2].
  void validate() const;
};

// A chat-completion endpoint. Implementations must be safe to call from
// several threads at once.
class LlmClient {
 public:
  virtual ~LlmClient() = default;

  // Returns the text of the first completion choice. Throws TransportError
  // when the endpoint cannot be reached or answers with an error.
  virtual std::string complete(const LlmRequest& request) = 0;

  virtual std::string model_id() const = 0;
};

struct HttpChatConfig {
  // e.g. "https://api.openai.com/v1"; requests go to {base_url}/chat/completions.
  std::string base_url;
  std::string model;
  std::string api_key;
  std::chrono::seconds timeout{60};

  // Reads OST_LLM_BASE_URL, OST_LLM_MODEL and OST_LLM_API_KEY. Throws
  // ConfigError when the base URL or model is unset.
  static HttpChatConfig from_env();
};

// Wire format helpers, exposed for tests.
// {"model": ..., "temperature": ..., "messages": [{"role": "user", "content": prompt}]}
std::string chat_request_json(const LlmRequest& request);
// choices[0].message.content; throws TransportError on a malformed body.
std::string parse_chat_response(const std::string& body);

class HttpChatClient final : public LlmClient {
 public:
  explicit HttpChatClient(HttpChatConfig config);

  std::string complete(const LlmRequest& request) override;
  std::string model_id() const override { return config_.model; }

 private:
  HttpChatConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

// Deterministic offline stand-in. Scripted responses are served first, in
// FIFO order; after that each prompt maps to a numbered list whose words are
// drawn from a fixed vocabulary by a generator seeded with (seed, prompt).
class MockLlmClient final : public LlmClient {
 public:
  explicit MockLlmClient(std::uint64_t seed = 0, std::size_t list_length = 8);

  void enqueue_response(std::string response);
  // The next `count` calls throw TransportError.
  void fail_next(std::size_t count);

  std::string complete(const LlmRequest& request) override;
  std::string model_id() const override { return "mock"; }

  std::size_t calls() const noexcept { return calls_.load(); }

  // The reply generated for `prompt` when nothing is scripted.
  std::string generated_response(const std::string& prompt) const;

 private:
  std::uint64_t seed_;
  std::size_t list_length_;
  mutable std::mutex mu_;
  std::deque<std::string> scripted_;
  std::size_t failures_left_ = 0;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace ost
