#include "ost/generate.hpp"

#include <atomic>
#include <optional>
#include <set>
#include <thread>

#include "ost/error.hpp"

namespace ost {

GeneratedDescriptors generate_descriptors(const std::string& category, DescriptorKind kind,
                                          std::size_t n, LlmClient& client,
                                          const DescriptorCache* cache,
                                          const GenerationOptions& options) {
  const PromptSpec spec{category, kind, n, options.template_version};
  const std::string prompt = build_prompt(spec);
  const DescriptorCacheKey key{client.model_id(), options.template_version, kind, category, n,
                               options.temperature};

  GeneratedDescriptors out;
  auto finish = [&](std::vector<std::string> items) {
    out.items = std::move(items);
    if (kind == DescriptorKind::temporal) {
      for (const auto& raw : out.items) out.conditioned.push_back(condition_on_category(category, raw));
    }
    return out;
  };

  if (cache) {
    if (auto hit = cache->lookup(key)) {
      out.from_cache = true;
      return finish(std::move(hit->items));
    }
  }

  const LlmRequest request{prompt, options.temperature, client.model_id()};
  std::string last_raw;
  std::optional<TransportError> last_transport;
  for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
    std::string raw;
    try {
      raw = client.complete(request);
    } catch (const TransportError& e) {
      last_transport = e;
      if (attempt < options.max_attempts) {
        std::this_thread::sleep_for(options.backoff_base * (1 << (attempt - 1)));
      }
      continue;
    }
    last_transport.reset();
    last_raw = raw;
    try {
      auto items = parse_llm_list(raw, n);
      if (cache) cache->store(key, raw, items);
      return finish(std::move(items));
    } catch (const ParseError&) {
      // Retry immediately with the same prompt.
    }
  }
  if (last_transport) {
    throw TransportError("\"" + category + "\" (" + std::string(to_string(kind)) + "): " +
                         last_transport->what());
  }
  throw GenerationError("\"" + category + "\" (" + std::string(to_string(kind)) +
                            "): no parseable list of " + std::to_string(n) + " items after " +
                            std::to_string(options.max_attempts) + " attempts",
                        last_raw);
}

DescriptorBank build_bank(const std::vector<std::string>& categories, std::size_t n_spatio,
                          std::size_t n_temporal, LlmClient& client, const DescriptorCache* cache,
                          const GenerationOptions& options) {
  if (categories.empty()) throw ValidationError("no classes");
  std::set<std::string> seen;
  for (const auto& c : categories) {
    if (c.empty()) throw ValidationError("empty category name");
    if (!seen.insert(c).second) throw ValidationError("duplicate category \"" + c + "\"");
  }
  if (n_spatio < 1 || n_temporal < 1) throw ValidationError("descriptor counts must be >= 1");

  std::vector<ClassEntry> entries(categories.size());
  std::vector<std::string> errors(categories.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < categories.size(); i = next++) {
      const std::string& name = categories[i];
      try {
        auto spatio = generate_descriptors(name, DescriptorKind::spatio, n_spatio, client, cache,
                                           options);
        auto temporal = generate_descriptors(name, DescriptorKind::temporal, n_temporal, client,
                                             cache, options);
        ClassEntry& e = entries[i];
        e.name = name;
        e.spatio_texts = std::move(spatio.items);
        e.temporal_texts_raw = std::move(temporal.items);
        e.temporal_texts_conditioned = std::move(temporal.conditioned);
      } catch (const Error& err) {
        errors[i] = err.what();
      }
    }
  };

  const std::size_t workers =
      std::max<std::size_t>(1, std::min(options.max_in_flight, categories.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  std::string failures;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (errors[i].empty()) continue;
    if (!failures.empty()) failures += "; ";
    failures += errors[i];
  }
  if (!failures.empty()) throw GenerationError("descriptor generation failed: " + failures, "");

  DescriptorBank bank;
  bank.classes = std::move(entries);
  bank.n_spatio = n_spatio;
  bank.n_temporal = n_temporal;
  bank.template_version = options.template_version;
  bank.validate();
  return bank;
}

}  // namespace ost
