#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "ost/bank.hpp"
#include "ost/descriptor_cache.hpp"
#include "ost/llm_client.hpp"
#include "ost/prompts.hpp"

namespace ost {

struct GenerationOptions {
  std::string template_version{kTemplateBody};
  double temperature = 0.7;
  // Total attempts per list, counting the first.
  int max_attempts = 3;
  // Transport failures back off base, 2*base, 4*base, ...; parse failures
  // retry immediately.
  std::chrono::milliseconds backoff_base{1000};
  // Categories generated concurrently by build_bank.
  std::size_t max_in_flight = 4;
};

struct GeneratedDescriptors {
  std::vector<std::string> items;
  // condition_on_category(category, item) per item; temporal lists only.
  std::vector<std::string> conditioned;
  bool from_cache = false;
};

// Cache hit: returns the stored list without touching the client.
// Miss: prompts the client, parses, retries per `options`, then stores.
// Throws TransportError when the endpoint stays unreachable and
// GenerationError (with the last raw response) on persistent parse failure.
// `cache` may be null.
GeneratedDescriptors generate_descriptors(const std::string& category, DescriptorKind kind,
                                          std::size_t n, LlmClient& client,
                                          const DescriptorCache* cache,
                                          const GenerationOptions& options = {});

// One ClassEntry per category with both descriptor kinds; embedding refs
// stay null. Duplicate or empty names are rejected before any request is
// made. Per-category failures are gathered and reported together in one
// GenerationError, and no bank is returned.
DescriptorBank build_bank(const std::vector<std::string>& categories, std::size_t n_spatio,
                          std::size_t n_temporal, LlmClient& client, const DescriptorCache* cache,
                          const GenerationOptions& options = {});

}  // namespace ost
