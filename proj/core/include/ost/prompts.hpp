#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ost {

enum class DescriptorKind { spatio, temporal };

std::string_view to_string(DescriptorKind kind) noexcept;

// Prompt template identifiers recorded in every bank.
inline constexpr std::string_view kTemplateBody = "body-v1";
inline constexpr std::string_view kTemplateSupp = "supp-v1";

struct PromptSpec {
  std::string category;
  DescriptorKind kind = DescriptorKind::spatio;
  std::size_t n = 4;
  std::string template_version{kTemplateBody};
};

// "Please give me a long list of descriptors for action: {category}, {n}
// descriptors in total." for body-v1; supp-v1 wraps the same request in a
// longer instruction that steers toward object-level visual cues.
// Throws ValidationError on an empty category, n == 0, the wrong kind or an
// unknown template version.
std::string build_spatio_prompt(const PromptSpec& spec);

// "Please give me a long list of decompositions of steps for action:
// {category}, {n} steps in total." for body-v1; supp-v1 asks for a
// step-by-step breakdown rich in action verbs.
std::string build_temporal_prompt(const PromptSpec& spec);

// Dispatches on spec.kind.
std::string build_prompt(const PromptSpec& spec);

// "A video of {category} usually includes {raw}". Throws ValidationError
// when either argument is empty.
std::string condition_on_category(std::string_view category, std::string_view raw);

// Extracts the first n items from numbered ("1. ...", "2) ...") or bulleted
// ("- ...", "* ...") lines, trimming surrounding whitespace. Other lines are
// ignored. Throws ParseError (carrying the raw text) when fewer than n
// items are found.
std::vector<std::string> parse_llm_list(std::string_view response, std::size_t n);

// Renders items as a numbered list, one per line; parse_llm_list inverts it
// for non-empty single-line items.
std::string render_numbered_list(const std::vector<std::string>& items);

}  // namespace ost
