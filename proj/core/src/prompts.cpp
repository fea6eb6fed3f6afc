#include "ost/prompts.hpp"

#include <cctype>
#include <regex>
#include <sstream>

#include "ost/error.hpp"

namespace ost {

namespace {

void check_spec(const PromptSpec& spec, DescriptorKind expected) {
  if (spec.kind != expected) {
    throw ValidationError("prompt spec kind is " + std::string(to_string(spec.kind)) +
                          ", expected " + std::string(to_string(expected)));
  }
  if (spec.category.empty()) throw ValidationError("prompt spec: empty category");
  if (spec.n < 1) throw ValidationError("prompt spec: n must be >= 1");
  if (spec.template_version != kTemplateBody && spec.template_version != kTemplateSupp) {
    throw ValidationError("unknown template version \"" + spec.template_version + "\"");
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool punctuation_only(std::string_view s) {
  for (char c : s)
    if (!std::ispunct(static_cast<unsigned char>(c))) return false;
  return true;
}

}  // namespace

std::string_view to_string(DescriptorKind kind) noexcept {
  return kind == DescriptorKind::spatio ? "spatio" : "temporal";
}

std::string build_spatio_prompt(const PromptSpec& spec) {
  check_spec(spec, DescriptorKind::spatio);
  const std::string n = std::to_string(spec.n);
  const std::string request = "Please give me a long list of descriptors for action: " +
                              spec.category + ", " + n + " descriptors in total.";
  if (spec.template_version == kTemplateBody) return request;
  return "You are helping build a visual vocabulary for recognizing human actions in video.\n"
         "List what a camera would see in a single still frame of the action: the objects "
         "being handled, tools, clothing, and the surrounding scene. Put concrete objects "
         "first and avoid describing motion.\n" +
         request + "\nAnswer with a numbered list of exactly " + n +
         " short noun phrases, one per line, and nothing else.";
}

std::string build_temporal_prompt(const PromptSpec& spec) {
  check_spec(spec, DescriptorKind::temporal);
  const std::string n = std::to_string(spec.n);
  const std::string request = "Please give me a long list of decompositions of steps for action: " +
                              spec.category + ", " + n + " steps in total.";
  if (spec.template_version == kTemplateBody) return request;
  return "You are helping build a visual vocabulary for recognizing human actions in video.\n"
         "Break the action into the ordered sub-steps a person goes through from start to "
         "finish. Begin every step with a specific action verb and use a different verb for "
         "each step where possible.\n" +
         request + "\nAnswer with a numbered list of exactly " + n +
         " steps, one per line, and nothing else.";
}

std::string build_prompt(const PromptSpec& spec) {
  return spec.kind == DescriptorKind::spatio ? build_spatio_prompt(spec)
                                             : build_temporal_prompt(spec);
}

std::string condition_on_category(std::string_view category, std::string_view raw) {
  if (category.empty() || raw.empty()) {
    throw ValidationError("condition_on_category: empty category or descriptor");
  }
  std::string out = "A video of ";
  out += category;
  out += " usually includes ";
  out += raw;
  return out;
}

std::vector<std::string> parse_llm_list(std::string_view response, std::size_t n) {
  // Numbered "12." / "12)" or bullet "-", "*", "+", "•" followed by whitespace.
  static const std::regex item_re(R"(^\s*(?:\d+[.)]|[-*+]|\xE2\x80\xA2)\s+(.*)$)");
  std::vector<std::string> items;
  std::istringstream in{std::string(response)};
  std::string line;
  while (items.size() < n && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (!std::regex_match(line, m, item_re)) continue;
    const std::string_view text = trim(std::string_view(line).substr(m.position(1)));
    if (text.empty() || punctuation_only(text)) continue;
    items.emplace_back(text);
  }
  if (items.size() < n) {
    throw ParseError("expected " + std::to_string(n) + " list items, found " +
                         std::to_string(items.size()),
                     std::string(response));
  }
  return items;
}

std::string render_numbered_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += std::to_string(i + 1) + ". " + items[i];
    if (i + 1 < items.size()) out += '\n';
  }
  return out;
}

}  // namespace ost
