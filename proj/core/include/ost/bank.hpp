#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ost {

struct ClassEntry {
  std::string name;
  std::vector<std::string> spatio_texts;
  std::vector<std::string> temporal_texts_raw;
  // Either empty or one entry per raw temporal text, each equal to
  // condition_on_category(name, raw).
  std::vector<std::string> temporal_texts_conditioned;
  // OSTE files, relative to the bank file's directory unless absolute.
  std::optional<std::string> spatio_emb_ref;
  std::optional<std::string> temporal_emb_ref;
  std::optional<std::string> category_emb_ref;

  friend bool operator==(const ClassEntry&, const ClassEntry&) = default;
};

// Per-class spatio / temporal descriptor texts, serialized as JSON:
//
//   {"version": 1, "n_spatio": 4, "n_temporal": 4, "template_version": "body-v1",
//    "classes": [{"name": ..., "spatio": [...], "temporal_raw": [...],
//                 "temporal_conditioned": [...], "spatio_emb": str|null,
//                 "temporal_emb": str|null, "category_emb": str|null}]}
struct DescriptorBank {
  static constexpr int kVersion = 1;

  std::vector<ClassEntry> classes;
  std::size_t n_spatio = 0;
  std::size_t n_temporal = 0;
  std::string template_version;

  // Throws ValidationError naming the class and field of the first
  // violation: empty class list, duplicate names, wrong list lengths, or a
  // conditioned text that does not match the conditioning template.
  void validate() const;

  const ClassEntry* find(const std::string& name) const noexcept;

  friend bool operator==(const DescriptorBank&, const DescriptorBank&) = default;
};

// Parses and validates. Throws ValidationError on schema problems, IoError
// when the file cannot be read.
DescriptorBank parse_descriptor_bank(const std::string& json_text);
DescriptorBank load_descriptor_bank(const std::filesystem::path& source);

// Deterministic serialization (fixed key order, two-space indent, trailing
// newline) so that identical banks produce identical bytes.
std::string descriptor_bank_to_json(const DescriptorBank& bank);
void save_descriptor_bank(const DescriptorBank& bank, const std::filesystem::path& destination);

}  // namespace ost
