#include "ost/bank.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ost/error.hpp"
#include "ost/prompts.hpp"

namespace ost {

namespace {

using json = nlohmann::ordered_json;

std::string where(std::size_t index, const std::string& name, const char* field) {
  std::string s = "classes[" + std::to_string(index) + "]";
  if (!name.empty()) s += " (\"" + name + "\")";
  return s + "." + field;
}

std::vector<std::string> string_list(const json& obj, const char* key, const std::string& loc,
                                     bool required = true) {
  if (!obj.contains(key)) {
    if (!required) return {};
    throw ValidationError(loc + ": missing");
  }
  const json& v = obj.at(key);
  if (!v.is_array()) throw ValidationError(loc + ": expected array of strings");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& item : v) {
    if (!item.is_string()) throw ValidationError(loc + ": expected array of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::optional<std::string> optional_ref(const json& obj, const char* key, const std::string& loc) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (!obj.at(key).is_string()) throw ValidationError(loc + ": expected string or null");
  return obj.at(key).get<std::string>();
}

std::size_t count_field(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ValidationError(std::string(key) + ": missing");
  const json& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    throw ValidationError(std::string(key) + ": expected positive integer");
  }
  return static_cast<std::size_t>(v.get<long long>());
}

json ref_json(const std::optional<std::string>& ref) {
  return ref ? json(*ref) : json(nullptr);
}

}  // namespace

void DescriptorBank::validate() const {
  if (classes.empty()) throw ValidationError("no classes");
  if (n_spatio < 1) throw ValidationError("n_spatio must be >= 1");
  if (n_temporal < 1) throw ValidationError("n_temporal must be >= 1");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const ClassEntry& c = classes[i];
    if (c.name.empty()) throw ValidationError(where(i, c.name, "name") + ": empty");
    if (!seen.insert(c.name).second) {
      throw ValidationError(where(i, c.name, "name") + ": duplicate class name");
    }
    if (c.spatio_texts.size() != n_spatio) {
      throw ValidationError(where(i, c.name, "spatio") + ": has " +
                            std::to_string(c.spatio_texts.size()) + " texts, expected " +
                            std::to_string(n_spatio));
    }
    if (c.temporal_texts_raw.size() != n_temporal) {
      throw ValidationError(where(i, c.name, "temporal_raw") + ": has " +
                            std::to_string(c.temporal_texts_raw.size()) +
                            " texts, expected " + std::to_string(n_temporal));
    }
    if (!c.temporal_texts_conditioned.empty()) {
      if (c.temporal_texts_conditioned.size() != n_temporal) {
        throw ValidationError(where(i, c.name, "temporal_conditioned") + ": has " +
                              std::to_string(c.temporal_texts_conditioned.size()) +
                              " texts, expected " + std::to_string(n_temporal));
      }
      for (std::size_t j = 0; j < n_temporal; ++j) {
        if (c.temporal_texts_conditioned[j] !=
            condition_on_category(c.name, c.temporal_texts_raw[j])) {
          throw ValidationError(where(i, c.name, "temporal_conditioned") + "[" +
                                std::to_string(j) + "]: does not match conditioning template");
        }
      }
    }
  }
}

const ClassEntry* DescriptorBank::find(const std::string& name) const noexcept {
  for (const auto& c : classes)
    if (c.name == name) return &c;
  return nullptr;
}

DescriptorBank parse_descriptor_bank(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("bank is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("bank: expected a JSON object");
  if (!doc.contains("version") || !doc.at("version").is_number_integer() ||
      doc.at("version").get<int>() != DescriptorBank::kVersion) {
    throw ValidationError("version: expected 1");
  }

  DescriptorBank bank;
  bank.n_spatio = count_field(doc, "n_spatio");
  bank.n_temporal = count_field(doc, "n_temporal");
  if (!doc.contains("template_version") || !doc.at("template_version").is_string()) {
    throw ValidationError("template_version: expected string");
  }
  bank.template_version = doc.at("template_version").get<std::string>();
  if (!doc.contains("classes") || !doc.at("classes").is_array()) {
    throw ValidationError("classes: expected array");
  }

  const json& classes = doc.at("classes");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const json& c = classes[i];
    if (!c.is_object()) throw ValidationError(where(i, "", "") + ": expected object");
    ClassEntry e;
    if (!c.contains("name") || !c.at("name").is_string()) {
      throw ValidationError(where(i, "", "name") + ": expected string");
    }
    e.name = c.at("name").get<std::string>();
    e.spatio_texts = string_list(c, "spatio", where(i, e.name, "spatio"));
    e.temporal_texts_raw = string_list(c, "temporal_raw", where(i, e.name, "temporal_raw"));
    e.temporal_texts_conditioned = string_list(
        c, "temporal_conditioned", where(i, e.name, "temporal_conditioned"), false);
    e.spatio_emb_ref = optional_ref(c, "spatio_emb", where(i, e.name, "spatio_emb"));
    e.temporal_emb_ref = optional_ref(c, "temporal_emb", where(i, e.name, "temporal_emb"));
    e.category_emb_ref = optional_ref(c, "category_emb", where(i, e.name, "category_emb"));
    bank.classes.push_back(std::move(e));
  }
  bank.validate();
  return bank;
}

DescriptorBank load_descriptor_bank(const std::filesystem::path& source) {
  std::ifstream in(source);
  if (!in) throw IoError("cannot open " + source.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_descriptor_bank(ss.str());
}

std::string descriptor_bank_to_json(const DescriptorBank& bank) {
  json doc;
  doc["version"] = DescriptorBank::kVersion;
  doc["n_spatio"] = bank.n_spatio;
  doc["n_temporal"] = bank.n_temporal;
  doc["template_version"] = bank.template_version;
  json classes = json::array();
  for (const auto& c : bank.classes) {
    json e;
    e["name"] = c.name;
    e["spatio"] = c.spatio_texts;
    e["temporal_raw"] = c.temporal_texts_raw;
    e["temporal_conditioned"] = c.temporal_texts_conditioned;
    e["spatio_emb"] = ref_json(c.spatio_emb_ref);
    e["temporal_emb"] = ref_json(c.temporal_emb_ref);
    e["category_emb"] = ref_json(c.category_emb_ref);
    classes.push_back(std::move(e));
  }
  doc["classes"] = std::move(classes);
  return doc.dump(2) + "\n";
}

void save_descriptor_bank(const DescriptorBank& bank, const std::filesystem::path& destination) {
  bank.validate();
  const std::string text = descriptor_bank_to_json(bank);
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + destination.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + destination.string());
}

}  // namespace ost
