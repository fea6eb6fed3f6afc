#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ost/matcher.hpp"

namespace ost {

struct EvalItem {
  std::string emb;    // OSTE frame embeddings, relative to the manifest dir
  std::string label;  // bank class name
};

// {"bank": path, "items": [{"emb": path, "label": string}]}
struct EvalManifest {
  std::string bank;
  std::vector<EvalItem> items;
};

EvalManifest parse_eval_manifest(const std::string& json_text);
EvalManifest load_eval_manifest(const std::filesystem::path& source);
void save_eval_manifest(const EvalManifest& manifest, const std::filesystem::path& destination);

enum class ScoringMode {
  category,  // cosine with the bare category embedding
  pooled,    // mean of the two pooled descriptor scores
  od,        // fused pooled + transport score
};

std::string_view to_string(ScoringMode mode) noexcept;

struct EvalResult {
  double top1 = 0.0;
  double top5 = 0.0;
  std::map<std::string, double> per_class_top1;
  std::size_t n_items = 0;
};

struct ModeComparison {
  EvalResult category;
  EvalResult pooled;
  EvalResult od;

  const EvalResult& operator[](ScoringMode m) const noexcept;
};

struct EvalOptions {
  MatchConfig match;
  // Worker threads over items; results are reduced in item order.
  std::size_t jobs = 1;
};

// Classifies every manifest item against the bank and scores all three
// modes from the same breakdowns. Top-5 counts the label among the five
// highest scores (all of them when there are fewer than five classes);
// ties rank the lower class index first. Relative paths resolve against
// `base_dir`. Any unreadable reference aborts with the item index.
// Throws ConfigError when a class has no category embedding.
ModeComparison evaluate_modes(const EvalManifest& manifest, const std::filesystem::path& base_dir,
                              const EvalOptions& options = {});

// Only the category mode needs category embeddings.
EvalResult zero_shot_eval(const EvalManifest& manifest, const std::filesystem::path& base_dir,
                          const EvalOptions& options = {}, ScoringMode mode = ScoringMode::od);

std::string eval_result_to_json(const EvalResult& r);
std::string mode_comparison_to_json(const ModeComparison& c);

}  // namespace ost
