#include "ost/evaluate.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <exception>
#include <thread>

#include "json.hpp"
#include "ost/embed_io.hpp"
#include "ost/error.hpp"

namespace ost {

namespace {

using json = nlohmann::ordered_json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& ref) {
  std::filesystem::path p(ref);
  return p.is_absolute() ? p : base / p;
}

// Per-item outcome for every mode: {top1 hit, top5 hit}.
struct ItemOutcome {
  bool top1[3] = {false, false, false};
  bool top5[3] = {false, false, false};
};

double mode_score(const ScoreBreakdown& s, ScoringMode mode) {
  switch (mode) {
    case ScoringMode::category:
      if (!s.category) throw ConfigError("class \"" + s.class_name + "\" has no category embedding");
      return *s.category;
    case ScoringMode::pooled:
      return 0.5 * (s.spatio_pool + s.temporal_pool);
    case ScoringMode::od:
      return s.fused;
  }
  return s.fused;
}

template <class E>
[[noreturn]] void rethrow_for_item(const E& e, std::size_t index) {
  throw E("item " + std::to_string(index) + ": " + e.what());
}

EvalResult reduce(const EvalManifest& manifest, const std::vector<ItemOutcome>& outcomes,
                  int mode) {
  EvalResult r;
  r.n_items = outcomes.size();
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;  // hits, total
  std::size_t hit1 = 0;
  std::size_t hit5 = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    hit1 += outcomes[i].top1[mode];
    hit5 += outcomes[i].top5[mode];
    auto& pc = per_class[manifest.items[i].label];
    pc.first += outcomes[i].top1[mode];
    pc.second += 1;
  }
  const auto n = static_cast<double>(outcomes.size());
  r.top1 = static_cast<double>(hit1) / n;
  r.top5 = static_cast<double>(hit5) / n;
  for (const auto& [name, counts] : per_class) {
    r.per_class_top1[name] = static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  return r;
}

}  // namespace

std::string_view to_string(ScoringMode mode) noexcept {
  switch (mode) {
    case ScoringMode::category: return "category";
    case ScoringMode::pooled: return "pooled";
    case ScoringMode::od: return "od";
  }
  return "od";
}

const EvalResult& ModeComparison::operator[](ScoringMode m) const noexcept {
  switch (m) {
    case ScoringMode::category: return category;
    case ScoringMode::pooled: return pooled;
    case ScoringMode::od: return od;
  }
  return od;
}

EvalManifest parse_eval_manifest(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("manifest is not valid JSON: ") + e.what());
  }
  EvalManifest m;
  if (!doc.is_object() || !doc.contains("bank") || !doc.at("bank").is_string()) {
    throw ValidationError("manifest: \"bank\" must be a string");
  }
  m.bank = doc.at("bank").get<std::string>();
  if (!doc.contains("items") || !doc.at("items").is_array()) {
    throw ValidationError("manifest: \"items\" must be an array");
  }
  for (std::size_t i = 0; i < doc.at("items").size(); ++i) {
    const json& it = doc.at("items")[i];
    if (!it.is_object() || !it.contains("emb") || !it.at("emb").is_string() ||
        !it.contains("label") || !it.at("label").is_string()) {
      throw ValidationError("manifest items[" + std::to_string(i) +
                            "]: expected {\"emb\": string, \"label\": string}");
    }
    m.items.push_back({it.at("emb").get<std::string>(), it.at("label").get<std::string>()});
  }
  if (m.items.empty()) throw ValidationError("manifest has no items");
  return m;
}

EvalManifest load_eval_manifest(const std::filesystem::path& source) {
  std::ifstream in(source);
  if (!in) throw IoError("cannot open " + source.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_eval_manifest(ss.str());
}

void save_eval_manifest(const EvalManifest& manifest, const std::filesystem::path& destination) {
  json doc;
  doc["bank"] = manifest.bank;
  json items = json::array();
  for (const auto& it : manifest.items) items.push_back(json{{"emb", it.emb}, {"label", it.label}});
  doc["items"] = std::move(items);
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + destination.string());
  out << doc.dump(2) << '\n';
  if (!out.flush()) throw IoError("write failed: " + destination.string());
}

namespace {

// Category-only scoring is skipped unless requested, so banks without
// category embeddings still evaluate under the descriptor modes.
ModeComparison evaluate_impl(const EvalManifest& manifest, const std::filesystem::path& base_dir,
                             const EvalOptions& options, bool with_category) {
  if (manifest.items.empty()) throw ValidationError("manifest has no items");
  const auto bank_path = resolve(base_dir, manifest.bank);
  const DescriptorBank bank = load_descriptor_bank(bank_path);
  const auto classes = load_class_embeddings(bank, bank_path.parent_path());
  if (with_category) {
    for (const auto& c : classes) {
      if (!c.category) throw ConfigError("class \"" + c.name + "\" has no category embedding");
    }
  }
  const int first_mode = with_category ? 0 : 1;

  std::vector<std::size_t> label_index(manifest.items.size());
  for (std::size_t i = 0; i < manifest.items.size(); ++i) {
    bool found = false;
    for (std::size_t k = 0; k < classes.size(); ++k) {
      if (classes[k].name == manifest.items[i].label) {
        label_index[i] = k;
        found = true;
        break;
      }
    }
    if (!found) {
      throw ValidationError("item " + std::to_string(i) + ": label \"" + manifest.items[i].label +
                            "\" is not a bank class");
    }
  }

  // Fail fast, in item order, on unreadable references.
  std::vector<EmbedMatrix> frames;
  frames.reserve(manifest.items.size());
  for (std::size_t i = 0; i < manifest.items.size(); ++i) {
    try {
      frames.push_back(read_embed_matrix(resolve(base_dir, manifest.items[i].emb)));
    } catch (const IoError& e) {
      rethrow_for_item(e, i);
    } catch (const FormatError& e) {
      rethrow_for_item(e, i);
    }
  }

  std::vector<ItemOutcome> outcomes(manifest.items.size());
  std::vector<std::exception_ptr> errors(manifest.items.size());
  auto run_range = [&](std::size_t begin, std::size_t end) {
    std::vector<double> scores(classes.size());
    for (std::size_t i = begin; i < end; ++i) {
      try {
        const ClassLogits logits = classify(frames[i], classes, options.match);
        for (int m = first_mode; m < 3; ++m) {
          for (std::size_t k = 0; k < classes.size(); ++k) {
            scores[k] = mode_score(logits.scores[k], static_cast<ScoringMode>(m));
          }
          const auto top = top_k_indices(scores, 5);
          outcomes[i].top1[m] = top.front() == label_index[i];
          for (std::size_t k : top) outcomes[i].top5[m] = outcomes[i].top5[m] || k == label_index[i];
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, outcomes.size()));
  if (jobs == 1) {
    run_range(0, outcomes.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (outcomes.size() + jobs - 1) / jobs;
    for (std::size_t begin = 0; begin < outcomes.size(); begin += chunk) {
      pool.emplace_back(run_range, begin, std::min(outcomes.size(), begin + chunk));
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const ConfigError& e) {
      rethrow_for_item(e, i);
    } catch (const NumericError& e) {
      rethrow_for_item(e, i);
    } catch (const DimensionError& e) {
      rethrow_for_item(e, i);
    } catch (const ValidationError& e) {
      rethrow_for_item(e, i);
    } catch (const DegenerateInputError& e) {
      rethrow_for_item(e, i);
    }
    std::rethrow_exception(errors[i]);
  }

  return ModeComparison{reduce(manifest, outcomes, 0), reduce(manifest, outcomes, 1),
                        reduce(manifest, outcomes, 2)};
}

}  // namespace

ModeComparison evaluate_modes(const EvalManifest& manifest, const std::filesystem::path& base_dir,
                              const EvalOptions& options) {
  return evaluate_impl(manifest, base_dir, options, true);
}

EvalResult zero_shot_eval(const EvalManifest& manifest, const std::filesystem::path& base_dir,
                          const EvalOptions& options, ScoringMode mode) {
  return evaluate_impl(manifest, base_dir, options, mode == ScoringMode::category)[mode];
}

namespace {

json result_json(const EvalResult& r) {
  json doc;
  doc["top1"] = r.top1;
  doc["top5"] = r.top5;
  doc["n_items"] = r.n_items;
  json pc = json::object();
  for (const auto& [name, acc] : r.per_class_top1) pc[name] = acc;
  doc["per_class_top1"] = std::move(pc);
  return doc;
}

}  // namespace

std::string eval_result_to_json(const EvalResult& r) { return result_json(r).dump(2); }

std::string mode_comparison_to_json(const ModeComparison& c) {
  json doc;
  doc["category"] = result_json(c.category);
  doc["pooled"] = result_json(c.pooled);
  doc["od"] = result_json(c.od);
  return doc.dump(2);
}

}  // namespace ost
