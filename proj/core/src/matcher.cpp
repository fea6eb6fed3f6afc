#include "ost/matcher.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"
#include "ost/embed_io.hpp"
#include "ost/error.hpp"

namespace ost {

namespace {

void check_dims(const EmbedMatrix& a, const EmbedMatrix& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("embedding dims differ: " + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
  }
}

double pooled_cosine(const Matrix& a, const Matrix& b) {
  const auto pa = mean_rows(a);
  const auto pb = mean_rows(b);
  if (l2_norm(pa) == 0.0 || l2_norm(pb) == 0.0) {
    throw DegenerateInputError("mean-pooled embedding has zero norm");
  }
  return cosine(pa, pb);
}

Matrix append_row(const Matrix& m, std::span<const double> row) {
  Matrix out(m.rows() + 1, m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    std::copy(m.row(r).begin(), m.row(r).end(), out.row(r).begin());
  std::copy(row.begin(), row.end(), out.row(m.rows()).begin());
  return out;
}

double descriptor_pool(const EmbedMatrix& frames, const EmbedMatrix& descriptors,
                       const ClassEmbeddings& entry, const MatchConfig& cfg) {
  if (!cfg.include_category_in_pool) return pooled_score(frames, descriptors);
  if (!entry.category) {
    throw ConfigError("class \"" + entry.name +
                      "\": include_category_in_pool needs a category embedding");
  }
  check_dims(descriptors, *entry.category);
  return pooled_cosine(frames.values(), append_row(descriptors.values(), entry.category->row(0)));
}

// Solves the transport problem source x target and returns the plan-weighted
// cosine.
double ot_between(const EmbedMatrix& source, const EmbedMatrix& target, const SolverConfig& cfg) {
  const Matrix sim = cosine_matrix(source, target);
  Matrix c = sim;
  for (double& v : c.data()) v = 1.0 - v;
  const TransportPlan plan =
      sinkhorn_solve(CostMatrix(std::move(c)), Marginals::uniform(sim.rows(), sim.cols()), cfg);
  double s = 0.0;
  for (std::size_t k = 0; k < sim.size(); ++k) s += plan.values.data()[k] * sim.data()[k];
  return s;
}

template <class E>
[[noreturn]] void rethrow_tagged(const E& e, const std::string& name) {
  throw E(std::string("class \"") + name + "\": " + e.what());
}

template <class F>
ScoreBreakdown tagged(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const DimensionError& e) {
    rethrow_tagged(e, name);
  } catch (const ValidationError& e) {
    rethrow_tagged(e, name);
  } catch (const DegenerateInputError& e) {
    rethrow_tagged(e, name);
  } catch (const NumericError& e) {
    rethrow_tagged(e, name);
  }
}

}  // namespace

double category_score(const EmbedMatrix& frames, const EmbedMatrix& cat) {
  check_dims(frames, cat);
  if (cat.rows() != 1) {
    throw DimensionError("category embedding must have one row, got " + std::to_string(cat.rows()));
  }
  return pooled_cosine(frames.values(), cat.values());
}

double pooled_score(const EmbedMatrix& frames, const EmbedMatrix& descriptors) {
  check_dims(frames, descriptors);
  return pooled_cosine(frames.values(), descriptors.values());
}

double ot_score(const EmbedMatrix& frames, const EmbedMatrix& descriptors, const Matrix& plan) {
  if (plan.rows() != frames.rows() || plan.cols() != descriptors.rows()) {
    throw DimensionError("plan is " + std::to_string(plan.rows()) + "x" +
                         std::to_string(plan.cols()) + ", expected " +
                         std::to_string(frames.rows()) + "x" + std::to_string(descriptors.rows()));
  }
  const Matrix sim = cosine_matrix(frames, descriptors);
  double s = 0.0;
  for (std::size_t k = 0; k < sim.size(); ++k) s += plan.data()[k] * sim.data()[k];
  return s;
}

double od_fused_logit(double spatio_pool, double temporal_pool, double spatio_ot,
                      double temporal_ot) {
  return (spatio_pool + temporal_pool + spatio_ot + temporal_ot) / 4.0;
}

ScoreBreakdown score_video(const EmbedMatrix& frames, const ClassEmbeddings& entry,
                           const MatchConfig& cfg) {
  return tagged(entry.name, [&] {
    ScoreBreakdown s;
    s.class_name = entry.name;
    s.spatio_pool = descriptor_pool(frames, entry.spatio, entry, cfg);
    s.temporal_pool = descriptor_pool(frames, entry.temporal, entry, cfg);
    s.spatio_ot = ot_between(frames, entry.spatio, cfg.solver);
    s.temporal_ot = ot_between(frames, entry.temporal, cfg.solver);
    s.fused = od_fused_logit(s.spatio_pool, s.temporal_pool, s.spatio_ot, s.temporal_ot);
    if (entry.category) s.category = category_score(frames, *entry.category);
    return s;
  });
}

ScoreBreakdown score_text_to_video(const ClassEmbeddings& entry, const EmbedMatrix& frames,
                                   const MatchConfig& cfg) {
  return tagged(entry.name, [&] {
    ScoreBreakdown s;
    s.class_name = entry.name;
    // Pooled cosine is symmetric in its arguments.
    s.spatio_pool = descriptor_pool(frames, entry.spatio, entry, cfg);
    s.temporal_pool = descriptor_pool(frames, entry.temporal, entry, cfg);
    s.spatio_ot = ot_between(entry.spatio, frames, cfg.solver);
    s.temporal_ot = ot_between(entry.temporal, frames, cfg.solver);
    s.fused = od_fused_logit(s.spatio_pool, s.temporal_pool, s.spatio_ot, s.temporal_ot);
    if (entry.category) s.category = category_score(frames, *entry.category);
    return s;
  });
}

ClassLogits classify(const EmbedMatrix& frames, std::span<const ClassEmbeddings> classes,
                     const MatchConfig& cfg) {
  if (classes.empty()) throw ConfigError("classify: no classes");
  ClassLogits out;
  out.scores.reserve(classes.size());
  for (const auto& c : classes) out.scores.push_back(score_video(frames, c, cfg));
  for (std::size_t k = 1; k < out.scores.size(); ++k) {
    if (out.scores[k].fused > out.scores[out.argmax_index].fused) out.argmax_index = k;
  }
  return out;
}

std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

std::vector<ClassEmbeddings> load_class_embeddings(const DescriptorBank& bank,
                                                   const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& ref) {
    std::filesystem::path p(ref);
    return p.is_absolute() ? p : base_dir / p;
  };
  std::vector<ClassEmbeddings> out;
  out.reserve(bank.classes.size());
  for (const auto& c : bank.classes) {
    if (!c.spatio_emb_ref || !c.temporal_emb_ref) {
      throw ConfigError("class \"" + c.name + "\" has no " +
                        (c.spatio_emb_ref ? "temporal" : "spatio") + " embeddings");
    }
    ClassEmbeddings e{c.name, read_embed_matrix(resolve(*c.spatio_emb_ref)),
                      read_embed_matrix(resolve(*c.temporal_emb_ref)), std::nullopt};
    if (c.category_emb_ref) e.category = read_embed_matrix(resolve(*c.category_emb_ref));
    out.push_back(std::move(e));
  }
  return out;
}

std::string class_logits_to_json(const std::string& video, const ClassLogits& logits) {
  using json = nlohmann::ordered_json;
  std::vector<double> fused;
  fused.reserve(logits.scores.size());
  for (const auto& s : logits.scores) fused.push_back(s.fused);

  json doc;
  doc["video"] = video;
  doc["top1"] = logits.scores.at(logits.argmax_index).class_name;
  json top5 = json::array();
  for (std::size_t k : top_k_indices(fused, 5)) top5.push_back(logits.scores[k].class_name);
  doc["top5"] = std::move(top5);
  json scores = json::array();
  for (const auto& s : logits.scores) {
    json e;
    e["class"] = s.class_name;
    e["spatio_pool"] = s.spatio_pool;
    e["temporal_pool"] = s.temporal_pool;
    e["spatio_ot"] = s.spatio_ot;
    e["temporal_ot"] = s.temporal_ot;
    e["fused"] = s.fused;
    scores.push_back(std::move(e));
  }
  doc["scores"] = std::move(scores);
  return doc.dump(2);
}

}  // namespace ost
