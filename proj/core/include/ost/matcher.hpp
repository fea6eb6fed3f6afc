#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ost/bank.hpp"
#include "ost/sinkhorn.hpp"
#include "ost/types.hpp"

namespace ost {

// Per-class similarity scores. Every component lies in [-1, 1] and `fused`
// is the plain mean of the four descriptor scores.
struct ScoreBreakdown {
  std::string class_name;
  double spatio_pool = 0.0;
  double temporal_pool = 0.0;
  double spatio_ot = 0.0;
  double temporal_ot = 0.0;
  double fused = 0.0;
  // Category-name baseline, present when the class has a category embedding.
  std::optional<double> category;
};

struct ClassLogits {
  std::vector<ScoreBreakdown> scores;
  // Index of the largest fused score, lowest index on ties.
  std::size_t argmax_index = 0;
};

// Embeddings backing one bank class.
struct ClassEmbeddings {
  std::string name;
  EmbedMatrix spatio;
  EmbedMatrix temporal;
  std::optional<EmbedMatrix> category;
};

struct MatchConfig {
  SolverConfig solver;
  // Append the category embedding as one extra row before pooling (OT
  // path unaffected). Requires ClassEmbeddings::category.
  bool include_category_in_pool = false;
};

// cos(mean of frames, cat). `cat` must be a single row.
double category_score(const EmbedMatrix& frames, const EmbedMatrix& cat);

// cos(mean of frames, mean of descriptors).
double pooled_score(const EmbedMatrix& frames, const EmbedMatrix& descriptors);

// sum_ij P_ij cos(v_i, d_j). The plan must be T x N with unit mass.
double ot_score(const EmbedMatrix& frames, const EmbedMatrix& descriptors, const Matrix& plan);

double od_fused_logit(double spatio_pool, double temporal_pool, double spatio_ot,
                      double temporal_ot);

// Builds both cost matrices, solves both transport problems with uniform
// marginals, and fills every score. Errors are rethrown tagged with the
// class name.
ScoreBreakdown score_video(const EmbedMatrix& frames, const ClassEmbeddings& entry,
                           const MatchConfig& cfg = {});

// Text-to-video direction: descriptors act as the source rows and frames
// as the targets (transposed cost, swapped marginals, fresh solve).
ScoreBreakdown score_text_to_video(const ClassEmbeddings& entry, const EmbedMatrix& frames,
                                   const MatchConfig& cfg = {});

// Scores every class in order; argmax breaks ties toward the lower index.
ClassLogits classify(const EmbedMatrix& frames, std::span<const ClassEmbeddings> classes,
                     const MatchConfig& cfg = {});

// Indices of the k largest values, descending; equal values keep index
// order. k is clipped to the number of values.
std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k);

// Loads the OSTE files referenced by every bank class. Relative paths are
// resolved against `base_dir`. Throws ConfigError naming the first class
// with a missing spatio or temporal reference.
std::vector<ClassEmbeddings> load_class_embeddings(const DescriptorBank& bank,
                                                   const std::filesystem::path& base_dir);

// JSON for one classified video:
// {"video", "top1", "top5", "scores": [{"class", "spatio_pool", ...}]}
std::string class_logits_to_json(const std::string& video, const ClassLogits& logits);

}  // namespace ost
