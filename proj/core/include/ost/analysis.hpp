#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ost/matrix.hpp"
#include "ost/types.hpp"

namespace ost {

// Named parameter tensors in insertion order. 1-D parameters are stored as
// rows x 1.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Matrix values;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  // Throws ValidationError on a duplicate name, an empty name or a
  // non-finite value.
  void add(std::string name, Matrix values);

  const Matrix* find(const std::string& name) const noexcept;
  std::span<const Entry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<Entry> entries_;
};

struct DensityReport {
  std::size_t n_items = 0;
  double mean_pairwise_cosine = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Mean cosine over the C(rows, 2) unordered pairs of distinct rows, summed
// in a fixed tree order. Throws ValidationError when rows < 2 and
// DegenerateInputError on a zero-norm row.
DensityReport mean_pairwise_cosine(const EmbedMatrix& e);

struct DensityDelta {
  double before = 0.0;  // density of the category embeddings
  double after = 0.0;   // density of one pooled descriptor embedding per class
};

// `descriptors_per_class[k]` holds the descriptor rows of class k; each is
// mean-pooled to a single row before measuring density.
DensityDelta density_delta(const EmbedMatrix& category_emb,
                           std::span<const EmbedMatrix> descriptors_per_class);

// Convenience overload: descriptor_emb is already one row per class.
DensityDelta density_delta(const EmbedMatrix& category_emb, const EmbedMatrix& descriptor_emb);

// out = alpha * pretrained + (1 - alpha) * finetuned, entry by entry, in
// the pretrained set's order. Throws StructuralError naming the first
// parameter whose name or shape differs, ValidationError for alpha outside
// [0, 1].
ParamSet weight_space_ensemble(const ParamSet& pretrained, const ParamSet& finetuned, double alpha);

std::string density_report_to_json(const DensityReport& r);

}  // namespace ost
