#include "ost/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "ost/error.hpp"

namespace ost {

void ParamSet::add(std::string name, Matrix values) {
  if (name.empty()) throw ValidationError("parameter name is empty");
  if (find(name)) throw ValidationError("duplicate parameter \"" + name + "\"");
  if (!values.all_finite()) throw ValidationError("parameter \"" + name + "\" has a non-finite value");
  entries_.push_back(Entry{std::move(name), std::move(values)});
}

const Matrix* ParamSet::find(const std::string& name) const noexcept {
  for (const auto& e : entries_)
    if (e.name == name) return &e.values;
  return nullptr;
}

DensityReport mean_pairwise_cosine(const EmbedMatrix& e) {
  const std::size_t n = e.rows();
  if (n < 2) throw ValidationError("semantic density needs at least 2 rows, got " + std::to_string(n));
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = l2_norm(e.row(i));
    if (norms[i] == 0.0) throw DegenerateInputError("zero-norm row " + std::to_string(i));
  }
  std::vector<double> sims;
  sims.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      sims.push_back(std::clamp(dot(e.row(i), e.row(j)) / (norms[i] * norms[j]), -1.0, 1.0));

  DensityReport r;
  r.n_items = n;
  r.mean_pairwise_cosine = pairwise_sum(sims) / static_cast<double>(sims.size());
  r.min = *std::min_element(sims.begin(), sims.end());
  r.max = *std::max_element(sims.begin(), sims.end());
  return r;
}

DensityDelta density_delta(const EmbedMatrix& category_emb, const EmbedMatrix& descriptor_emb) {
  return DensityDelta{mean_pairwise_cosine(category_emb).mean_pairwise_cosine,
                      mean_pairwise_cosine(descriptor_emb).mean_pairwise_cosine};
}

DensityDelta density_delta(const EmbedMatrix& category_emb,
                           std::span<const EmbedMatrix> descriptors_per_class) {
  if (descriptors_per_class.size() != category_emb.rows()) {
    throw DimensionError("density_delta: " + std::to_string(category_emb.rows()) +
                         " categories but " + std::to_string(descriptors_per_class.size()) +
                         " descriptor sets");
  }
  Matrix pooled(descriptors_per_class.size(), category_emb.dim());
  for (std::size_t k = 0; k < descriptors_per_class.size(); ++k) {
    const EmbedMatrix& d = descriptors_per_class[k];
    if (d.dim() != category_emb.dim()) throw DimensionError("density_delta: dim mismatch");
    const auto mean = mean_rows(d.values());
    std::copy(mean.begin(), mean.end(), pooled.row(k).begin());
  }
  return density_delta(category_emb, EmbedMatrix(std::move(pooled)));
}

ParamSet weight_space_ensemble(const ParamSet& pretrained, const ParamSet& finetuned, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError("alpha must be in [0, 1], got " + std::to_string(alpha));
  }
  if (pretrained.size() != finetuned.size()) {
    throw StructuralError("parameter counts differ: " + std::to_string(pretrained.size()) + " vs " +
                          std::to_string(finetuned.size()));
  }
  ParamSet out;
  for (const auto& e : pretrained.entries()) {
    const Matrix* other = finetuned.find(e.name);
    if (!other) throw StructuralError("parameter \"" + e.name + "\" missing from finetuned set");
    if (other->rows() != e.values.rows() || other->cols() != e.values.cols()) {
      throw StructuralError("parameter \"" + e.name + "\" has shape " +
                            std::to_string(e.values.rows()) + "x" + std::to_string(e.values.cols()) +
                            " vs " + std::to_string(other->rows()) + "x" +
                            std::to_string(other->cols()));
    }
    Matrix blended(e.values.rows(), e.values.cols());
    for (std::size_t k = 0; k < blended.size(); ++k) {
      blended.data()[k] = alpha * e.values.data()[k] + (1.0 - alpha) * other->data()[k];
    }
    out.add(e.name, std::move(blended));
  }
  return out;
}

std::string density_report_to_json(const DensityReport& r) {
  nlohmann::ordered_json doc;
  doc["n"] = r.n_items;
  doc["mean"] = r.mean_pairwise_cosine;
  doc["min"] = r.min;
  doc["max"] = r.max;
  return doc.dump(2);
}

}  // namespace ost
