#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ost/matrix.hpp"
#include "ost/types.hpp"

namespace ost {

enum class LogitDirection { v2t, t2v };

// K x B x B logits: value(k, i, j) is the score between sample i and the
// class-k text of sample j. The softmax runs over j.
class BatchLogits {
 public:
  BatchLogits(std::size_t k, std::size_t b, std::vector<double> values,
              LogitDirection direction = LogitDirection::v2t, double tau = 0.01);

  std::size_t classes() const noexcept { return k_; }
  std::size_t batch() const noexcept { return b_; }
  double tau() const noexcept { return tau_; }
  LogitDirection direction() const noexcept { return direction_; }

  double operator()(std::size_t k, std::size_t i, std::size_t j) const noexcept {
    return values_[(k * b_ + i) * b_ + j];
  }
  double& at(std::size_t k, std::size_t i, std::size_t j) noexcept {
    return values_[(k * b_ + i) * b_ + j];
  }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t k_;
  std::size_t b_;
  std::vector<double> values_;
  LogitDirection direction_;
  double tau_;
};

// B x B row-stochastic target; rows sum to 1 within 1e-9, entries >= 0.
class TargetDistribution {
 public:
  explicit TargetDistribution(Matrix values);

  // q_i(j) = 1 / |{j : label_j == label_i}| on positives, 0 elsewhere.
  static TargetDistribution from_labels(std::span<const std::string> labels);

  const Matrix& values() const noexcept { return values_; }
  std::size_t batch() const noexcept { return values_.rows(); }

 private:
  Matrix values_;
};

enum class KlDirection {
  // sum q log(q / p): drives the model distribution p toward the target q.
  target_first,
  // sum p log(p / q), the literal argument order; for ablations.
  model_first,
};

// p_i(j) = (1/K) sum_k softmax_j(S_{k,i,:} / tau). Rows sum to 1.
Matrix softmax_scores(const BatchLogits& logits);

// Model probabilities are clamped below at this before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

// KL divergence between target q and model p, 0 log 0 = 0. Throws
// DimensionError on length mismatch.
double kl_div(std::span<const double> p, std::span<const double> q,
              KlDirection direction = KlDirection::target_first);

// Mean over batch rows of kl_div(p_i, q_i) for one direction.
double directional_loss(const BatchLogits& logits, const TargetDistribution& q,
                        KlDirection direction = KlDirection::target_first);

// 1/2 [directional_loss(v2t) + directional_loss(t2v)].
double od_contrastive_loss(const BatchLogits& v2t, const BatchLogits& t2v,
                           const TargetDistribution& q_v2t, const TargetDistribution& q_t2v,
                           KlDirection direction = KlDirection::target_first);

// Analytic d directional_loss / d S_{k,i,j} (target_first KL), as a K x B x
// B tensor in the same layout as BatchLogits. The transport plans behind
// the logits are treated as constants.
std::vector<double> loss_grad_logits(const BatchLogits& logits, const TargetDistribution& q);

// Central finite-difference gradient of directional_loss, step h.
std::vector<double> loss_grad_finite_difference(const BatchLogits& logits,
                                                const TargetDistribution& q, double h = 1e-4);

inline constexpr double kGradientErrorFloor = 1e-6;
// Batches with any model probability below this are redrawn.
inline constexpr double kGradientCheckMinProbability = 1e-9;

struct GradientCheckReport {
  std::size_t batches = 0;
  double max_rel_error = 0.0;
};

// Compares loss_grad_logits with central differences over `batches` random
// problems (K <= 3, B <= 4, tau cycling through {1, 0.07, 0.01}). The
// relative error is |analytic - numeric| / max(|analytic|, |numeric|,
// kGradientErrorFloor); the floor sits above the rounding noise of the
// central difference so vanishing entries are compared absolutely.
GradientCheckReport run_gradient_check(std::size_t batches, std::uint64_t seed, double h = 1e-4);

}  // namespace ost
