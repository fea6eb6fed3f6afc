#include "ost/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "ost/error.hpp"
#include "ost/random.hpp"

namespace ost {

BatchLogits::BatchLogits(std::size_t k, std::size_t b, std::vector<double> values,
                         LogitDirection direction, double tau)
    : k_(k), b_(b), values_(std::move(values)), direction_(direction), tau_(tau) {
  if (k_ < 1 || b_ < 1) throw ValidationError("batch logits need K >= 1 and B >= 1");
  if (values_.size() != k_ * b_ * b_) {
    throw DimensionError("batch logits: expected " + std::to_string(k_ * b_ * b_) +
                         " values, got " + std::to_string(values_.size()));
  }
  for (double v : values_)
    if (!std::isfinite(v)) throw ValidationError("batch logits contain a non-finite value");
  LossConfig{tau_}.validate();
}

TargetDistribution::TargetDistribution(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.rows() != values_.cols()) {
    throw DimensionError("target distribution must be a non-empty square matrix");
  }
  for (std::size_t i = 0; i < values_.rows(); ++i) {
    double s = 0.0;
    for (double v : values_.row(i)) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw ValidationError("target row " + std::to_string(i) + " has a negative entry");
      }
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw ValidationError("target row " + std::to_string(i) + " sums to " + std::to_string(s));
    }
  }
}

TargetDistribution TargetDistribution::from_labels(std::span<const std::string> labels) {
  const std::size_t b = labels.size();
  Matrix q(b, b, 0.0);
  std::map<std::string, std::size_t> count;
  for (const auto& l : labels) ++count[l];
  for (std::size_t i = 0; i < b; ++i) {
    const double share = 1.0 / static_cast<double>(count[labels[i]]);
    for (std::size_t j = 0; j < b; ++j)
      if (labels[j] == labels[i]) q(i, j) = share;
  }
  return TargetDistribution(std::move(q));
}

namespace {

// s[k][i][j] = softmax_j(S_{k,i,:} / tau), same layout as the logits.
std::vector<double> per_class_softmax(const BatchLogits& l) {
  const std::size_t k = l.classes();
  const std::size_t b = l.batch();
  std::vector<double> s(k * b * b);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < b; ++i) {
      double hi = l(c, i, 0);
      for (std::size_t j = 1; j < b; ++j) hi = std::max(hi, l(c, i, j));
      double z = 0.0;
      for (std::size_t j = 0; j < b; ++j) {
        const double e = std::exp((l(c, i, j) - hi) / l.tau());
        s[(c * b + i) * b + j] = e;
        z += e;
      }
      for (std::size_t j = 0; j < b; ++j) s[(c * b + i) * b + j] /= z;
    }
  }
  return s;
}

Matrix average_over_classes(const std::vector<double>& s, std::size_t k, std::size_t b) {
  Matrix p(b, b, 0.0);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j) p(i, j) += s[(c * b + i) * b + j];
  for (double& v : p.data()) v /= static_cast<double>(k);
  return p;
}

void check_batch(const BatchLogits& l, const TargetDistribution& q) {
  if (l.batch() != q.batch()) {
    throw DimensionError("logits batch " + std::to_string(l.batch()) + " vs target batch " +
                         std::to_string(q.batch()));
  }
}

}  // namespace

Matrix softmax_scores(const BatchLogits& logits) {
  return average_over_classes(per_class_softmax(logits), logits.classes(), logits.batch());
}

double kl_div(std::span<const double> p, std::span<const double> q, KlDirection direction) {
  if (p.size() != q.size()) {
    throw DimensionError("kl_div: lengths " + std::to_string(p.size()) + " and " +
                         std::to_string(q.size()));
  }
  double s = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (direction == KlDirection::target_first) {
      if (q[j] > 0.0) s += q[j] * std::log(q[j] / std::max(p[j], kProbabilityFloor));
    } else {
      if (p[j] > 0.0) s += p[j] * std::log(p[j] / std::max(q[j], kProbabilityFloor));
    }
  }
  return s;
}

double directional_loss(const BatchLogits& logits, const TargetDistribution& q,
                        KlDirection direction) {
  check_batch(logits, q);
  const Matrix p = softmax_scores(logits);
  double total = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) total += kl_div(p.row(i), q.values().row(i), direction);
  return total / static_cast<double>(p.rows());
}

double od_contrastive_loss(const BatchLogits& v2t, const BatchLogits& t2v,
                           const TargetDistribution& q_v2t, const TargetDistribution& q_t2v,
                           KlDirection direction) {
  if (v2t.batch() != t2v.batch()) throw DimensionError("v2t and t2v batch sizes differ");
  return 0.5 * (directional_loss(v2t, q_v2t, direction) + directional_loss(t2v, q_t2v, direction));
}

std::vector<double> loss_grad_logits(const BatchLogits& logits, const TargetDistribution& q) {
  check_batch(logits, q);
  const std::size_t k = logits.classes();
  const std::size_t b = logits.batch();
  const std::vector<double> s = per_class_softmax(logits);
  const Matrix p = average_over_classes(s, k, b);

  // L = (1/B) sum_i sum_j q_ij (log q_ij - log max(p_ij, floor)).
  // dL/dp_ij = -w_ij / B with w = q / p (zero where the floor is active);
  // dp_ij/dS_{k,i,l} = s_kij (delta_jl - s_kil) / (K tau).
  Matrix w(b, b, 0.0);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j)
      if (p(i, j) >= kProbabilityFloor) w(i, j) = q.values()(i, j) / p(i, j);

  const double scale =
      1.0 / (static_cast<double>(b) * static_cast<double>(k) * logits.tau());
  std::vector<double> grad(k * b * b);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < b; ++i) {
      const double* srow = &s[(c * b + i) * b];
      double ws = 0.0;
      for (std::size_t j = 0; j < b; ++j) ws += w(i, j) * srow[j];
      for (std::size_t l = 0; l < b; ++l) {
        grad[(c * b + i) * b + l] = scale * srow[l] * (ws - w(i, l));
      }
    }
  }
  return grad;
}

std::vector<double> loss_grad_finite_difference(const BatchLogits& logits,
                                                const TargetDistribution& q, double h) {
  std::vector<double> grad(logits.values().size());
  std::vector<double> v(logits.values().begin(), logits.values().end());
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    const double orig = v[idx];
    v[idx] = orig + h;
    const double up = directional_loss(
        BatchLogits(logits.classes(), logits.batch(), v, logits.direction(), logits.tau()), q);
    v[idx] = orig - h;
    const double down = directional_loss(
        BatchLogits(logits.classes(), logits.batch(), v, logits.direction(), logits.tau()), q);
    v[idx] = orig;
    grad[idx] = (up - down) / (2.0 * h);
  }
  return grad;
}

GradientCheckReport run_gradient_check(std::size_t batches, std::uint64_t seed, double h) {
  static constexpr double kTaus[] = {1.0, 0.07, 0.01};
  Rng rng(seed);

  GradientCheckReport report;
  for (std::size_t n = 0; n < batches; ++n) {
    const std::size_t k = 1 + rng.below(3);
    const std::size_t b = 1 + rng.below(4);
    const double tau = kTaus[n % 3];
    std::vector<double> values(k * b * b);
    for (double& v : values) v = 2.0 * rng.uniform() - 1.0;
    Matrix qm(b, b);
    for (std::size_t i = 0; i < b; ++i) {
      double z = 0.0;
      for (std::size_t j = 0; j < b; ++j) z += (qm(i, j) = 0.05 + 0.95 * rng.uniform());
      for (std::size_t j = 0; j < b; ++j) qm(i, j) /= z;
    }
    const BatchLogits logits(k, b, std::move(values), LogitDirection::v2t, tau);
    const TargetDistribution q(std::move(qm));
    // The clamp makes the loss non-differentiable near kProbabilityFloor;
    // redraw batches whose stencil could reach it.
    const Matrix p = softmax_scores(logits);
    if (*std::min_element(p.data().begin(), p.data().end()) < kGradientCheckMinProbability) {
      --n;
      continue;
    }
    const auto analytic = loss_grad_logits(logits, q);
    const auto numeric = loss_grad_finite_difference(logits, q, h);
    for (std::size_t idx = 0; idx < analytic.size(); ++idx) {
      const double denom = std::max({std::abs(analytic[idx]), std::abs(numeric[idx]), kGradientErrorFloor});
      report.max_rel_error =
          std::max(report.max_rel_error, std::abs(analytic[idx] - numeric[idx]) / denom);
    }
    ++report.batches;
  }
  return report;
}

}  // namespace ost
