#include "ost/types.hpp"

#include <cmath>
#include <string>

#include "ost/error.hpp"

namespace ost {

EmbedMatrix::EmbedMatrix(Matrix values, bool unit_norm)
    : values_(std::move(values)), unit_norm_(unit_norm) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw ValidationError("embedding matrix must have rows >= 1 and dim >= 1, got " +
                          std::to_string(values_.rows()) + "x" +
                          std::to_string(values_.cols()));
  }
  for (std::size_t r = 0; r < values_.rows(); ++r) {
    for (double v : values_.row(r)) {
      if (!std::isfinite(v)) {
        throw ValidationError("embedding row " + std::to_string(r) + " has a non-finite entry");
      }
    }
    if (unit_norm_) {
      const double n = l2_norm(values_.row(r));
      if (std::abs(n - 1.0) > kUnitNormTolerance) {
        throw ValidationError("embedding row " + std::to_string(r) +
                              " flagged unit_norm but has norm " + std::to_string(n));
      }
    }
  }
}

EmbedMatrix EmbedMatrix::normalized(Matrix values) {
  for (std::size_t r = 0; r < values.rows(); ++r) {
    auto row = values.row(r);
    const double n = l2_norm(row);
    if (n == 0.0 || !std::isfinite(n)) {
      throw DegenerateInputError("cannot normalize zero-norm row " + std::to_string(r));
    }
    for (double& v : row) v /= n;
  }
  return EmbedMatrix(std::move(values), true);
}

namespace {

void check_probability_vector(const std::vector<double>& p, const char* name) {
  if (p.empty()) throw ValidationError(std::string(name) + " is empty");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0) || !std::isfinite(p[i])) {
      throw ValidationError(std::string(name) + "[" + std::to_string(i) +
                            "] must be finite and > 0");
    }
    s += p[i];
  }
  if (std::abs(s - 1.0) > Marginals::kSumTolerance) {
    throw ValidationError(std::string(name) + " sums to " + std::to_string(s) + ", not 1");
  }
}

}  // namespace

Marginals::Marginals(std::vector<double> mu, std::vector<double> nu)
    : mu_(std::move(mu)), nu_(std::move(nu)) {
  check_probability_vector(mu_, "mu");
  check_probability_vector(nu_, "nu");
}

Marginals Marginals::uniform(std::size_t t, std::size_t n) {
  return Marginals(std::vector<double>(t, 1.0 / static_cast<double>(t)),
                   std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

void SolverConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("lambda must be > 0, got " + std::to_string(lambda));
  }
  if (max_iter < 1) throw ValidationError("max_iter must be >= 1");
  if (!(thresh > 0.0)) throw ValidationError("thresh must be > 0");
}

void LossConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ValidationError("tau must be > 0, got " + std::to_string(tau));
  }
}

}  // namespace ost
