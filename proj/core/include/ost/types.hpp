#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ost/matrix.hpp"

namespace ost {

// A T x d (frames) or N x d (descriptors) block of embeddings.
//
// Construction validates: rows >= 1, dim >= 1, all entries finite, and when
// unit_norm is claimed every row norm is within 1e-4 of 1. Immutable
// afterwards, so instances can be shared freely across threads.
class EmbedMatrix {
 public:
  static constexpr double kUnitNormTolerance = 1e-4;

  explicit EmbedMatrix(Matrix values, bool unit_norm = false);

  // Scales every row to unit L2 norm and sets the flag. Throws
  // DegenerateInputError naming the first zero-norm row.
  static EmbedMatrix normalized(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  std::size_t rows() const noexcept { return values_.rows(); }
  std::size_t dim() const noexcept { return values_.cols(); }
  bool unit_norm() const noexcept { return unit_norm_; }
  std::span<const double> row(std::size_t r) const noexcept { return values_.row(r); }

  friend bool operator==(const EmbedMatrix&, const EmbedMatrix&) = default;

 private:
  Matrix values_;
  bool unit_norm_ = false;
};

// Source (mu, length T) and target (nu, length N) probability vectors.
// Every entry is strictly positive and each vector sums to 1 within 1e-9.
class Marginals {
 public:
  static constexpr double kSumTolerance = 1e-9;

  Marginals(std::vector<double> mu, std::vector<double> nu);
  static Marginals uniform(std::size_t t, std::size_t n);

  std::span<const double> mu() const noexcept { return mu_; }
  std::span<const double> nu() const noexcept { return nu_; }

  // Swaps the roles of source and target.
  Marginals transposed() const { return Marginals(nu_, mu_); }

 private:
  std::vector<double> mu_;
  std::vector<double> nu_;
};

enum class SinkhornDomain {
  // Plain scaling iterations on K = exp(-C / lambda).
  kernel,
  // Log-sum-exp stabilized iterations on the dual potentials; needed when
  // lambda is small enough that K or the scalings leave double range.
  log,
};

struct SolverConfig {
  double lambda = 0.1;
  int max_iter = 100;
  double thresh = 1e-2;
  SinkhornDomain domain = SinkhornDomain::kernel;
  // Geometric over-relaxation, a <- a^(1-w) (mu / K b)^w and likewise for
  // b, with w re-estimated from the current plan's second singular value.
  // Same fixed point as the plain iteration; far fewer iterations when the
  // plan is close to a permutation. Off by default.
  bool overrelax = false;

  // Throws ValidationError on lambda <= 0, max_iter < 1 or thresh <= 0.
  void validate() const;
};

struct LossConfig {
  double tau = 0.01;

  void validate() const;
};

}  // namespace ost
