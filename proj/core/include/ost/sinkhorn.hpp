#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ost/matrix.hpp"
#include "ost/types.hpp"

namespace ost {

// Pairwise cost C[i][j] = 1 - cos(v_i, d_j). Entries are finite and lie in
// [0, 2]; construction from a raw matrix validates both.
class CostMatrix {
 public:
  explicit CostMatrix(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  std::size_t rows() const noexcept { return values_.rows(); }
  std::size_t cols() const noexcept { return values_.cols(); }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_(i, j); }

  CostMatrix transposed() const { return CostMatrix(values_.transposed()); }

 private:
  Matrix values_;
};

// Throws DimensionError when the embedding dims differ and
// DegenerateInputError naming the first zero-norm row.
CostMatrix build_cost_matrix(const EmbedMatrix& frames, const EmbedMatrix& descriptors);

// Pairwise cosine similarities, the complement of build_cost_matrix.
Matrix cosine_matrix(const EmbedMatrix& a, const EmbedMatrix& b);

struct SinkhornState {
  // K = exp(-C / lambda). In log-domain mode small entries may underflow to
  // zero here even though the solve itself stays exact.
  Matrix gibbs_kernel;
  // Row and column scalings, P = diag(a) K diag(b). log_a / log_b are kept
  // alongside because a and b overflow double range for small lambda.
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> log_a;
  std::vector<double> log_b;
  int iterations_run = 0;
  double final_err = 0.0;
  bool converged = false;
  SinkhornDomain domain = SinkhornDomain::kernel;
  // Relaxation weight in use at exit; 1 unless cfg.overrelax.
  double omega = 1.0;
};

struct TransportPlan {
  Matrix values;
  Marginals marginals;
  double lambda = 0.0;
  SinkhornState state;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
};

// Entropy-regularized optimal transport by Sinkhorn scaling.
//
// Starting from b = 1 (or `initial_b` when given), alternates
//   a <- mu / (K b),   b <- nu / (K^T a)
// and stops when the mean absolute change of a between successive
// iterations drops below cfg.thresh, or after cfg.max_iter iterations. In
// log-domain mode the same updates run on the potentials f = lambda log a,
// g = lambda log b, and the stopping test uses the mean absolute change of f.
// With cfg.overrelax the plain updates run for a short warm-up, after which
// each update is blended geometrically (in f, g: linearly) with the previous
// value using w = 2 / (1 + sqrt(1 - eta)), where eta is the squared second
// singular value of the current plan normalized by its own marginals. eta
// is refreshed periodically.
//
// Throws DimensionError on shape mismatch, ValidationError on a bad config
// and NumericError when K b or K^T a underflows (kernel mode), advising a
// larger lambda or the log domain.
TransportPlan sinkhorn_solve(const CostMatrix& cost, const Marginals& marginals,
                             const SolverConfig& cfg,
                             std::optional<std::span<const double>> initial_b = std::nullopt);

// Entropy H(P) = -sum P (log P - 1), with 0 log 0 = 0.
double plan_entropy(const Matrix& plan);

// <P, C> - lambda H(P) = <P, C> + lambda sum P (log P - 1).
// Throws ValidationError on a negative plan entry.
double regularized_objective(const Matrix& plan, const CostMatrix& cost, double lambda);

// Frobenius inner product <P, C>.
double transport_cost(const Matrix& plan, const CostMatrix& cost);

// Squared second singular value of D_r^-1/2 P D_c^-1/2, with r and c the
// plan's own row and column sums: the linear convergence rate of plain
// Sinkhorn near this plan. 0 for a single row or column.
double sinkhorn_rate_estimate(const Matrix& plan);

// Largest |row_sum - mu| and |col_sum - nu| over the plan.
double max_marginal_violation(const Matrix& plan, const Marginals& marginals);

}  // namespace ost
