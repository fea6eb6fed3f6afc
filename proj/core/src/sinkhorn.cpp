#include "ost/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "ost/error.hpp"

namespace ost {

namespace {

// Below this K b / K^T a is treated as underflowed.
constexpr double kUnderflowFloor = 1e-300;

// Over-relaxation schedule.
constexpr int kRelaxWarmup = 20;
constexpr int kRelaxRefresh = 20;
constexpr double kMaxOmega = 1.999;

double optimal_omega(const Matrix& plan) {
  const double eta = sinkhorn_rate_estimate(plan);
  return std::min(kMaxOmega, 2.0 / (1.0 + std::sqrt(1.0 - eta)));
}

bool refresh_omega(const SolverConfig& cfg, int it) {
  return cfg.overrelax && it >= kRelaxWarmup && it % kRelaxRefresh == 0;
}

void check_shapes(const CostMatrix& cost, const Marginals& m) {
  if (cost.rows() != m.mu().size() || cost.cols() != m.nu().size()) {
    throw DimensionError("cost is " + std::to_string(cost.rows()) + "x" +
                         std::to_string(cost.cols()) + " but marginals have lengths " +
                         std::to_string(m.mu().size()) + " and " +
                         std::to_string(m.nu().size()));
  }
}

// log(sum_k exp(x_k)) without overflow.
double log_sum_exp(std::span<const double> x) {
  const double hi = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double v : x) s += std::exp(v - hi);
  return hi + std::log(s);
}

Matrix gibbs_kernel(const CostMatrix& cost, double lambda) {
  Matrix k(cost.rows(), cost.cols());
  for (std::size_t i = 0; i < cost.rows(); ++i)
    for (std::size_t j = 0; j < cost.cols(); ++j) k(i, j) = std::exp(-cost(i, j) / lambda);
  return k;
}

std::vector<double> initial_col_scaling(std::size_t n,
                                        std::optional<std::span<const double>> initial_b) {
  if (!initial_b) return std::vector<double>(n, 1.0);
  if (initial_b->size() != n) {
    throw DimensionError("initial b has length " + std::to_string(initial_b->size()) +
                         ", expected " + std::to_string(n));
  }
  for (double v : *initial_b) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError("initial b must be finite and positive");
    }
  }
  return {initial_b->begin(), initial_b->end()};
}

[[noreturn]] void underflow(const char* which, std::size_t index, double lambda) {
  throw NumericError(std::string(which) + "[" + std::to_string(index) +
                     "] underflowed at lambda=" + std::to_string(lambda) +
                     "; use a larger lambda or the log-domain solver");
}

void solve_kernel(const CostMatrix& cost, const Marginals& m, const SolverConfig& cfg,
                  std::vector<double> b, SinkhornState& st, Matrix& plan) {
  const std::size_t t = cost.rows();
  const std::size_t n = cost.cols();
  const Matrix& k = st.gibbs_kernel;
  std::vector<double> a(t, 1.0);
  std::vector<double> prev(t);
  double omega = 1.0;
  auto relax = [&](double old, double target) {
    return omega == 1.0 ? target : std::pow(old, 1.0 - omega) * std::pow(target, omega);
  };

  for (int it = 1; it <= cfg.max_iter; ++it) {
    prev = a;
    for (std::size_t i = 0; i < t; ++i) {
      double kb = 0.0;
      for (std::size_t j = 0; j < n; ++j) kb += k(i, j) * b[j];
      if (!(kb >= kUnderflowFloor) || !std::isfinite(kb)) underflow("K b", i, cfg.lambda);
      a[i] = relax(a[i], m.mu()[i] / kb);
    }
    for (std::size_t j = 0; j < n; ++j) {
      double kta = 0.0;
      for (std::size_t i = 0; i < t; ++i) kta += k(i, j) * a[i];
      if (!(kta >= kUnderflowFloor) || !std::isfinite(kta)) underflow("K^T a", j, cfg.lambda);
      b[j] = relax(b[j], m.nu()[j] / kta);
    }
    double err = 0.0;
    for (std::size_t i = 0; i < t; ++i) err += std::abs(a[i] - prev[i]);
    err /= static_cast<double>(t);

    st.iterations_run = it;
    st.final_err = err;
    if (err < cfg.thresh) {
      st.converged = true;
      break;
    }
    if (refresh_omega(cfg, it)) {
      for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < n; ++j) plan(i, j) = a[i] * k(i, j) * b[j];
      if (plan.all_finite()) omega = optimal_omega(plan);
    }
  }
  st.omega = omega;

  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < n; ++j) plan(i, j) = a[i] * k(i, j) * b[j];
  if (!plan.all_finite()) {
    throw NumericError("transport plan is not finite at lambda=" + std::to_string(cfg.lambda) +
                       "; use the log-domain solver");
  }

  st.log_a.resize(t);
  st.log_b.resize(n);
  for (std::size_t i = 0; i < t; ++i) st.log_a[i] = std::log(a[i]);
  for (std::size_t j = 0; j < n; ++j) st.log_b[j] = std::log(b[j]);
  st.a = std::move(a);
  st.b = std::move(b);
}

void solve_log(const CostMatrix& cost, const Marginals& m, const SolverConfig& cfg,
               const std::vector<double>& b0, SinkhornState& st, Matrix& plan) {
  const std::size_t t = cost.rows();
  const std::size_t n = cost.cols();
  const double lambda = cfg.lambda;

  // Potentials f = lambda log a, g = lambda log b.
  std::vector<double> f(t, 0.0);
  std::vector<double> g(n);
  for (std::size_t j = 0; j < n; ++j) g[j] = lambda * std::log(b0[j]);
  std::vector<double> prev(t);
  std::vector<double> scratch(std::max(t, n));
  double omega = 1.0;
  auto relax = [&](double old, double target) {
    return omega == 1.0 ? target : (1.0 - omega) * old + omega * target;
  };

  for (int it = 1; it <= cfg.max_iter; ++it) {
    prev = f;
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = 0; j < n; ++j) scratch[j] = (g[j] - cost(i, j)) / lambda;
      f[i] = relax(f[i], lambda * std::log(m.mu()[i]) -
                             lambda * log_sum_exp(std::span<const double>(scratch.data(), n)));
    }
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < t; ++i) scratch[i] = (f[i] - cost(i, j)) / lambda;
      g[j] = relax(g[j], lambda * std::log(m.nu()[j]) -
                             lambda * log_sum_exp(std::span<const double>(scratch.data(), t)));
    }
    double err = 0.0;
    for (std::size_t i = 0; i < t; ++i) err += std::abs(f[i] - prev[i]);
    err /= static_cast<double>(t);

    st.iterations_run = it;
    st.final_err = err;
    if (err < cfg.thresh) {
      st.converged = true;
      break;
    }
    if (refresh_omega(cfg, it)) {
      for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < n; ++j) plan(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / lambda);
      omega = optimal_omega(plan);
    }
  }
  st.omega = omega;

  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < n; ++j) plan(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / lambda);
  if (!plan.all_finite()) throw NumericError("log-domain transport plan is not finite");

  st.log_a.resize(t);
  st.log_b.resize(n);
  st.a.resize(t);
  st.b.resize(n);
  for (std::size_t i = 0; i < t; ++i) {
    st.log_a[i] = f[i] / lambda;
    st.a[i] = std::exp(st.log_a[i]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    st.log_b[j] = g[j] / lambda;
    st.b[j] = std::exp(st.log_b[j]);
  }
}

}  // namespace

CostMatrix::CostMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) throw ValidationError("cost matrix is empty");
  for (std::size_t i = 0; i < values_.rows(); ++i) {
    for (std::size_t j = 0; j < values_.cols(); ++j) {
      const double c = values_(i, j);
      if (!std::isfinite(c) || c < 0.0 || c > 2.0) {
        throw ValidationError("cost[" + std::to_string(i) + "][" + std::to_string(j) + "] = " +
                              std::to_string(c) + " is outside [0, 2]");
      }
    }
  }
}

Matrix cosine_matrix(const EmbedMatrix& a, const EmbedMatrix& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("embedding dims differ: " + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
  }
  std::vector<double> na(a.rows());
  std::vector<double> nb(b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    na[i] = l2_norm(a.row(i));
    if (na[i] == 0.0) throw DegenerateInputError("zero-norm row " + std::to_string(i) + " in frames");
  }
  for (std::size_t j = 0; j < b.rows(); ++j) {
    nb[j] = l2_norm(b.row(j));
    if (nb[j] == 0.0) {
      throw DegenerateInputError("zero-norm row " + std::to_string(j) + " in descriptors");
    }
  }
  Matrix s(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double c = dot(a.row(i), b.row(j)) / (na[i] * nb[j]);
      s(i, j) = std::clamp(c, -1.0, 1.0);
    }
  }
  return s;
}

CostMatrix build_cost_matrix(const EmbedMatrix& frames, const EmbedMatrix& descriptors) {
  Matrix c = cosine_matrix(frames, descriptors);
  for (double& v : c.data()) v = 1.0 - v;
  return CostMatrix(std::move(c));
}

TransportPlan sinkhorn_solve(const CostMatrix& cost, const Marginals& marginals,
                             const SolverConfig& cfg,
                             std::optional<std::span<const double>> initial_b) {
  cfg.validate();
  check_shapes(cost, marginals);
  std::vector<double> b = initial_col_scaling(cost.cols(), initial_b);

  SinkhornState st;
  st.domain = cfg.domain;
  st.gibbs_kernel = gibbs_kernel(cost, cfg.lambda);
  Matrix plan(cost.rows(), cost.cols());

  if (cost.rows() == 1 && cost.cols() == 1) {
    plan(0, 0) = 1.0;
    st.a = {1.0 / st.gibbs_kernel(0, 0)};
    st.b = {1.0};
    st.log_a = {cost(0, 0) / cfg.lambda};
    st.log_b = {0.0};
    st.converged = true;
    return TransportPlan{std::move(plan), marginals, cfg.lambda, std::move(st)};
  }

  if (cfg.domain == SinkhornDomain::log) {
    solve_log(cost, marginals, cfg, b, st, plan);
  } else {
    solve_kernel(cost, marginals, cfg, std::move(b), st, plan);
  }
  return TransportPlan{std::move(plan), marginals, cfg.lambda, std::move(st)};
}

double plan_entropy(const Matrix& plan) {
  double h = 0.0;
  for (double p : plan.data()) {
    if (p < 0.0) throw ValidationError("transport plan has a negative entry");
    if (p > 0.0) h -= p * (std::log(p) - 1.0);
  }
  return h;
}

double sinkhorn_rate_estimate(const Matrix& plan) {
  const std::size_t t = plan.rows();
  const std::size_t n = plan.cols();
  if (t < 2 || n < 2) return 0.0;
  std::vector<double> r(t, 0.0);
  std::vector<double> c(n, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!(plan(i, j) >= 0.0)) throw ValidationError("transport plan has a negative entry");
      r[i] += plan(i, j);
      c[j] += plan(i, j);
    }
  }
  Eigen::MatrixXd q(t, n);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = std::sqrt(r[i] * c[j]);
      q(i, j) = d > 0.0 ? plan(i, j) / d : 0.0;
    }
  // Gram matrix on the smaller side; its top eigenvalue is 1.
  const Eigen::MatrixXd gram = t <= n ? Eigen::MatrixXd(q * q.transpose())
                                      : Eigen::MatrixXd(q.transpose() * q);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();  // ascending
  return std::clamp(ev(ev.size() - 2), 0.0, 1.0);
}

double transport_cost(const Matrix& plan, const CostMatrix& cost) {
  if (plan.rows() != cost.rows() || plan.cols() != cost.cols()) {
    throw DimensionError("plan and cost shapes differ");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < plan.size(); ++k) s += plan.data()[k] * cost.values().data()[k];
  return s;
}

double regularized_objective(const Matrix& plan, const CostMatrix& cost, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("lambda must be > 0");
  const double c = transport_cost(plan, cost);
  return c - lambda * plan_entropy(plan);
}

double max_marginal_violation(const Matrix& plan, const Marginals& marginals) {
  if (plan.rows() != marginals.mu().size() || plan.cols() != marginals.nu().size()) {
    throw DimensionError("plan and marginals shapes differ");
  }
  double worst = 0.0;
  const auto rs = plan.row_sums();
  const auto cs = plan.col_sums();
  for (std::size_t i = 0; i < rs.size(); ++i) worst = std::max(worst, std::abs(rs[i] - marginals.mu()[i]));
  for (std::size_t j = 0; j < cs.size(); ++j) worst = std::max(worst, std::abs(cs[j] - marginals.nu()[j]));
  return worst;
}

}  // namespace ost
