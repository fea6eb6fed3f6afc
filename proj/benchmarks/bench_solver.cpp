#include <benchmark/benchmark.h>

#include "ost/exact_ot.hpp"
#include "ost/losses.hpp"
#include "ost/matcher.hpp"
#include "ost/random.hpp"
#include "ost/sinkhorn.hpp"

namespace {

ost::EmbedMatrix random_unit(ost::Rng& rng, std::size_t rows, std::size_t dim) {
  ost::Matrix m(rows, dim);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < dim; ++j) m(i, j) = rng.normal();
  return ost::EmbedMatrix::normalized(std::move(m));
}

ost::CostMatrix random_cost(ost::Rng& rng, std::size_t t, std::size_t n) {
  ost::Matrix m(t, n);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = 2.0 * rng.uniform();
  return ost::CostMatrix(std::move(m));
}

void BM_SinkhornKernel(benchmark::State& state) {
  ost::Rng rng(1);
  const auto t = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto cost = random_cost(rng, t, n);
  const auto marg = ost::Marginals::uniform(t, n);
  ost::SolverConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(ost::sinkhorn_solve(cost, marg, cfg));
}
BENCHMARK(BM_SinkhornKernel)->Args({8, 4})->Args({16, 8})->Args({64, 16});

void BM_SinkhornLog(benchmark::State& state) {
  ost::Rng rng(2);
  const auto cost = random_cost(rng, 6, 4);
  const auto marg = ost::Marginals::uniform(6, 4);
  ost::SolverConfig cfg;
  cfg.lambda = 1e-3;
  cfg.thresh = 1e-12;
  cfg.max_iter = 20000;
  cfg.domain = ost::SinkhornDomain::log;
  for (auto _ : state) benchmark::DoNotOptimize(ost::sinkhorn_solve(cost, marg, cfg));
}
BENCHMARK(BM_SinkhornLog);

// Near-permutation plan: arg 0 runs plain iterations, arg 1 over-relaxed.
void BM_SinkhornSlowMixing(benchmark::State& state) {
  const ost::CostMatrix cost(ost::Matrix::from_rows({{0.0879, 1.9719}, {1.1990, 0.8040}}));
  const auto marg = ost::Marginals::uniform(2, 2);
  ost::SolverConfig cfg;
  cfg.thresh = 1e-9;
  cfg.max_iter = 10000;
  cfg.overrelax = state.range(0) != 0;
  int iterations = 0;
  for (auto _ : state) {
    const auto plan = ost::sinkhorn_solve(cost, marg, cfg);
    iterations = plan.state.iterations_run;
    benchmark::DoNotOptimize(plan);
  }
  state.counters["sinkhorn_iters"] = iterations;
}
BENCHMARK(BM_SinkhornSlowMixing)->Arg(0)->Arg(1);

void BM_ScoreVideo(benchmark::State& state) {
  ost::Rng rng(3);
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto frames = random_unit(rng, 8, dim);
  const ost::ClassEmbeddings cls{"c", random_unit(rng, 4, dim), random_unit(rng, 4, dim),
                                 std::nullopt};
  for (auto _ : state) benchmark::DoNotOptimize(ost::score_video(frames, cls));
}
BENCHMARK(BM_ScoreVideo)->Arg(32)->Arg(512);

void BM_ExactOracle(benchmark::State& state) {
  ost::Rng rng(4);
  const auto cost = random_cost(rng, 8, 8);
  const auto marg = ost::Marginals::uniform(8, 8);
  for (auto _ : state) benchmark::DoNotOptimize(ost::exact_ot_oracle(cost, marg));
}
BENCHMARK(BM_ExactOracle);

void BM_LossGrad(benchmark::State& state) {
  ost::Rng rng(5);
  const std::size_t k = 3;
  const std::size_t b = 16;
  std::vector<double> v(k * b * b);
  for (double& x : v) x = 2.0 * rng.uniform() - 1.0;
  const ost::BatchLogits logits(k, b, v, ost::LogitDirection::v2t, 0.01);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < b; ++i) labels.push_back(std::to_string(i % 5));
  const auto q = ost::TargetDistribution::from_labels(labels);
  for (auto _ : state) benchmark::DoNotOptimize(ost::loss_grad_logits(logits, q));
}
BENCHMARK(BM_LossGrad);

}  // namespace
BENCHMARK_MAIN();
