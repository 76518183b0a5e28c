#include <benchmark/benchmark.h>

#include <random>

#include "fbgp/acquisition.hpp"
#include "fbgp/gp.hpp"
#include "fbgp/mcmc.hpp"

namespace {

fbgp::Dataset random_data(Eigen::Index n, Eigen::Index d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  fbgp::Dataset data;
  data.inputs = Eigen::MatrixXd::NullaryExpr(n, d, [&] { return u(rng); });
  data.targets = (3.0 * data.inputs.col(0).array()).sin().matrix();
  data.targets.array() -= data.targets.mean();
  return data;
}

fbgp::Hyperparameters theta_for(Eigen::Index d) {
  fbgp::Hyperparameters t;
  t.log_length_scales = Eigen::VectorXd::Constant(d, std::log(0.3));
  t.log_noise_std = std::log(0.05);
  return t;
}

void BM_LmlAndGradient(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const auto data = random_data(n, 3, 1);
  const auto theta = theta_for(3);
  for (auto _ : state) benchmark::DoNotOptimize(fbgp::lml_and_gradient(data, theta));
}
BENCHMARK(BM_LmlAndGradient)->Arg(10)->Arg(50)->Arg(100)->Arg(200);

void BM_PredictEnsemble(benchmark::State& state) {
  const auto data = random_data(50, 2, 2);
  fbgp::PosteriorSamples s;
  const auto m = static_cast<Eigen::Index>(state.range(0));
  s.draws = theta_for(2).packed().transpose().replicate(m, 1);
  s.chain_ids.assign(static_cast<std::size_t>(m), 0);
  const Eigen::MatrixXd pool = random_data(1000, 2, 3).inputs;
  for (auto _ : state) benchmark::DoNotOptimize(fbgp::predict_ensemble(data, s, pool));
}
BENCHMARK(BM_PredictEnsemble)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_SamplePosterior(benchmark::State& state) {
  const auto data = random_data(30, 2, 4);
  fbgp::SamplerConfig cfg;
  cfg.chains = 1;
  cfg.samples_per_chain = 200;
  cfg.warmup = 100;
  for (auto _ : state) benchmark::DoNotOptimize(fbgp::sample_posterior(data, fbgp::PriorSpec{}, cfg));
}
BENCHMARK(BM_SamplePosterior)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
