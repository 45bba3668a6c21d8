// Microbenchmarks for the per-step hot paths: terrain rasterization, the
// elevation-map sensor, foothold scoring, the kinematic env step, and the
// learner-side linear algebra.
#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "stonewalk/env.hpp"
#include "stonewalk/foothold.hpp"
#include "stonewalk/nn.hpp"
#include "stonewalk/rl.hpp"
#include "stonewalk/rng.hpp"
#include "stonewalk/sensor.hpp"
#include "stonewalk/terrain.hpp"

namespace {

using namespace stonewalk;

void BM_GenerateTerrain(benchmark::State& state) {
  const auto kind = static_cast<TerrainKind>(state.range(0));
  const int level = static_cast<int>(state.range(1));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const TerrainPair pair = generate(default_spec(kind, level, seed++));
    benchmark::DoNotOptimize(pair.task.heights.data());
  }
}
BENCHMARK(BM_GenerateTerrain)
    ->ArgNames({"kind", "level"})
    ->Args({0, 4})
    ->Args({1, 0})
    ->Args({1, 4})
    ->Args({1, 8})
    ->Args({2, 4})
    ->Args({3, 4})
    ->Args({4, 4});

void BM_SampleMap(benchmark::State& state) {
  const HeightField field = generate(default_spec(TerrainKind::kSteppingStones, 4, 7)).task;
  BasePose pose{2.0, 1.0, 0.3};
  for (auto _ : state) {
    pose.x += 1e-6;  // defeat caching without leaving the field
    const ElevationMap map = sample_map(field, pose);
    benchmark::DoNotOptimize(map.samples.data());
  }
}
BENCHMARK(BM_SampleMap);

void BM_ApplyNoise(benchmark::State& state) {
  const HeightField field = generate(default_spec(TerrainKind::kSteppingStones, 4, 7)).task;
  const BasePose pose{2.0, 1.0, 0.3};
  const ElevationMap clean = sample_map(field, pose);
  const MapNoiseConfig cfg;  // all channels at their defaults
  Rng rng(11, Rng::stream_id("bench/noise"));
  SensorState st;
  st.reset(cfg, rng);
  for (auto _ : state) {
    const ElevationMap out = apply_noise(field, clean, st, cfg, rng);
    benchmark::DoNotOptimize(out.samples.data());
  }
}
BENCHMARK(BM_ApplyNoise);

void BM_FootholdReward(benchmark::State& state) {
  const HeightField field = generate(default_spec(TerrainKind::kSteppingStones, 4, 7)).task;
  const FootPrint print = FootPrint::default_grid();
  const FootholdConfig cfg;
  std::array<FootState, 2> feet;
  feet[0] = {2.0, 0.55, 0.1, true, 0.0};
  feet[1] = {2.2, 1.45, -0.1, true, 0.0};
  for (auto _ : state) {
    feet[0].x += 1e-6;
    benchmark::DoNotOptimize(foothold_reward(feet, print, field, cfg));
  }
}
BENCHMARK(BM_FootholdReward);

void BM_EnvStep(benchmark::State& state) {
  EnvConfig cfg;
  FootstepEnv env(cfg);
  Rng rng(3, Rng::stream_id("bench/env"));
  const TerrainPair pair = generate(default_spec(TerrainKind::kSteppingStones, 2, 7));
  env.reset(pair, DynamicsMode::kSoft, sample_command(1, rng), rng);
  for (auto _ : state) {
    const Eigen::Vector3d action(0.05 * rng.normal(), 0.05 * rng.normal(), 0.05 * rng.normal());
    const FootstepEnv::StepResult result = env.step(action, rng);
    benchmark::DoNotOptimize(result.obs.data());
    if (result.done) {
      env.reset(pair, DynamicsMode::kSoft, sample_command(1, rng), rng);
    }
  }
}
BENCHMARK(BM_EnvStep);

void BM_ComputeGae(benchmark::State& state) {
  const int T = 100, N = 64;
  Rng rng(5, Rng::stream_id("bench/gae"));
  Eigen::MatrixXd rewards(T, N), values(T, N);
  MaskMatrix done = MaskMatrix::Zero(T, N);
  for (int t = 0; t < T; ++t) {
    for (int n = 0; n < N; ++n) {
      rewards(t, n) = rng.normal();
      values(t, n) = rng.normal();
      if (rng.chance(0.02)) done(t, n) = 1;
    }
  }
  Eigen::VectorXd boot = Eigen::VectorXd::Zero(N);
  for (auto _ : state) {
    const GaeResult g = compute_gae(rewards, values, boot, done, 0.99, 0.95);
    benchmark::DoNotOptimize(g.advantages.data());
  }
}
BENCHMARK(BM_ComputeGae);

void BM_MlpForward(benchmark::State& state) {
  Rng rng(9, Rng::stream_id("bench/mlp"));
  Mlp net(MlpSpec{kObsDim, {64, 64}, kActionDim}, std::sqrt(2.0), 0.01, rng);
  Eigen::MatrixXd obs(kObsDim, 64);
  for (int c = 0; c < obs.cols(); ++c) {
    for (int r = 0; r < obs.rows(); ++r) obs(r, c) = rng.normal();
  }
  for (auto _ : state) {
    const Eigen::MatrixXd out = net.forward(obs);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_MlpForward);

void BM_MlpBackward(benchmark::State& state) {
  Rng rng(9, Rng::stream_id("bench/mlp"));
  Mlp net(MlpSpec{kObsDim, {64, 64}, kActionDim}, std::sqrt(2.0), 0.01, rng);
  Eigen::MatrixXd obs(kObsDim, 64);
  for (int c = 0; c < obs.cols(); ++c) {
    for (int r = 0; r < obs.rows(); ++r) obs(r, c) = rng.normal();
  }
  Mlp::Cache cache;
  const Eigen::MatrixXd out = net.forward(obs, cache);
  const Eigen::MatrixXd out_grad = Eigen::MatrixXd::Constant(out.rows(), out.cols(), 1e-3);
  Eigen::VectorXd grad(net.param_count());
  for (auto _ : state) {
    grad.setZero();
    const Eigen::MatrixXd in_grad = net.backward(cache, out_grad, grad);
    benchmark::DoNotOptimize(in_grad.data());
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_MlpBackward);

void BM_PpoUpdate(benchmark::State& state) {
  const int T = 25, N = 16;
  PpoConfig cfg;
  cfg.epochs = 3;
  cfg.minibatches = 4;
  const PpoNets pristine = make_ppo_nets(kObsDim, kActionDim, {64, 64}, cfg, 5);
  PpoNets nets = pristine;

  RolloutBuffer buffer(T, N, kObsDim, kActionDim);
  Rng fill(17, Rng::stream_id("bench/fill"));
  for (int c = 0; c < T * N; ++c) {
    for (int d = 0; d < kObsDim; ++d) buffer.obs(d, c) = fill.uniform(-1.0, 1.0);
  }
  buffer.behavior_mean = nets.policy.mean(nets.obs_norm.normalize(buffer.obs));
  buffer.behavior_log_std = nets.policy.log_std();
  buffer.actions = nets.policy.sample(buffer.behavior_mean, fill);
  buffer.logp = nets.policy.log_prob(buffer.behavior_mean, buffer.actions);
  for (int t = 0; t < T; ++t) {
    for (int n = 0; n < N; ++n) {
      buffer.r1(t, n) = fill.normal();
      buffer.r2(t, n) = fill.chance(0.05) ? -1.0 : 0.0;
      if (fill.chance(0.04)) buffer.done(t, n) = 1;
    }
  }

  for (auto _ : state) {
    state.PauseTiming();
    nets = pristine;
    Rng rng(99, Rng::stream_id("bench/update"));
    state.ResumeTiming();
    const UpdateStats stats = update(buffer, nets, cfg, rng);
    benchmark::DoNotOptimize(stats.mean_kl);
  }
}
BENCHMARK(BM_PpoUpdate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
