#include <benchmark/benchmark.h>

#include <array>
#include <vector>

#include "jitai/agents.hpp"
#include "jitai/env.hpp"
#include "jitai/harness.hpp"
#include "jitai/nn.hpp"

namespace {

using namespace jitai;

void BM_EnvStep(benchmark::State& state) {
  const EnvParams params;
  Rng rng(1);
  EnvState s = reset(params, rng);
  int t = 0;
  for (auto _ : state) {
    const StepResult r = step(s, action_from_index(t++ % kNumActions), params, rng);
    s = r.terminated ? reset(params, rng) : r.state;
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_EnvStep);

void BM_Episode(benchmark::State& state) {
  const EnvParams params;
  Rng rng(2);
  const StatePolicy policy = alternating_oracle_policy();
  for (auto _ : state) benchmark::DoNotOptimize(run_episode(policy, params, Scenario::kPHD, rng));
}
BENCHMARK(BM_Episode);

void BM_Forward(benchmark::State& state) {
  Rng rng(3);
  const int hidden = static_cast<int>(state.range(0));
  const std::array<int, 4> sizes{3, hidden, hidden, 5};
  const nn::Mlp net = nn::make_mlp(sizes, rng);
  const std::array<double, 3> x{0.3, 0.7, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(net, x));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(128);

void BM_BackwardLogprob(benchmark::State& state) {
  Rng rng(4);
  const std::array<int, 3> sizes{3, 128, 4};
  const nn::Mlp net = nn::make_mlp(sizes, rng);
  const std::array<double, 3> x{0.3, 0.7, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(nn::backward_logprob(net, x, 2));
}
BENCHMARK(BM_BackwardLogprob);

void BM_ReinforceGradient(benchmark::State& state) {
  const EnvParams params;
  Rng rng(5);
  ReinforceConfig cfg;
  ReinforceAgent agent(observation_dim(Scenario::kPHD), cfg, rng);
  std::vector<Trajectory> batch;
  for (int i = 0; i < cfg.m_trajectories; ++i)
    batch.push_back(run_episode(agent, params, Scenario::kPHD, ActMode::kTrainSample, rng));
  for (auto _ : state) benchmark::DoNotOptimize(agent.policy_gradient(batch));
}
BENCHMARK(BM_ReinforceGradient)->Unit(benchmark::kMillisecond);

void BM_DqnUpdate(benchmark::State& state) {
  const EnvParams params;
  Rng rng(6);
  DqnConfig cfg;
  DqnAgent agent(observation_dim(Scenario::kPHD), cfg, rng);
  while (agent.replay().size() < 1000) {
    EnvState s = reset(params, rng);
    while (!s.terminated) {
      const Observation obs = observe(s, Scenario::kPHD, params.k);
      const int a = agent.act(obs, ActMode::kTrainSample, rng);
      const StepResult r = step(s, action_from_index(a), params, rng);
      agent.remember({obs, a, r.reward, observe(r.state, Scenario::kPHD, params.k), r.terminated});
      s = r.state;
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(agent.update(rng));
}
BENCHMARK(BM_DqnUpdate)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
