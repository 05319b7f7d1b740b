#include <benchmark/benchmark.h>

#include "advgrasp/environment.hpp"
#include "advgrasp/policy.hpp"
#include "advgrasp/rng.hpp"
#include "advgrasp/trainer.hpp"

namespace {

using namespace advgrasp;

void bm_env_step(benchmark::State& state) {
  EnvConfig cfg;
  WorldState ws = reset(cfg, 7);
  RobotAction a1{0.0, 0.0, 0.1, 0.0, GripperCmd::open};
  MoverAction a2{0.7, -0.3, 0.2};
  for (auto _ : state) {
    StepResult res = step(cfg, ws, a1, a2);
    benchmark::DoNotOptimize(res.events.d12);
    if (res.state.terminal == Terminal::none)
      ws = std::move(res.state);
    else
      ws = reset(cfg, 7);
  }
}
BENCHMARK(bm_env_step);

void bm_observation(benchmark::State& state) {
  EnvConfig cfg;
  WorldState ws = reset(cfg, 11);
  for (auto _ : state) {
    ObsVector o = robot_observation(ws);
    benchmark::DoNotOptimize(o[0]);
  }
}
BENCHMARK(bm_observation);

void bm_policy_forward(benchmark::State& state) {
  PolicyDescriptor d{AgentRole::robot};
  PolicyParams p = init_policy(d, 3);
  EnvConfig cfg;
  WorldState ws = reset(cfg, 11);
  ObsVector obs = robot_observation(ws);
  HiddenState h = HiddenState::zero(d);
  for (auto _ : state) {
    PolicyOutput out = policy_step(p, obs, h);
    benchmark::DoNotOptimize(out.value);
    h = std::move(out.hidden);
  }
}
BENCHMARK(bm_policy_forward);

void bm_gradients(benchmark::State& state) {
  PolicyDescriptor d{AgentRole::robot};
  PolicyParams p = init_policy(d, 3);
  EnvConfig cfg;
  WorldState ws = reset(cfg, 11);
  Rng rng(5);

  SegmentBatch batch;
  batch.h0 = HiddenState::zero(d);
  HiddenState h = batch.h0;
  for (int t = 0; t < 20; ++t) {
    ObsVector obs = robot_observation(ws);
    PolicyOutput out = policy_step(p, obs, h);
    h = std::move(out.hidden);
    ActionSample s = sample_action(out.dist, rng);
    StepSample ss;
    ss.obs.assign(obs.begin(), obs.end());
    ss.presquash = s.presquash;
    ss.close = s.close;
    ss.advantage = rng.uniform(-1.0, 1.0);
    ss.ret = rng.uniform(-1.0, 1.0);
    batch.steps.push_back(std::move(ss));
    StepResult res = step(cfg, ws, to_robot_action(s), MoverAction{});
    ws = res.state.terminal == Terminal::none ? res.state : reset(cfg, 11);
  }

  LossSpec ls;
  for (auto _ : state) {
    GradientResult g = gradients(p, ls, batch);
    benchmark::DoNotOptimize(g.loss);
  }
}
BENCHMARK(bm_gradients);

}  // namespace

BENCHMARK_MAIN();
