#include <benchmark/benchmark.h>

#include "choreo/behaviours.hpp"
#include "choreo/choreographer.hpp"
#include "choreo/experts.hpp"
#include "choreo/nn/layers.hpp"
#include "choreo/world.hpp"

using namespace choreo;

static void BM_WorldStep(benchmark::State& state) {
  world::WorldState s = world::reset(1);
  world::Action a;
  a.dpos = world::Vec3(0.01, -0.01, 0.005);
  a.dyaw = 0.02;
  for (auto _ : state) {
    s = world::step(s, a);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_WorldStep);

static void BM_ExpertEpisode(benchmark::State& state) {
  std::uint64_t seed = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(behaviours::run_expert_episode(seed++));
}
BENCHMARK(BM_ExpertEpisode);

static void BM_BehaviourForward(benchmark::State& state) {
  Rng rng(1);
  behaviours::BehaviourNet net;
  net.init(rng);
  const world::WorldState s = world::reset(2);
  const world::Observation obs = world::observe(s, s);
  const Eigen::VectorXd noise = Eigen::VectorXd::Zero(3);
  for (auto _ : state) {
    nn::Tape tape;
    benchmark::DoNotOptimize(
        net.sample(tape, behaviours::Behaviour::Approach, obs, noise));
  }
}
BENCHMARK(BM_BehaviourForward);

static void BM_BcForwardBackwardStep(benchmark::State& state) {
  Rng rng(1);
  behaviours::BehaviourNet net;
  net.init(rng);
  const world::WorldState s = world::reset(2);
  const world::Observation obs = world::observe(s, s);
  const Eigen::VectorXd noise = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd target =
      behaviours::expert_target(behaviours::Behaviour::Approach, s, {});
  for (auto _ : state) {
    nn::Tape tape;
    auto out = net.sample(tape, behaviours::Behaviour::Approach, obs, noise);
    net.store.zero_grads();
    tape.backward(tape.sum_sq_diff(out.action_var, target));
    net.store.apply_gradients(3e-4);
  }
}
BENCHMARK(BM_BcForwardBackwardStep);

static void BM_LstmStep(benchmark::State& state) {
  Rng rng(1);
  nn::ParameterStore store;
  const nn::Lstm cell{"lstm", {128, 32}};
  cell.init(store, rng);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(128, 0.1);
  const Eigen::VectorXd h = Eigen::VectorXd::Zero(32);
  const Eigen::VectorXd c = Eigen::VectorXd::Zero(32);
  for (auto _ : state) {
    nn::Tape tape;
    benchmark::DoNotOptimize(
        cell.forward(tape, store, tape.input(x), tape.input(h), tape.input(c)));
  }
}
BENCHMARK(BM_LstmStep);

static void BM_A2cUpdate(benchmark::State& state) {
  Rng rng(1);
  behaviours::BehaviourNet bnet;
  bnet.init(rng);
  choreographer::ChoreographerNet cnet;
  cnet.init(bnet.store.serialize("features"), rng);
  const world::WorldState s = world::reset(3);
  const world::Observation obs = world::observe(s, s);
  std::vector<choreographer::RolloutStep> rollout(
      static_cast<std::size_t>(state.range(0)));
  for (std::size_t t = 0; t < rollout.size(); ++t) {
    rollout[t].obs = obs;
    rollout[t].chosen = static_cast<int>(t % 3);
    rollout[t].reward = (t % 2 == 0) ? 1.0 : -1.0;
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(
        choreographer::a2c_update(cnet, rollout, 0.0, 0.99, 0.95, {}));
}
BENCHMARK(BM_A2cUpdate)->Arg(10)->Arg(150);

BENCHMARK_MAIN();
