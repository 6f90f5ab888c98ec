#include "choreo/choreographer.hpp"

#include <cmath>
#include <stdexcept>

namespace choreo::choreographer {

using behaviours::BehaviourNet;
using world::Observation;
using world::WorldState;

const nn::Lstm& ChoreographerNet::lstm() {
  static const nn::Lstm l{"lstm", {128, 32}};
  return l;
}
const nn::Dense& ChoreographerNet::policy_head() {
  static const nn::Dense d{"policy", {32, 3, nn::Activation::Identity}};
  return d;
}
const nn::Dense& ChoreographerNet::value_head() {
  static const nn::Dense d{"value", {32, 1, nn::Activation::Identity}};
  return d;
}

void ChoreographerNet::init(const std::string& behaviour_checkpoint_bytes, Rng& rng) {
  store.deserialize(behaviour_checkpoint_bytes);
  if (!store.has("features.fc1.W") || !store.has("features.fc2.W"))
    throw std::runtime_error("checkpoint lacks feature-extractor tensors");
  store.freeze("features");
  lstm().init(store, rng);
  policy_head().init(store, rng);
  value_head().init(store, rng);
}

namespace {

struct StepVars {
  nn::Tape::Var log_probs;  // 3-vector
  nn::Tape::Var value;      // scalar
  nn::Tape::Var h;
  nn::Tape::Var c;
};

StepVars forward_step(ChoreographerNet& net, nn::Tape& tape, const Observation& obs,
                      nn::Tape::Var h, nn::Tape::Var c) {
  nn::Tape::Var x = tape.input(world::normalized(obs));
  nn::Tape::Var feat = BehaviourNet::fc2().forward(
      tape, net.store, BehaviourNet::fc1().forward(tape, net.store, x));
  auto st = ChoreographerNet::lstm().forward(tape, net.store, feat, h, c);
  nn::Tape::Var logits = ChoreographerNet::policy_head().forward(tape, net.store, st.h);
  nn::Tape::Var logp = tape.log_softmax(logits);
  nn::Tape::Var val =
      tape.pick(ChoreographerNet::value_head().forward(tape, net.store, st.h), 0);
  return {logp, val, st.h, st.c};
}

}  // namespace

SelectResult select_behaviour(ChoreographerNet& net, const Observation& obs,
                              const ChoreographerNet::LstmState& state, Rng& rng) {
  nn::Tape tape;
  StepVars sv = forward_step(net, tape, obs, tape.input(state.h), tape.input(state.c));
  const Eigen::VectorXd logp = tape.value(sv.log_probs);
  const double u = uniform01(rng);
  double acc = 0.0;
  int chosen = 2;
  for (int i = 0; i < 3; ++i) {
    acc += std::exp(logp(i));
    if (u < acc) {
      chosen = i;
      break;
    }
  }
  SelectResult out;
  out.behaviour = chosen;
  out.log_prob = logp(chosen);
  out.value = tape.scalar(sv.value);
  out.state_after.h = tape.value(sv.h);
  out.state_after.c = tape.value(sv.c);
  return out;
}

std::vector<double> discounted_return(const std::vector<double>& rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (long t = static_cast<long>(rewards.size()) - 1; t >= 0; --t) {
    acc = rewards[t] + gamma * acc;
    out[t] = acc;
  }
  return out;
}

std::vector<double> gae(const std::vector<double>& rewards,
                        const std::vector<double>& values,
                        const std::vector<bool>& terminals, double gamma,
                        double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n + 1 || terminals.size() != n)
    throw std::invalid_argument("gae: length mismatch");
  std::vector<double> adv(n);
  double acc = 0.0;
  for (long t = static_cast<long>(n) - 1; t >= 0; --t) {
    const double not_term = terminals[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * values[t + 1] * not_term - values[t];
    acc = delta + gamma * lambda * not_term * acc;
    adv[t] = acc;
  }
  return adv;
}

double reward_dense(Behaviour required_before, int chosen, bool success_after) {
  double r = (chosen == static_cast<int>(required_before)) ? 1.0 : -1.0;
  if (success_after) r += 10.0;
  return r;
}

double reward_sparse(bool success_after) { return success_after ? 10.0 : 0.0; }

LossParts a2c_update(ChoreographerNet& net, const std::vector<RolloutStep>& rollout,
                     double bootstrap_value, double gamma, double lambda,
                     const A2cCoefs& coefs) {
  if (rollout.empty()) throw std::invalid_argument("a2c_update: empty rollout");
  const std::size_t n = rollout.size();

  std::vector<double> rewards(n), values(n + 1);
  std::vector<bool> terminals(n);
  for (std::size_t t = 0; t < n; ++t) {
    rewards[t] = rollout[t].reward;
    values[t] = rollout[t].value;
    terminals[t] = rollout[t].terminal;
  }
  values[n] = bootstrap_value;
  const std::vector<double> adv = gae(rewards, values, terminals, gamma, lambda);

  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  const double sd = std::max(std::sqrt(var), 1e-8);

  nn::Tape tape;
  nn::Tape::Var h = tape.input(rollout[0].state_before.h);
  nn::Tape::Var c = tape.input(rollout[0].state_before.c);

  std::vector<nn::Tape::Var> scalars;
  std::vector<double> weights;
  LossParts parts;
  for (std::size_t t = 0; t < n; ++t) {
    StepVars sv = forward_step(net, tape, rollout[t].obs, h, c);
    h = sv.h;
    c = sv.c;
    const double a_norm = (adv[t] - mean) / sd;
    nn::Tape::Var logp_t = tape.pick(sv.log_probs, rollout[t].chosen);
    scalars.push_back(logp_t);
    weights.push_back(-a_norm);
    parts.policy += -a_norm * tape.scalar(logp_t);

    const double target = adv[t] + rollout[t].value;
    Eigen::VectorXd tv(1);
    tv(0) = target;
    nn::Tape::Var vloss_t = tape.sum_sq_diff(sv.value, tv);
    scalars.push_back(vloss_t);
    weights.push_back(coefs.value_coef);
    parts.value += tape.scalar(vloss_t);

    // entropy = -sum p log p
    nn::Tape::Var ent_t =
        tape.scale(tape.sum(tape.mul(tape.exp(sv.log_probs), sv.log_probs)), -1.0);
    scalars.push_back(ent_t);
    weights.push_back(-coefs.entropy_coef);
    parts.entropy += tape.scalar(ent_t);
  }
  nn::Tape::Var total = tape.weighted_sum(scalars, weights);
  parts.total = tape.scalar(total);

  net.store.zero_grads();
  tape.backward(total);
  net.store.apply_gradients(coefs.lr);
  return parts;
}

TrainingLog train_choreographer(ChoreographerNet& net, BehaviourNet& bnet,
                                RewardMode mode, long episode_budget,
                                std::uint64_t seed, const ChoreoOptions& opts) {
  Rng rng(seed);
  SuccessWindow window(opts.window);
  TrainingLog log;
  for (long e = 0; e < episode_budget; ++e) {
    WorldState s = world::reset(rng());
    WorldState prev = s;
    ChoreographerNet::LstmState ls;
    std::vector<RolloutStep> rollout;
    rollout.reserve(world::kEpisodeStepBudget);
    bool success = false;
    for (int t = 0; t < world::kEpisodeStepBudget; ++t) {
      const Observation obs = world::observe(s, prev);
      const SelectResult sel = select_behaviour(net, obs, ls, rng);
      const Behaviour required = behaviours::required_behaviour(s);
      const world::Action act = behaviours::sampled_action(
          bnet, static_cast<Behaviour>(sel.behaviour), obs, s, rng);
      const WorldState next = world::step(s, act);
      success = world::task_success(next);
      const double r = (mode == RewardMode::Dense)
                           ? reward_dense(required, sel.behaviour, success)
                           : reward_sparse(success);
      rollout.push_back({obs, ls, sel.behaviour, sel.log_prob, sel.value, r, success});
      prev = s;
      s = next;
      ls = sel.state_after;
      if (success) break;
    }
    double bootstrap = 0.0;
    if (!success) {
      nn::Tape tape;
      StepVars sv = forward_step(net, tape, world::observe(s, prev),
                                 tape.input(ls.h), tape.input(ls.c));
      bootstrap = tape.scalar(sv.value);
    }
    a2c_update(net, rollout, bootstrap, opts.gamma, opts.lambda, opts.coefs);
    window.push(success);
    log.curve.push_back({e + 1, window.rate(), PhaseLabel::Choreographer});
    log.episodes_used = e + 1;
    if (window.full() && window.rate() >= 1.0) {
      log.completed = true;
      break;
    }
  }
  return log;
}

}  // namespace choreo::choreographer
