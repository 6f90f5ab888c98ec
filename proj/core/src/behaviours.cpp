#include "choreo/behaviours.hpp"

#include <cmath>
#include <stdexcept>

namespace choreo::behaviours {

using world::Action;
using world::Limits;
using world::Observation;
using world::Thresholds;
using world::Vec3;
using world::WorldState;

const char* behaviour_name(Behaviour b) {
  switch (b) {
    case Behaviour::Approach: return "approach";
    case Behaviour::Grasp: return "grasp";
    case Behaviour::Retract: return "retract";
  }
  return "?";
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Sequential: return "Sequential";
    case Strategy::SequentialFreezing: return "SequentialFreezing";
    case Strategy::Separate: return "Separate";
    case Strategy::SeparateFreezing: return "SeparateFreezing";
    case Strategy::EndToEnd: return "EndToEnd";
  }
  return "?";
}

std::optional<Strategy> strategy_from_name(const std::string& name) {
  for (Strategy s : {Strategy::Sequential, Strategy::SequentialFreezing,
                     Strategy::Separate, Strategy::SeparateFreezing, Strategy::EndToEnd})
    if (name == strategy_name(s)) return s;
  return std::nullopt;
}

const nn::Dense& BehaviourNet::fc1() {
  static const nn::Dense d{"features.fc1", {28, 128, nn::Activation::Tanh}};
  return d;
}
const nn::Dense& BehaviourNet::fc2() {
  static const nn::Dense d{"features.fc2", {128, 128, nn::Activation::Tanh}};
  return d;
}
const nn::Dense& BehaviourNet::head(Behaviour b) {
  static const nn::Dense approach{"head.approach", {128, 6, nn::Activation::Identity}};
  static const nn::Dense grasp{"head.grasp", {128, 8, nn::Activation::Identity}};
  static const nn::Dense retract{"head.retract", {128, 6, nn::Activation::Identity}};
  switch (b) {
    case Behaviour::Approach: return approach;
    case Behaviour::Grasp: return grasp;
    case Behaviour::Retract: return retract;
  }
  return approach;
}

namespace {

// Structured initialization of the shared feature stack.
//
// fc1: most rows form multi-resolution comparator banks over the error
// channels of the normalized observation (relative position 6-8, yaw
// difference 13, target-block difference 17/18/24). Each bank unit is
// tanh((x - theta) / width) on one channel, with log-spaced thresholds so
// resolution is constant relative to the remaining error - the natural
// basis for a saturating proportional controller. A unit is active only
// inside its narrow band, so training phases that do not visit the band
// neither read nor perturb it, which contains feature drift between
// phases. The relative-z channel gets an extra mini-ladder around the
// hover offset. Remaining rows keep their random init and carry the
// coarse channels (absolute positions, aperture, velocities).
//
// fc2: near-identity. A close-to-diagonal map preserves the banks' zero
// crossings: readouts anchored where a bank output is zero see no shift
// from multiplicative weight drift, and additive drift is shrunk by the
// banks' narrow widths.
struct BankRung {
  int channel;
  double theta;
  double width;
};

std::vector<BankRung> feature_bank_rungs() {
  std::vector<BankRung> rungs;
  auto ladder = [&rungs](int ch, double tol, double range) {
    // The zero rung is deliberately narrower than the tolerance: phases
    // that operate at another signal's goal point (retract runs with the
    // grip error held near zero) then see a saturated unit instead of a
    // live one, and bias drift moves the threshold by drift * width.
    rungs.push_back({ch, 0.0, 0.4 * tol});
    for (double th = tol; th < range; th *= 2.5) {
      const double w = std::max(tol, 0.5 * th);
      rungs.push_back({ch, th, w});
      rungs.push_back({ch, -th, w});
    }
  };
  // Ranges cover the signals actually reachable: the gripper starts at
  // most ~0.35 m from the block (3.5 at x10 scale) while the target can
  // be ~0.5 m from the block (5.0 at x10 scale).
  for (int ch : {6, 7, 8}) ladder(ch, 0.05, 4.0);     // block - gripper, x10 scale
  for (int ch : {17, 18, 24}) ladder(ch, 0.1, 6.0);   // target - block, x10 scale
  ladder(13, 0.05, 3.2);                              // yaw difference, radians
  ladder(13, 0.05, 3.2);  // second copy, see below
  // Redundant copies of the most drift-sensitive detectors. A readout
  // spread over R duplicate units sees the trunk's post-fit parameter
  // diffusion attenuated by sqrt(R); the last few millimetres of the
  // grip error - the attach radius - are where that noise floor breaks
  // the grasp head first.
  for (int copy = 0; copy < 3; ++copy) {
    for (int ch : {6, 7, 8}) {
      rungs.push_back({ch, 0.0, 0.4 * 0.05});
      rungs.push_back({ch, 0.05, 0.05});
      rungs.push_back({ch, -0.05, 0.05});
    }
  }
  // Aperture comparators (channel 9 spans [-0.5, 0.5] after centring):
  // open versus closed is the one discrete task fact no error channel
  // carries, and the behaviour selector needs it.
  rungs.push_back({9, 0.0, 0.1});
  rungs.push_back({9, 0.25, 0.1});
  rungs.push_back({9, -0.25, 0.1});
  // hover offset on the relative-z channel: -0.05 m -> -0.5 at x10 scale
  rungs.push_back({8, -0.5, 0.05});
  rungs.push_back({8, -0.45, 0.05});
  rungs.push_back({8, -0.55, 0.05});
  rungs.push_back({8, -0.375, 0.125});
  rungs.push_back({8, -0.625, 0.125});
  return rungs;
}

void init_feature_stack(nn::ParameterStore& store, Rng& rng) {
  BehaviourNet::fc1().init(store, rng);
  BehaviourNet::fc2().init(store, rng);
  auto& W1 = store.at("features.fc1.W").value;
  auto& b1 = store.at("features.fc1.b").value;
  const std::vector<BankRung> rungs = feature_bank_rungs();
  if (static_cast<long>(rungs.size()) > W1.rows())
    throw std::logic_error("feature banks exceed fc1 width");
  for (std::size_t r = 0; r < rungs.size(); ++r) {
    W1.row(static_cast<long>(r)).setZero();
    W1(static_cast<long>(r), rungs[r].channel) = 1.0 / rungs[r].width;
    b1(static_cast<long>(r), 0) = -rungs[r].theta / rungs[r].width;
  }
  // Gain-3 identity: wherever the incoming comparator is saturated
  // (output near +-1) the second tanh sits at +-3, where its slope is
  // ~0.01, so later-phase weight drift in this layer barely reaches the
  // readouts; in-band comparators keep a live slope.
  auto& W2 = store.at("features.fc2.W").value;
  W2 *= 0.05;
  W2.diagonal().array() += 3.0;
  // fc2 is bias-free: every threshold lives in fc1, so a second-layer
  // bias adds no expressive power here - it only provides a drift channel
  // that shifts the anchor point of every readout at once.
  store.at("features.fc2.b").value.setZero();
  store.freeze("features.fc2.b");
}

// Policy heads start at zero. A random readout over 128 features
// produces large wrong outputs that must first be unlearned, and during
// that transient the full error signal backpropagates into the shared
// trunk - with a per-step optimizer this is what rewrites fc2 under
// every later phase and corrupts the earlier heads. Starting from zero,
// the gradient into the trunk is zero until the head itself has weight,
// and it only grows along directions that reduce the new phase's error.
//
// log sigma starts at -2.3 (sigma ~ 0.1): enough action noise to dither
// the residual clone error, which decorrelates the per-step gradient
// signs and keeps the optimizer's post-fit parameter drift diffusive
// rather than directed. (Starting sigma at the clamp floor measurably
// worsens cross-phase interference.)
void init_zero_head(nn::ParameterStore& store, const nn::Dense& head) {
  auto& W = store.at(head.name + ".W").value;
  auto& b = store.at(head.name + ".b").value;
  W.setZero();
  b.setZero();
  const long k = W.rows() / 2;
  b.col(0).tail(k).setConstant(-2.3);
}

}  // namespace

void BehaviourNet::init(Rng& rng) {
  init_feature_stack(store, rng);
  for (Behaviour b : {Behaviour::Approach, Behaviour::Grasp, Behaviour::Retract}) {
    head(b).init(store, rng);
    init_zero_head(store, head(b));
  }
}

nn::Tape::Var BehaviourNet::features(nn::Tape& tape, const Observation& obs) {
  nn::Tape::Var x = tape.input(world::normalized(obs));
  return fc2().forward(tape, store, fc1().forward(tape, store, x));
}

BehaviourNet::Sampled BehaviourNet::sample(nn::Tape& tape, Behaviour b,
                                           const Observation& obs,
                                           const Eigen::VectorXd& noise) {
  nn::Tape::Var feat = features(tape, obs);
  nn::Tape::Var raw = head(b).forward(tape, store, feat);
  nn::GaussianSample gs = nn::sample_squashed_gaussian(tape, raw, noise);
  return {gs.action, tape.value(gs.action)};
}

Action to_world_action(Behaviour b, const Eigen::VectorXd& a, const WorldState& s) {
  Action act;
  act.dpos = Vec3(a(0), a(1), a(2)) * Limits::dpos_max;
  if (b == Behaviour::Grasp) act.dyaw = a(3) * Limits::dyaw_max;
  switch (b) {
    case Behaviour::Approach:
      act.daperture = 0.0;
      break;
    case Behaviour::Grasp: {
      const bool near = (s.gripper_pos - s.block_pos).norm() < Thresholds::grasp;
      const bool aligned = std::abs(world::wrap_angle(s.gripper_yaw - s.block_yaw)) <
                           Thresholds::attach_yaw;
      act.daperture = (s.attached || (near && aligned)) ? -Limits::daperture_max : 0.0;
      break;
    }
    case Behaviour::Retract:
      act.daperture = -Limits::daperture_max;
      break;
  }
  return act;
}

world::Action expert_action(Behaviour b, const WorldState& s,
                            const experts::ExpertGains& g) {
  switch (b) {
    case Behaviour::Approach: return experts::expert_approach(s, g);
    case Behaviour::Grasp: return experts::expert_grasp(s, g);
    case Behaviour::Retract: return experts::expert_retract(s, g);
  }
  return {};
}

Eigen::VectorXd expert_target(Behaviour b, const WorldState& s,
                              const experts::ExpertGains& g) {
  const Action a = expert_action(b, s, g);
  Eigen::VectorXd t(action_dim(b));
  t(0) = a.dpos.x() / Limits::dpos_max;
  t(1) = a.dpos.y() / Limits::dpos_max;
  t(2) = a.dpos.z() / Limits::dpos_max;
  if (b == Behaviour::Grasp) t(3) = a.dyaw / Limits::dyaw_max;
  return t;
}

double bc_loss(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target) {
  if (predicted.size() != target.size())
    throw std::invalid_argument("bc_loss: length mismatch");
  return (predicted - target).squaredNorm();
}

ControllerKind StrategyPlan::scaffold(Behaviour trained, Behaviour other) const {
  if (id == Strategy::Sequential || id == Strategy::SequentialFreezing)
    return static_cast<int>(other) < static_cast<int>(trained) ? ControllerKind::Net
                                                               : ControllerKind::Expert;
  return ControllerKind::Expert;
}

namespace {

constexpr Behaviour kOrder[3] = {Behaviour::Approach, Behaviour::Grasp,
                                 Behaviour::Retract};

bool phase_done(Behaviour b, const WorldState& s) {
  switch (b) {
    case Behaviour::Approach: return world::approach_done(s);
    case Behaviour::Grasp: return world::grasp_done(s);
    case Behaviour::Retract: return world::retract_done(s);
  }
  return false;
}

PhaseLabel phase_of(Behaviour b) {
  switch (b) {
    case Behaviour::Approach: return PhaseLabel::A;
    case Behaviour::Grasp: return PhaseLabel::B;
    case Behaviour::Retract: return PhaseLabel::C;
  }
  return PhaseLabel::A;
}

Eigen::VectorXd draw_noise(Rng& rng, int k) {
  Eigen::VectorXd n(k);
  for (int i = 0; i < k; ++i) n(i) = normal01(rng);
  return n;
}

// Fraction of the ridge solution used as the warm start; 1.0 starts the
// head at the closed-form optimum, smaller values leave proportionally
// more of the fit to online cloning.
constexpr double kPriorScale = 0.55;

// Closed-form warm start of the target behaviour's mu readout, fitted at
// phase start: ridge regression of the (pre-squash) demonstration targets
// on the features as they are NOW, over states drawn from jittered expert
// rollouts. A linear head over fixed features is exactly a least-squares
// problem, so solving it before online training removes the fitting
// transient in which large coherent cloning residuals backpropagate into
// the shared trunk and rewrite the features the earlier behaviours depend
// on. Fitting per phase (rather than once at net init) keeps the warm
// start matched to whatever feature drift the earlier phases caused.
// Online cloning afterwards only tracks the small residual.
void fit_head_prior(BehaviourNet& net, Behaviour target, Rng& rng) {
  struct Sample {
    Eigen::VectorXd feat;
    Eigen::VectorXd mu;
  };
  std::vector<Sample> data;
  const double j = 0.2;  // action jitter spreading the demonstration states
  const experts::ExpertGains gains{};
  for (int ep = 0; ep < 60; ++ep) {
    WorldState s = world::reset(rng());
    WorldState prev = s;
    for (Behaviour ph : kOrder) {
      int steps = 0;
      while (steps < world::kPhaseStepBudget && !phase_done(ph, s)) {
        const Observation obs = world::observe(s, prev);
        if (ph == target) {
          const Eigen::VectorXd t = expert_target(ph, s, gains);
          nn::Tape tape;
          Eigen::VectorXd f = tape.value(net.features(tape, obs));
          // pre-squash target; demonstrations stay within +-0.95 by design
          Eigen::VectorXd mu = t.unaryExpr(
              [](double v) { return std::atanh(std::clamp(v, -0.999, 0.999)); });
          data.push_back({std::move(f), std::move(mu)});
        }
        Action act = expert_action(ph, s, gains);
        act.dpos +=
            Vec3(normal01(rng), normal01(rng), normal01(rng)) * (j * Limits::dpos_max);
        act.dyaw += normal01(rng) * j * Limits::dyaw_max;
        prev = s;
        s = world::step(s, act);
        ++steps;
      }
      if (!phase_done(ph, s)) break;
      if (ph == target) break;  // later phases carry no target demonstrations
    }
  }
  const long n = static_cast<long>(data.size());
  if (n < 64) return;  // not enough demonstrations to fit a prior
  const long F = 128;
  const long k = action_dim(target);
  Eigen::MatrixXd A(n, F + 1);
  Eigen::MatrixXd Y(n, k);
  for (long i = 0; i < n; ++i) {
    A.row(i).head(F) = data[i].feat.transpose();
    A(i, F) = 1.0;
    Y.row(i) = data[i].mu.transpose();
  }
  Eigen::MatrixXd G = A.transpose() * A;
  G.diagonal().array() += 1e-3 * static_cast<double>(n);
  const Eigen::MatrixXd W = G.ldlt().solve(A.transpose() * Y);  // (F+1) x k
  auto& HW = net.store.at(BehaviourNet::head(target).name + ".W").value;
  auto& Hb = net.store.at(BehaviourNet::head(target).name + ".b").value;
  for (long d = 0; d < k; ++d) {
    HW.row(d) = kPriorScale * W.col(d).head(F).transpose();
    Hb(d, 0) = kPriorScale * W(F, d);
  }
}

Action net_action(BehaviourNet& net, Behaviour b, const Observation& obs,
                  const WorldState& s, Rng& rng) {
  nn::Tape tape;
  auto sm = net.sample(tape, b, obs, draw_noise(rng, action_dim(b)));
  return to_world_action(b, sm.action, s);
}

// Exploration floor applied when a trained behaviour acts as a scaffold
// inside a training episode. A behaviour reused during training runs as
// the stochastic policy it is, and never below the exploration level its
// own training started from; a hand-engineered scaffold runs noise-free.
// This keeps the reliability gap between learned and scripted scaffolds
// visible: a converged head's sigma collapses far below its exploration
// init, and with it every difference between the two scaffold kinds.
// Evaluation (phase (d), the choreographer) uses the learned sigma
// unchanged.
constexpr double kScaffoldSigmaFloor = 0.2;

Action scaffold_net_action(BehaviourNet& net, Behaviour b, const Observation& obs,
                           const WorldState& s, Rng& rng) {
  nn::Tape tape;
  const Eigen::VectorXd raw =
      tape.value(BehaviourNet::head(b).forward(tape, net.store, net.features(tape, obs)));
  const long k = action_dim(b);
  Eigen::VectorXd a(k);
  for (long d = 0; d < k; ++d) {
    const double sigma =
        std::max(kScaffoldSigmaFloor, std::exp(std::clamp(raw(k + d), -5.0, 2.0)));
    a(d) = std::tanh(raw(d) + sigma * normal01(rng));
  }
  return to_world_action(b, a, s);
}

// One training episode: scaffold phases per plan up to the target phase,
// then the target behaviour with one BC gradient step per environment
// step. The logged outcome is whether the target phase predicate was
// reached; a scaffold phase that fails its predicate therefore counts as
// a failed episode, so scaffold quality is priced into the success window
// rather than hidden from it.
bool run_training_episode(BehaviourNet& net, Behaviour target,
                          const StrategyPlan& plan, Rng& rng,
                          const TrainOptions& opts,
                          std::map<Behaviour, ControllerKind>& scaffold_used) {
  WorldState s = world::reset(rng());
  WorldState prev = s;
  for (Behaviour ph : kOrder) {
    int steps = 0;
    while (steps < world::kPhaseStepBudget && !phase_done(ph, s)) {
      const Observation obs = world::observe(s, prev);
      Action act;
      if (ph == target) {
        nn::Tape tape;
        auto sm = net.sample(tape, ph, obs, draw_noise(rng, action_dim(ph)));
        const Eigen::VectorXd tgt = expert_target(ph, s, opts.gains);
        net.store.zero_grads();
        tape.backward(tape.sum_sq_diff(sm.action_var, tgt));
        net.store.apply_gradients(opts.lr);
        act = to_world_action(ph, sm.action, s);
      } else {
        const ControllerKind kind = plan.scaffold(target, ph);
        scaffold_used[ph] = kind;
        act = (kind == ControllerKind::Expert)
                  ? expert_action(ph, s, opts.gains)
                  : scaffold_net_action(net, ph, obs, s, rng);
      }
      prev = s;
      s = world::step(s, act);
      ++steps;
    }
    if (ph == target) return phase_done(ph, s);
    if (!phase_done(ph, s)) return false;  // scaffold failed; episode over
  }
  return false;  // target phase never reached
}

bool run_sequenced_net_episode(BehaviourNet& net, std::uint64_t seed, Rng& noise_rng) {
  WorldState s = world::reset(seed);
  WorldState prev = s;
  for (Behaviour ph : kOrder) {
    int steps = 0;
    while (steps < world::kPhaseStepBudget && !phase_done(ph, s)) {
      const Observation obs = world::observe(s, prev);
      const Action act = net_action(net, ph, obs, s, noise_rng);
      prev = s;
      s = world::step(s, act);
      ++steps;
    }
  }
  return world::task_success(s);
}

}  // namespace

PhaseResult train_behaviour(BehaviourNet& net, Behaviour target,
                            const StrategyPlan& plan, long episode_budget,
                            Rng& rng, const TrainOptions& opts,
                            TrainingLog& log, long episode_offset) {
  PhaseResult pr;
  fit_head_prior(net, target, rng);
  SuccessWindow window(opts.window);
  double best_window = -1.0;
  int since_best = 0;
  for (long e = 0; e < episode_budget; ++e) {
    const bool success =
        run_training_episode(net, target, plan, rng, opts, pr.scaffold_used);
    window.push(success);
    log.curve.push_back({episode_offset + e + 1, window.rate(), phase_of(target)});
    pr.episodes = e + 1;
    // The phase ends when the success window reaches its maximum: a full
    // window at 1.0, or no improvement in the best window rate for
    // stall_patience episodes. Both are normal completions; only budget
    // exhaustion leaves the phase incomplete.
    if (window.full() && window.rate() >= 1.0) {
      pr.completed = true;
      break;
    }
    if (window.rate() > best_window + 1e-12) {
      best_window = window.rate();
      since_best = 0;
    } else if (++since_best >= opts.stall_patience) {
      pr.completed = true;
      break;
    }
  }
  log.episodes_used += pr.episodes;
  return pr;
}

namespace {

// End-to-end baseline: one 28->128->128->6 network cloned against the
// expert of whichever phase the world currently requires, controlling
// x,y,z only (no yaw).
struct E2eNet {
  nn::ParameterStore store;
  static const nn::Dense& head() {
    static const nn::Dense d{"head.e2e", {128, 6, nn::Activation::Identity}};
    return d;
  }
  void init(Rng& rng) {
    init_feature_stack(store, rng);
    head().init(store, rng);
    init_zero_head(store, head());
  }
};

Behaviour required_of(const WorldState& s) { return required_behaviour(s); }

Action e2e_world_action(const Eigen::VectorXd& a, const WorldState& s) {
  Action act;
  act.dpos = Vec3(a(0), a(1), a(2)) * Limits::dpos_max;
  act.dyaw = 0.0;
  const bool near = (s.gripper_pos - s.block_pos).norm() < Thresholds::grasp;
  const bool aligned =
      std::abs(world::wrap_angle(s.gripper_yaw - s.block_yaw)) < Thresholds::attach_yaw;
  act.daperture = (s.attached || (near && aligned)) ? -Limits::daperture_max : 0.0;
  return act;
}

StrategyLog run_end_to_end(long episode_budget, Rng& rng, const TrainOptions& opts) {
  StrategyLog out;
  out.strategy = Strategy::EndToEnd;
  E2eNet net;
  net.init(rng);
  SuccessWindow window(opts.window);
  double best = -1.0;
  int since_best = 0;
  long used = 0;
  for (long e = 0; e < episode_budget; ++e) {
    WorldState s = world::reset(rng());
    WorldState prev = s;
    for (int t = 0; t < world::kEpisodeStepBudget && !world::task_success(s); ++t) {
      const Observation obs = world::observe(s, prev);
      nn::Tape tape;
      nn::Tape::Var x = tape.input(world::normalized(obs));
      nn::Tape::Var feat = BehaviourNet::fc2().forward(
          tape, net.store, BehaviourNet::fc1().forward(tape, net.store, x));
      nn::Tape::Var raw = E2eNet::head().forward(tape, net.store, feat);
      nn::GaussianSample gs = nn::sample_squashed_gaussian(tape, raw, draw_noise(rng, 3));
      const Action ref = expert_action(required_of(s), s, opts.gains);
      Eigen::VectorXd tgt(3);
      tgt << ref.dpos.x() / Limits::dpos_max, ref.dpos.y() / Limits::dpos_max,
          ref.dpos.z() / Limits::dpos_max;
      net.store.zero_grads();
      tape.backward(tape.sum_sq_diff(gs.action, tgt));
      net.store.apply_gradients(opts.lr);
      const Action act = e2e_world_action(tape.value(gs.action), s);
      prev = s;
      s = world::step(s, act);
    }
    window.push(world::task_success(s));
    out.log.curve.push_back({e + 1, window.rate(), PhaseLabel::D});
    used = e + 1;
    if (window.full() && window.rate() >= 1.0) {
      out.completed = true;
      break;
    }
    if (window.rate() > best + 1e-12) {
      best = window.rate();
      since_best = 0;
    } else if (++since_best >= opts.stall_patience) {
      break;
    }
  }
  out.log.episodes_used = used;
  out.total_episodes = used;
  out.checkpoint = net.store.serialize();
  return out;
}

}  // namespace

world::Action sampled_action(BehaviourNet& net, Behaviour b, const Observation& obs,
                             const WorldState& s, Rng& rng) {
  return net_action(net, b, obs, s, rng);
}

Behaviour required_behaviour(const WorldState& s) {
  if (world::grasp_done(s)) return Behaviour::Retract;
  if ((s.gripper_pos - s.block_pos).norm() <= 0.06) return Behaviour::Grasp;
  return Behaviour::Approach;
}

StrategyLog run_strategy(const StrategyPlan& plan, long episode_budget,
                         std::uint64_t seed, const TrainOptions& opts) {
  Rng rng(seed);
  if (plan.id == Strategy::EndToEnd) return run_end_to_end(episode_budget, rng, opts);

  StrategyLog out;
  out.strategy = plan.id;
  BehaviourNet net;
  net.init(rng);
  long used = 0;
  bool all_completed = true;
  for (int i = 0; i < 3; ++i) {
    const Behaviour b = kOrder[i];
    out.phases[i] =
        train_behaviour(net, b, plan, episode_budget - used, rng, opts, out.log, used);
    used += out.phases[i].episodes;
    all_completed = all_completed && out.phases[i].completed;
    if (b == Behaviour::Approach) {
      if (plan.freezes()) net.store.freeze("features");
      out.feature_bytes_after_a = net.store.serialize("features");
    }
  }
  out.feature_bytes_after_c = net.store.serialize("features");

  // Phase (d): manual combination of the trained behaviours.
  SuccessWindow window(opts.window);
  const long d_budget = std::min<long>(opts.eval_episodes, episode_budget - used);
  for (long e = 0; e < d_budget; ++e) {
    const bool success = run_sequenced_net_episode(net, rng(), rng);
    window.push(success);
    out.log.curve.push_back({used + e + 1, window.rate(), PhaseLabel::D});
  }
  used += d_budget;

  out.completed = all_completed;
  out.total_episodes = used;
  out.log.episodes_used = used;
  out.log.completed = all_completed;
  out.checkpoint = net.store.serialize();
  return out;
}

double evaluate_combined(BehaviourNet& net, const std::vector<std::uint64_t>& seeds,
                         Rng& noise_rng) {
  if (seeds.empty())
    throw std::invalid_argument("evaluate_combined: empty seed list");
  long ok = 0;
  for (std::uint64_t seed : seeds)
    if (run_sequenced_net_episode(net, seed, noise_rng)) ++ok;
  return static_cast<double>(ok) / static_cast<double>(seeds.size());
}

bool run_expert_episode(std::uint64_t seed, const experts::ExpertGains& gains) {
  WorldState s = world::reset(seed);
  for (Behaviour ph : kOrder) {
    int steps = 0;
    while (steps < world::kPhaseStepBudget && !phase_done(ph, s)) {
      s = world::step(s, expert_action(ph, s, gains));
      ++steps;
    }
  }
  return world::task_success(s);
}

double expert_chain_success(long episodes, std::uint64_t seed0,
                            const experts::ExpertGains& gains) {
  long ok = 0;
  for (long i = 0; i < episodes; ++i)
    if (run_expert_episode(seed0 + static_cast<std::uint64_t>(i), gains)) ++ok;
  return static_cast<double>(ok) / static_cast<double>(episodes);
}

}  // namespace choreo::behaviours
