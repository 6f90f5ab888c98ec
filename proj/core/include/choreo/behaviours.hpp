#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "choreo/experts.hpp"
#include "choreo/log.hpp"
#include "choreo/nn/layers.hpp"
#include "choreo/world.hpp"

namespace choreo::behaviours {

enum class Behaviour { Approach = 0, Grasp = 1, Retract = 2 };

constexpr int action_dim(Behaviour b) { return b == Behaviour::Grasp ? 4 : 3; }
const char* behaviour_name(Behaviour b);

// Shared 28->128->128 tanh feature stack plus one Gaussian head per
// behaviour (approach/retract: 6 outputs for mu,log_sigma over dx,dy,dz;
// grasp: 8 outputs, adding dyaw).
struct BehaviourNet {
  nn::ParameterStore store;

  void init(Rng& rng);

  nn::Tape::Var features(nn::Tape& tape, const world::Observation& obs);

  struct Sampled {
    nn::Tape::Var action_var;
    Eigen::VectorXd action;  // in (-1,1)^k
  };
  Sampled sample(nn::Tape& tape, Behaviour b, const world::Observation& obs,
                 const Eigen::VectorXd& noise);

  static const nn::Dense& fc1();
  static const nn::Dense& fc2();
  static const nn::Dense& head(Behaviour b);
};

// One stochastic action from behaviour b's head (noise drawn from rng),
// mapped to a world action.
world::Action sampled_action(BehaviourNet& net, Behaviour b,
                             const world::Observation& obs,
                             const world::WorldState& s, Rng& rng);

// Normalized net output -> world action. Aperture is rule-based per
// behaviour: approach keeps it open, grasp closes it when the gripper is
// on the block and yaw-aligned, retract holds it closed.
world::Action to_world_action(Behaviour b, const Eigen::VectorXd& a,
                              const world::WorldState& s);

// Expert action for behaviour b, normalized to [-1,1]^k by the clamp limits.
Eigen::VectorXd expert_target(Behaviour b, const world::WorldState& s,
                              const experts::ExpertGains& gains);
world::Action expert_action(Behaviour b, const world::WorldState& s,
                            const experts::ExpertGains& gains);

// The behaviour the world currently calls for: retract once the block is
// held, grasp when the gripper is at or below the hover point, approach
// otherwise.
Behaviour required_behaviour(const world::WorldState& s);

// Eq.-1 style loss value on plain vectors (the training path builds the
// same quantity on the tape).
double bc_loss(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target);

enum class Strategy { Sequential, SequentialFreezing, Separate, SeparateFreezing, EndToEnd };
enum class ControllerKind { Expert, Net };

const char* strategy_name(Strategy s);
std::optional<Strategy> strategy_from_name(const std::string& name);

// Which controller runs behaviour `other` while `trained` is being
// learned, plus when the feature extractor is frozen.
struct StrategyPlan {
  Strategy id;

  static StrategyPlan make(Strategy s) { return {s}; }
  ControllerKind scaffold(Behaviour trained, Behaviour other) const;
  bool freezes() const {
    return id == Strategy::SequentialFreezing || id == Strategy::SeparateFreezing;
  }
};

struct TrainOptions {
  double lr = 3e-4;
  int window = 100;
  // Training stops when the success window reaches its maximum: either the
  // window hits 1.0, or the best window rate has not improved for this many
  // episodes. A scaffold phase that fails its predicate makes the whole
  // episode a failure, so an imperfect learned scaffold caps the window
  // below 1.0 and pushes the phase onto the no-improvement stop instead.
  int stall_patience = 1000;
  int eval_episodes = 1000;  // phase (d) evaluation episodes
  experts::ExpertGains gains{};
};

// One strategy phase: online BC on the target behaviour while the
// scaffolds drive the other phases. Appends curve points at
// episode_offset+1.. and returns episodes used.
struct PhaseResult {
  long episodes = 0;
  bool completed = false;
  // controller sources used for the other behaviours, for trace checks
  std::map<Behaviour, ControllerKind> scaffold_used;
};
PhaseResult train_behaviour(BehaviourNet& net, Behaviour target,
                            const StrategyPlan& plan, long episode_budget,
                            Rng& rng, const TrainOptions& opts,
                            TrainingLog& log, long episode_offset);

struct StrategyLog {
  Strategy strategy;
  TrainingLog log;                      // phases a,b,c then d (or d only for EndToEnd)
  bool completed = false;               // all behaviour phases reached window 1.0
  long total_episodes = 0;
  std::array<PhaseResult, 3> phases{};  // unused for EndToEnd
  std::string feature_bytes_after_a;    // feature-extractor checkpoint bytes
  std::string feature_bytes_after_c;
  std::string checkpoint;               // full net checkpoint bytes at end
};

StrategyLog run_strategy(const StrategyPlan& plan, long episode_budget,
                         std::uint64_t seed, const TrainOptions& opts = {});

// Fraction of task_success over one manually-sequenced episode per seed.
// Throws std::invalid_argument on an empty seed list.
double evaluate_combined(BehaviourNet& net, const std::vector<std::uint64_t>& seeds,
                         Rng& noise_rng);

// Scripted expert chain through the three phases; the demonstration
// distribution every BC run regresses onto.
bool run_expert_episode(std::uint64_t seed, const experts::ExpertGains& gains = {});
double expert_chain_success(long episodes, std::uint64_t seed0 = 1,
                            const experts::ExpertGains& gains = {});

}  // namespace choreo::behaviours
