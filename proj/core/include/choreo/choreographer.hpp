#pragma once

#include <vector>

#include "choreo/behaviours.hpp"
#include "choreo/log.hpp"
#include "choreo/nn/layers.hpp"
#include "choreo/world.hpp"

namespace choreo::choreographer {

using behaviours::Behaviour;

enum class RewardMode { Dense, Sparse };

// Frozen 28->128->128 feature stack (copied from a behaviour checkpoint),
// LSTM(32), 3-way policy logits and a scalar state value.
struct ChoreographerNet {
  nn::ParameterStore store;

  static const nn::Lstm& lstm();
  static const nn::Dense& policy_head();
  static const nn::Dense& value_head();

  // Copies "features.*" out of a behaviour checkpoint and freezes them.
  void init(const std::string& behaviour_checkpoint_bytes, Rng& rng);

  struct LstmState {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(32);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(32);
  };
};

struct RolloutStep {
  world::Observation obs;
  ChoreographerNet::LstmState state_before;
  int chosen = 0;
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  bool terminal = false;
};

struct SelectResult {
  int behaviour = 0;
  double log_prob = 0.0;
  double value = 0.0;
  ChoreographerNet::LstmState state_after;
};

SelectResult select_behaviour(ChoreographerNet& net, const world::Observation& obs,
                              const ChoreographerNet::LstmState& state, Rng& rng);

// R_t = sum_{i=t}^{T} gamma^(i-t) r_i, computed backward.
std::vector<double> discounted_return(const std::vector<double>& rewards, double gamma);

// delta_t = r_t + gamma * V_{t+1} * (1 - terminal_t) - V_t;
// A_t = sum_l (gamma*lambda)^l delta_{t+l} with terminal cuts.
// `values` carries one extra bootstrap entry.
std::vector<double> gae(const std::vector<double>& rewards,
                        const std::vector<double>& values,
                        const std::vector<bool>& terminals, double gamma,
                        double lambda);

double reward_dense(Behaviour required_before, int chosen, bool success_after);
double reward_sparse(bool success_after);

struct A2cCoefs {
  double lr = 1e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
};

struct LossParts {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double total = 0.0;
};

// One synchronous advantage actor-critic update over a whole episode,
// backpropagated through the LSTM (BPTT). Advantages are normalized per
// rollout and detached. Throws std::invalid_argument on an empty rollout.
LossParts a2c_update(ChoreographerNet& net, const std::vector<RolloutStep>& rollout,
                     double bootstrap_value, double gamma, double lambda,
                     const A2cCoefs& coefs);

struct ChoreoOptions {
  double gamma = 0.99;
  double lambda = 0.95;
  A2cCoefs coefs{};
  int window = 100;
};

TrainingLog train_choreographer(ChoreographerNet& net, behaviours::BehaviourNet& bnet,
                                RewardMode mode, long episode_budget,
                                std::uint64_t seed, const ChoreoOptions& opts = {});

}  // namespace choreo::choreographer
