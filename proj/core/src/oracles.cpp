#include "choreo/oracles.hpp"

#include <cmath>

#include "choreo/choreographer.hpp"
#include "choreo/nn/layers.hpp"
#include "choreo/nn/tape.hpp"
#include "choreo/rng.hpp"

namespace choreo::oracles {

double fd_max_rel_err(nn::ParameterStore& store,
                      const std::function<double()>& loss_value, double eps) {
  // Snapshot analytic gradients before perturbing anything.
  std::vector<std::pair<std::string, Eigen::MatrixXd>> analytic;
  store.for_each([&](const std::string& name, const nn::Tensor& t) {
    analytic.emplace_back(name, t.grad);
  });
  double worst = 0.0;
  for (const auto& [name, grad] : analytic) {
    nn::Tensor& t = store.at(name);
    for (long i = 0; i < t.rows(); ++i)
      for (long j = 0; j < t.cols(); ++j) {
        const double saved = t.value(i, j);
        t.value(i, j) = saved + eps;
        const double lp = loss_value();
        t.value(i, j) = saved - eps;
        const double lm = loss_value();
        t.value(i, j) = saved;
        const double fd = (lp - lm) / (2.0 * eps);
        const double an = grad(i, j);
        const double rel =
            std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
        worst = std::max(worst, rel);
      }
  }
  return worst;
}

std::vector<double> discounted_return_bruteforce(const std::vector<double>& rewards,
                                                 double gamma) {
  const std::size_t n = rewards.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    double g = 1.0;
    for (std::size_t i = t; i < n; ++i) {
      acc += g * rewards[i];
      g *= gamma;
    }
    out[t] = acc;
  }
  return out;
}

std::vector<double> gae_bruteforce(const std::vector<double>& rewards,
                                   const std::vector<double>& values,
                                   const std::vector<bool>& terminals, double gamma,
                                   double lambda) {
  const std::size_t n = rewards.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    double w = 1.0;
    for (std::size_t i = t; i < n; ++i) {
      const double not_term = terminals[i] ? 0.0 : 1.0;
      const double delta = rewards[i] + gamma * values[i + 1] * not_term - values[i];
      acc += w * delta;
      if (terminals[i]) break;
      w *= gamma * lambda;
    }
    out[t] = acc;
  }
  return out;
}

namespace {

using nn::Activation;
using nn::Dense;
using nn::Lstm;
using nn::ParameterStore;
using nn::Tape;

Eigen::VectorXd randn_vec(Rng& rng, long n) {
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i) v(i) = normal01(rng);
  return v;
}

bool dense_gradcheck(int draws, Rng& rng, double tol) {
  const Dense fc1{"fc1", {6, 8, Activation::Tanh}};
  const Dense fc2{"fc2", {8, 8, Activation::Tanh}};
  const Dense out{"out", {8, 1, Activation::Identity}};
  for (int d = 0; d < draws; ++d) {
    ParameterStore store;
    fc1.init(store, rng);
    fc2.init(store, rng);
    out.init(store, rng);
    const Eigen::VectorXd x = randn_vec(rng, 6);
    const Eigen::VectorXd target = randn_vec(rng, 1);
    auto loss = [&] {
      Tape tape;
      Tape::Var y = out.forward(tape, store,
                                fc2.forward(tape, store, fc1.forward(tape, store, tape.input(x))));
      return tape.scalar(tape.sum_sq_diff(y, target));
    };
    {
      Tape tape;
      Tape::Var y = out.forward(tape, store,
                                fc2.forward(tape, store, fc1.forward(tape, store, tape.input(x))));
      store.zero_grads();
      tape.backward(tape.sum_sq_diff(y, target));
    }
    if (fd_max_rel_err(store, loss) > tol) return false;
  }
  return true;
}

bool lstm_gradcheck(int draws, Rng& rng, double tol) {
  const Lstm cell{"cell", {4, 5}};
  for (int d = 0; d < draws; ++d) {
    ParameterStore store;
    cell.init(store, rng);
    const Eigen::VectorXd x0 = randn_vec(rng, 4);
    const Eigen::VectorXd x1 = randn_vec(rng, 4);
    const Eigen::VectorXd target = randn_vec(rng, 5);
    auto build = [&](Tape& tape) {
      Tape::Var h = tape.input(Eigen::VectorXd::Zero(5));
      Tape::Var c = tape.input(Eigen::VectorXd::Zero(5));
      auto s1 = cell.forward(tape, store, tape.input(x0), h, c);
      auto s2 = cell.forward(tape, store, tape.input(x1), s1.h, s1.c);
      return tape.sum_sq_diff(s2.h, target);
    };
    auto loss = [&] {
      Tape tape;
      return tape.scalar(build(tape));
    };
    {
      Tape tape;
      store.zero_grads();
      tape.backward(build(tape));
    }
    if (fd_max_rel_err(store, loss) > tol) return false;
  }
  return true;
}

bool gaussian_head_gradcheck(int draws, Rng& rng, double tol) {
  const Dense feat{"feat", {5, 6, Activation::Tanh}};
  const Dense head{"head", {6, 8, Activation::Identity}};
  for (int d = 0; d < draws; ++d) {
    ParameterStore store;
    feat.init(store, rng);
    head.init(store, rng);
    const Eigen::VectorXd x = randn_vec(rng, 5);
    const Eigen::VectorXd noise = randn_vec(rng, 4);
    Eigen::VectorXd target = randn_vec(rng, 4);
    target = target.array().tanh();
    auto build = [&](Tape& tape) {
      Tape::Var raw =
          head.forward(tape, store, feat.forward(tape, store, tape.input(x)));
      nn::GaussianSample gs = nn::sample_squashed_gaussian(tape, raw, noise);
      return tape.sum_sq_diff(gs.action, target);
    };
    auto loss = [&] {
      Tape tape;
      return tape.scalar(build(tape));
    };
    {
      Tape tape;
      store.zero_grads();
      tape.backward(build(tape));
    }
    if (fd_max_rel_err(store, loss) > tol) return false;
  }
  return true;
}

// Miniature version of the choreographer loss: dense features, an LSTM
// chain over three steps, per-step policy/value/entropy terms.
bool actor_critic_gradcheck(int draws, Rng& rng, double tol) {
  const Dense feat{"feat", {5, 6, Activation::Tanh}};
  const Lstm cell{"cell", {6, 4}};
  const Dense policy{"policy", {4, 3, Activation::Identity}};
  const Dense value{"value", {4, 1, Activation::Identity}};
  const int T = 3;
  for (int d = 0; d < draws; ++d) {
    ParameterStore store;
    feat.init(store, rng);
    cell.init(store, rng);
    policy.init(store, rng);
    value.init(store, rng);
    std::vector<Eigen::VectorXd> obs;
    std::vector<int> chosen;
    std::vector<double> adv, vtarget;
    for (int t = 0; t < T; ++t) {
      obs.push_back(randn_vec(rng, 5));
      chosen.push_back(static_cast<int>(rng() % 3));
      adv.push_back(normal01(rng));
      vtarget.push_back(normal01(rng));
    }
    auto build = [&](Tape& tape) {
      Tape::Var h = tape.input(Eigen::VectorXd::Zero(4));
      Tape::Var c = tape.input(Eigen::VectorXd::Zero(4));
      std::vector<Tape::Var> scalars;
      std::vector<double> weights;
      for (int t = 0; t < T; ++t) {
        Tape::Var f = feat.forward(tape, store, tape.input(obs[t]));
        auto st = cell.forward(tape, store, f, h, c);
        h = st.h;
        c = st.c;
        Tape::Var logp = tape.log_softmax(policy.forward(tape, store, st.h));
        scalars.push_back(tape.pick(logp, chosen[t]));
        weights.push_back(-adv[t]);
        Eigen::VectorXd tv(1);
        tv(0) = vtarget[t];
        scalars.push_back(
            tape.sum_sq_diff(tape.pick(value.forward(tape, store, st.h), 0), tv));
        weights.push_back(0.5);
        scalars.push_back(
            tape.scale(tape.sum(tape.mul(tape.exp(logp), logp)), -1.0));
        weights.push_back(-0.01);
      }
      return tape.weighted_sum(scalars, weights);
    };
    auto loss = [&] {
      Tape tape;
      return tape.scalar(build(tape));
    };
    {
      Tape tape;
      store.zero_grads();
      tape.backward(build(tape));
    }
    if (fd_max_rel_err(store, loss) > tol) return false;
  }
  return true;
}

bool return_bruteforce_check(int draws, Rng& rng, double tol_abs) {
  for (int d = 0; d < draws; ++d) {
    const std::size_t n = 1 + rng() % 150;
    std::vector<double> rewards(n);
    for (auto& r : rewards) r = normal01(rng);
    const double gamma = uniform01(rng);
    const auto fast = choreographer::discounted_return(rewards, gamma);
    const auto slow = discounted_return_bruteforce(rewards, gamma);
    for (std::size_t t = 0; t < n; ++t)
      if (std::abs(fast[t] - slow[t]) > tol_abs) return false;
  }
  return true;
}

bool gae_bruteforce_check(int draws, Rng& rng, double tol_abs) {
  for (int d = 0; d < draws; ++d) {
    const std::size_t n = 1 + rng() % 150;
    std::vector<double> rewards(n), values(n + 1);
    std::vector<bool> terminals(n);
    for (auto& r : rewards) r = normal01(rng);
    for (auto& v : values) v = normal01(rng);
    for (std::size_t t = 0; t < n; ++t) terminals[t] = (uniform01(rng) < 0.1);
    const double gamma = uniform01(rng);
    const double lambda = uniform01(rng);
    const auto fast = choreographer::gae(rewards, values, terminals, gamma, lambda);
    const auto slow = gae_bruteforce(rewards, values, terminals, gamma, lambda);
    for (std::size_t t = 0; t < n; ++t)
      if (std::abs(fast[t] - slow[t]) > tol_abs) return false;
  }
  return true;
}

}  // namespace

OracleReport run_oracle_suite(int draws, std::uint64_t seed) {
  Rng rng(seed);
  constexpr double kGradTol = 1e-5;
  constexpr double kSumTol = 1e-10;
  OracleReport report;
  auto add = [&](const std::string& name, bool ok) {
    report.checks.emplace_back(name, ok);
    report.all_pass = report.all_pass && ok;
  };
  add("gradcheck.dense", dense_gradcheck(draws, rng, kGradTol));
  add("gradcheck.lstm", lstm_gradcheck(draws, rng, kGradTol));
  add("gradcheck.gaussian_head", gaussian_head_gradcheck(draws, rng, kGradTol));
  add("gradcheck.actor_critic", actor_critic_gradcheck(draws, rng, kGradTol));
  add("bruteforce.discounted_return", return_bruteforce_check(draws, rng, kSumTol));
  add("bruteforce.gae", gae_bruteforce_check(draws, rng, kSumTol));
  return report;
}

}  // namespace choreo::oracles
