#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "choreo/nn/tensor.hpp"

namespace choreo::oracles {

// Central finite differences over every entry of every tensor in the
// store, compared against the gradients currently held in Tensor::grad.
// `loss_value` must recompute the forward loss from the store's current
// values. Returns the worst mixed relative error
// |fd - an| / max(1, |fd|, |an|).
double fd_max_rel_err(nn::ParameterStore& store,
                      const std::function<double()>& loss_value,
                      double eps = 1e-6);

// O(n^2) reference implementations.
std::vector<double> discounted_return_bruteforce(const std::vector<double>& rewards,
                                                 double gamma);
std::vector<double> gae_bruteforce(const std::vector<double>& rewards,
                                   const std::vector<double>& values,
                                   const std::vector<bool>& terminals, double gamma,
                                   double lambda);

struct OracleReport {
  std::vector<std::pair<std::string, bool>> checks;
  bool all_pass = true;
};

// Gradient checks (dense stack, LSTM over two steps, squashed-Gaussian
// head, full actor-critic loss) at 1e-5 relative tolerance plus
// GAE/return brute-force equivalence at 1e-10 absolute, each over
// `draws` random draws.
OracleReport run_oracle_suite(int draws = 100, std::uint64_t seed = 1234);

}  // namespace choreo::oracles
