#pragma once

#include <string>

#include "choreo/nn/tape.hpp"
#include "choreo/nn/tensor.hpp"

namespace choreo::nn {

enum class Activation { Tanh, Identity };

struct DenseSpec {
  long in_dim;
  long out_dim;
  Activation act = Activation::Tanh;
};

// Fully connected layer. Parameters live in a ParameterStore under
// "<name>.W" / "<name>.b".
struct Dense {
  std::string name;
  DenseSpec spec;

  void init(ParameterStore& store, Rng& rng) const;
  Tape::Var forward(Tape& tape, ParameterStore& store, Tape::Var x) const;
};

struct LstmSpec {
  long in_dim;
  long hidden_dim;
};

// Single LSTM cell with gate order (input, forget, candidate, output)
// stacked row-wise in "<name>.Wx", "<name>.Wh", "<name>.b". Forget-gate
// bias rows start at 1.
struct Lstm {
  std::string name;
  LstmSpec spec;

  struct StateVars {
    Tape::Var h;
    Tape::Var c;
  };

  void init(ParameterStore& store, Rng& rng) const;
  StateVars forward(Tape& tape, ParameterStore& store, Tape::Var x,
                    Tape::Var h, Tape::Var c) const;
};

// Squashed-Gaussian sample: a = tanh(mu + exp(clamp(log_sigma)) * noise),
// where the raw head output of size 2k splits into mu and log_sigma.
struct GaussianSample {
  Tape::Var action;  // k-vector, strictly inside (-1,1)^k
  Tape::Var mu;
  Tape::Var log_sigma;  // clamped to [-5, 2]
};

constexpr double kLogSigmaMin = -5.0;
constexpr double kLogSigmaMax = 2.0;

GaussianSample sample_squashed_gaussian(Tape& tape, Tape::Var head_out_raw,
                                        const Eigen::VectorXd& noise);

}  // namespace choreo::nn
