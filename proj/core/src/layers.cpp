#include "choreo/nn/layers.hpp"

#include <stdexcept>

namespace choreo::nn {

void Dense::init(ParameterStore& store, Rng& rng) const {
  store.add_matrix(name + ".W", spec.out_dim, spec.in_dim, rng);
  store.add_vector(name + ".b", spec.out_dim);
}

Tape::Var Dense::forward(Tape& tape, ParameterStore& store, Tape::Var x) const {
  Tape::Var y = tape.affine(store.at(name + ".W"), store.at(name + ".b"), x);
  return spec.act == Activation::Tanh ? tape.tanh(y) : y;
}

void Lstm::init(ParameterStore& store, Rng& rng) const {
  const long h = spec.hidden_dim;
  store.add_matrix(name + ".Wx", 4 * h, spec.in_dim, rng);
  store.add_matrix(name + ".Wh", 4 * h, h, rng);
  Tensor& b = store.add_vector(name + ".b", 4 * h);
  b.value.col(0).segment(h, h).setOnes();  // forget gate bias
}

Lstm::StateVars Lstm::forward(Tape& tape, ParameterStore& store, Tape::Var x,
                              Tape::Var h, Tape::Var c) const {
  const long H = spec.hidden_dim;
  Tape::Var pre = tape.add(
      tape.add(tape.matvec(store.at(name + ".Wx"), x),
               tape.matvec(store.at(name + ".Wh"), h)),
      tape.param_vec(store.at(name + ".b")));
  Tape::Var i = tape.sigmoid(tape.slice(pre, 0, H));
  Tape::Var f = tape.sigmoid(tape.slice(pre, H, H));
  Tape::Var g = tape.tanh(tape.slice(pre, 2 * H, H));
  Tape::Var o = tape.sigmoid(tape.slice(pre, 3 * H, H));
  Tape::Var c_next = tape.add(tape.mul(f, c), tape.mul(i, g));
  Tape::Var h_next = tape.mul(o, tape.tanh(c_next));
  return {h_next, c_next};
}

GaussianSample sample_squashed_gaussian(Tape& tape, Tape::Var head_out_raw,
                                        const Eigen::VectorXd& noise) {
  const long n = tape.value(head_out_raw).size();
  if (n % 2 != 0 || n / 2 != noise.size())
    throw std::invalid_argument("sample_squashed_gaussian: bad dimensions");
  const long k = n / 2;
  Tape::Var mu = tape.slice(head_out_raw, 0, k);
  Tape::Var log_sigma = tape.clamp(tape.slice(head_out_raw, k, k), kLogSigmaMin, kLogSigmaMax);
  Tape::Var sigma = tape.exp(log_sigma);
  Tape::Var a = tape.tanh(tape.add(mu, tape.mul_const(sigma, noise)));
  return {a, mu, log_sigma};
}

}  // namespace choreo::nn
