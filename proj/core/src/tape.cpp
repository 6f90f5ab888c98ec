#include "choreo/nn/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace choreo::nn {

namespace {
constexpr double kTanhBound = 1.0 - 1e-12;  // keep squashed samples strictly inside (-1,1)
}

Tape::Var Tape::push(Eigen::VectorXd val, std::function<void(Tape&)> back) {
  Node n;
  n.val = std::move(val);
  n.adj = Eigen::VectorXd::Zero(n.val.size());
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::input(const Eigen::VectorXd& v) { return push(v, {}); }

Tape::Var Tape::param_vec(Tensor& t) {
  Tensor* tp = &t;
  Var out = push(t.value.col(0), {});
  nodes_[out].back = [tp, out](Tape& tape) {
    if (!tp->frozen) tp->grad.col(0) += tape.adj(out);
  };
  return out;
}

Tape::Var Tape::matvec(Tensor& W, Var x) {
  Tensor* wp = &W;
  if (W.cols() != nodes_[x].val.size())
    throw std::invalid_argument("matvec: dimension mismatch");
  Var out = push(W.value * nodes_[x].val, {});
  nodes_[out].back = [wp, x, out](Tape& tape) {
    const Eigen::VectorXd& g = tape.adj(out);
    if (!wp->frozen) wp->grad.noalias() += g * tape.value(x).transpose();
    tape.adj(x).noalias() += wp->value.transpose() * g;
  };
  return out;
}

Tape::Var Tape::affine(Tensor& W, Tensor& b, Var x) {
  Tensor* wp = &W;
  Tensor* bp = &b;
  if (W.cols() != nodes_[x].val.size() || W.rows() != b.rows())
    throw std::invalid_argument("affine: dimension mismatch");
  Var out = push(W.value * nodes_[x].val + b.value.col(0), {});
  nodes_[out].back = [wp, bp, x, out](Tape& tape) {
    const Eigen::VectorXd& g = tape.adj(out);
    if (!wp->frozen) wp->grad.noalias() += g * tape.value(x).transpose();
    if (!bp->frozen) bp->grad.col(0) += g;
    tape.adj(x).noalias() += wp->value.transpose() * g;
  };
  return out;
}

Tape::Var Tape::add(Var a, Var b) {
  Var out = push(nodes_[a].val + nodes_[b].val, {});
  nodes_[out].back = [a, b, out](Tape& tape) {
    tape.adj(a) += tape.adj(out);
    tape.adj(b) += tape.adj(out);
  };
  return out;
}

Tape::Var Tape::sub(Var a, Var b) {
  Var out = push(nodes_[a].val - nodes_[b].val, {});
  nodes_[out].back = [a, b, out](Tape& tape) {
    tape.adj(a) += tape.adj(out);
    tape.adj(b) -= tape.adj(out);
  };
  return out;
}

Tape::Var Tape::mul(Var a, Var b) {
  Var out = push(nodes_[a].val.cwiseProduct(nodes_[b].val), {});
  nodes_[out].back = [a, b, out](Tape& tape) {
    tape.adj(a).array() += tape.adj(out).array() * tape.value(b).array();
    tape.adj(b).array() += tape.adj(out).array() * tape.value(a).array();
  };
  return out;
}

Tape::Var Tape::scale(Var a, double c) {
  Var out = push(nodes_[a].val * c, {});
  nodes_[out].back = [a, c, out](Tape& tape) { tape.adj(a) += c * tape.adj(out); };
  return out;
}

Tape::Var Tape::mul_const(Var a, const Eigen::VectorXd& c) {
  Var out = push(nodes_[a].val.cwiseProduct(c), {});
  Eigen::VectorXd cc = c;
  nodes_[out].back = [a, cc, out](Tape& tape) {
    tape.adj(a).array() += tape.adj(out).array() * cc.array();
  };
  return out;
}

Tape::Var Tape::tanh(Var a) {
  Eigen::VectorXd t = nodes_[a].val.array().tanh().min(kTanhBound).max(-kTanhBound);
  Var out = push(std::move(t), {});
  nodes_[out].back = [a, out](Tape& tape) {
    tape.adj(a).array() +=
        tape.adj(out).array() * (1.0 - tape.value(out).array().square());
  };
  return out;
}

Tape::Var Tape::sigmoid(Var a) {
  Eigen::VectorXd s = (1.0 / (1.0 + (-nodes_[a].val.array()).exp()));
  Var out = push(std::move(s), {});
  nodes_[out].back = [a, out](Tape& tape) {
    const auto& s = tape.value(out).array();
    tape.adj(a).array() += tape.adj(out).array() * s * (1.0 - s);
  };
  return out;
}

Tape::Var Tape::exp(Var a) {
  Var out = push(nodes_[a].val.array().exp(), {});
  nodes_[out].back = [a, out](Tape& tape) {
    tape.adj(a).array() += tape.adj(out).array() * tape.value(out).array();
  };
  return out;
}

Tape::Var Tape::clamp(Var a, double lo, double hi) {
  Var out = push(nodes_[a].val.array().min(hi).max(lo), {});
  nodes_[out].back = [a, lo, hi, out](Tape& tape) {
    const auto& x = tape.value(a).array();
    tape.adj(a).array() +=
        tape.adj(out).array() * ((x >= lo) && (x <= hi)).cast<double>();
  };
  return out;
}

Tape::Var Tape::slice(Var a, long start, long len) {
  if (start < 0 || len <= 0 || start + len > nodes_[a].val.size())
    throw std::invalid_argument("slice: out of range");
  Var out = push(nodes_[a].val.segment(start, len), {});
  nodes_[out].back = [a, start, len, out](Tape& tape) {
    tape.adj(a).segment(start, len) += tape.adj(out);
  };
  return out;
}

Tape::Var Tape::concat(Var a, Var b) {
  Eigen::VectorXd v(nodes_[a].val.size() + nodes_[b].val.size());
  v << nodes_[a].val, nodes_[b].val;
  const long na = nodes_[a].val.size();
  const long nb = nodes_[b].val.size();
  Var out = push(std::move(v), {});
  nodes_[out].back = [a, b, na, nb, out](Tape& tape) {
    tape.adj(a) += tape.adj(out).segment(0, na);
    tape.adj(b) += tape.adj(out).segment(na, nb);
  };
  return out;
}

Tape::Var Tape::sum(Var a) {
  Eigen::VectorXd s(1);
  s(0) = nodes_[a].val.sum();
  Var out = push(std::move(s), {});
  nodes_[out].back = [a, out](Tape& tape) {
    tape.adj(a).array() += tape.adj(out)(0);
  };
  return out;
}

Tape::Var Tape::sum_sq_diff(Var a, const Eigen::VectorXd& target) {
  if (nodes_[a].val.size() != target.size())
    throw std::invalid_argument("sum_sq_diff: dimension mismatch");
  Eigen::VectorXd s(1);
  s(0) = (nodes_[a].val - target).squaredNorm();
  Eigen::VectorXd t = target;
  Var out = push(std::move(s), {});
  nodes_[out].back = [a, t, out](Tape& tape) {
    tape.adj(a) += 2.0 * tape.adj(out)(0) * (tape.value(a) - t);
  };
  return out;
}

Tape::Var Tape::pick(Var a, long index) {
  if (index < 0 || index >= nodes_[a].val.size())
    throw std::invalid_argument("pick: out of range");
  Eigen::VectorXd s(1);
  s(0) = nodes_[a].val(index);
  Var out = push(std::move(s), {});
  nodes_[out].back = [a, index, out](Tape& tape) {
    tape.adj(a)(index) += tape.adj(out)(0);
  };
  return out;
}

Tape::Var Tape::weighted_sum(std::span<const Var> scalars,
                             std::span<const double> weights) {
  if (scalars.size() != weights.size())
    throw std::invalid_argument("weighted_sum: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i)
    acc += weights[i] * nodes_[scalars[i]].val(0);
  Eigen::VectorXd s(1);
  s(0) = acc;
  std::vector<Var> vs(scalars.begin(), scalars.end());
  std::vector<double> ws(weights.begin(), weights.end());
  Var out = push(std::move(s), {});
  nodes_[out].back = [vs, ws, out](Tape& tape) {
    const double g = tape.adj(out)(0);
    for (std::size_t i = 0; i < vs.size(); ++i) tape.adj(vs[i])(0) += ws[i] * g;
  };
  return out;
}

Tape::Var Tape::log_softmax(Var logits) {
  const Eigen::VectorXd& x = nodes_[logits].val;
  const double mx = x.maxCoeff();
  const double lse = mx + std::log((x.array() - mx).exp().sum());
  Var out = push(x.array() - lse, {});
  nodes_[out].back = [logits, out](Tape& tape) {
    const Eigen::VectorXd& g = tape.adj(out);
    const double gsum = g.sum();
    tape.adj(logits).array() +=
        g.array() - tape.value(out).array().exp() * gsum;
  };
  return out;
}

void Tape::backward(Var loss) {
  if (nodes_[loss].val.size() != 1)
    throw std::invalid_argument("backward: loss must be scalar");
  if (!std::isfinite(nodes_[loss].val(0)))
    throw std::runtime_error("backward: non-finite loss");
  for (auto& n : nodes_) n.adj.setZero();
  nodes_[loss].adj(0) = 1.0;
  for (Var v = loss; v >= 0; --v)
    if (nodes_[v].back) nodes_[v].back(*this);
}

void Tape::clear() { nodes_.clear(); }

}  // namespace choreo::nn
