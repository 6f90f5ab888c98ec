#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "choreo/nn/tensor.hpp"

namespace choreo::nn {

// Reverse-mode tape over vector-valued nodes. Every operation appends one
// node holding its forward value and a closure that scatters the adjoint
// to its inputs. Parameter gradients accumulate directly into Tensor::grad
// unless the tensor is frozen at backward time.
class Tape {
 public:
  using Var = std::int32_t;

  Var input(const Eigen::VectorXd& v);
  Var param_vec(Tensor& t);

  Var matvec(Tensor& W, Var x);              // W * x
  Var affine(Tensor& W, Tensor& b, Var x);   // W * x + b

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double c);
  Var mul_const(Var a, const Eigen::VectorXd& c);  // elementwise by constant

  Var tanh(Var a);
  Var sigmoid(Var a);
  Var exp(Var a);
  Var clamp(Var a, double lo, double hi);  // pass-through gradient inside range

  Var slice(Var a, long start, long len);
  Var concat(Var a, Var b);

  // Scalar (size-1) results.
  Var sum(Var a);
  Var sum_sq_diff(Var a, const Eigen::VectorXd& target);
  Var pick(Var a, long index);
  Var weighted_sum(std::span<const Var> scalars, std::span<const double> weights);

  Var log_softmax(Var logits);

  const Eigen::VectorXd& value(Var v) const { return nodes_[v].val; }
  double scalar(Var v) const { return nodes_[v].val(0); }

  // Seeds the size-1 loss node with adjoint 1 and runs the tape backward.
  // Throws std::runtime_error when the loss is not finite.
  void backward(Var loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Eigen::VectorXd val;
    Eigen::VectorXd adj;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  Var push(Eigen::VectorXd val, std::function<void(Tape&)> back);
  Eigen::VectorXd& adj(Var v) { return nodes_[v].adj; }

  std::vector<Node> nodes_;
};

}  // namespace choreo::nn
