#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "choreo/rng.hpp"

namespace choreo::nn {

// A named parameter tensor with its gradient accumulator, Adam moments and
// a frozen flag. Frozen tensors receive no gradient and are never updated.
struct Tensor {
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  Eigen::MatrixXd m;  // Adam first moment
  Eigen::MatrixXd v;  // Adam second moment
  bool frozen = false;

  long rows() const { return value.rows(); }
  long cols() const { return value.cols(); }
};

// Flat, name-keyed parameter container shared by every network in the
// project. Iteration order is the lexicographic name order of std::map,
// which keeps updates and checkpoints deterministic.
class ParameterStore {
 public:
  // Weight matrix, uniform init in [-1/sqrt(in_dim), +1/sqrt(in_dim)].
  Tensor& add_matrix(const std::string& name, long out_dim, long in_dim, Rng& rng);
  // Bias / vector parameter, zero init.
  Tensor& add_vector(const std::string& name, long dim);

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) > 0; }

  std::vector<std::string> names() const;
  std::size_t size() const { return params_.size(); }

  void zero_grads();

  // Adam on every non-frozen tensor. Throws std::runtime_error on a
  // non-finite gradient, leaving all parameters untouched.
  void apply_gradients(double lr, double beta1 = 0.9, double beta2 = 0.999,
                       double eps = 1e-8);

  // Throw std::invalid_argument when the prefix matches nothing.
  void freeze(const std::string& name_prefix);
  void unfreeze(const std::string& name_prefix);

  // Checkpoint container: magic "CHK1", tensor count, then per tensor
  // name, rows, cols and row-major little-endian float64 payload.
  // `prefix` selects a subset ("" = everything).
  std::string serialize(const std::string& prefix = "") const;
  void deserialize(const std::string& bytes);
  void save(const std::string& path, const std::string& prefix = "") const;
  void load(const std::string& path);

  template <typename F>
  void for_each(F&& f) {
    for (auto& [name, t] : params_) f(name, t);
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [name, t] : params_) f(name, t);
  }

 private:
  std::map<std::string, Tensor> params_;
  std::int64_t adam_step_ = 0;
};

}  // namespace choreo::nn
