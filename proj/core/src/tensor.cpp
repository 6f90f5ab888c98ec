#include "choreo/nn/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace choreo::nn {

Tensor& ParameterStore::add_matrix(const std::string& name, long out_dim,
                                   long in_dim, Rng& rng) {
  if (out_dim <= 0 || in_dim <= 0)
    throw std::invalid_argument("add_matrix: dims must be positive");
  Tensor t;
  t.value.resize(out_dim, in_dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (long i = 0; i < out_dim; ++i)
    for (long j = 0; j < in_dim; ++j) t.value(i, j) = uniform(rng, -bound, bound);
  t.grad = Eigen::MatrixXd::Zero(out_dim, in_dim);
  t.m = t.grad;
  t.v = t.grad;
  auto [it, inserted] = params_.insert_or_assign(name, std::move(t));
  if (!inserted) throw std::invalid_argument("duplicate parameter: " + name);
  return it->second;
}

Tensor& ParameterStore::add_vector(const std::string& name, long dim) {
  if (dim <= 0) throw std::invalid_argument("add_vector: dim must be positive");
  Tensor t;
  t.value = Eigen::MatrixXd::Zero(dim, 1);
  t.grad = t.value;
  t.m = t.value;
  t.v = t.value;
  auto [it, inserted] = params_.insert_or_assign(name, std::move(t));
  if (!inserted) throw std::invalid_argument("duplicate parameter: " + name);
  return it->second;
}

Tensor& ParameterStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(name);
  return out;
}

void ParameterStore::zero_grads() {
  for (auto& [name, t] : params_) t.grad.setZero();
}

void ParameterStore::apply_gradients(double lr, double beta1, double beta2,
                                     double eps) {
  for (const auto& [name, t] : params_) {
    if (t.frozen) continue;
    if (!t.grad.allFinite())
      throw std::runtime_error("non-finite gradient for parameter " + name);
  }
  ++adam_step_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam_step_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam_step_));
  for (auto& [name, t] : params_) {
    if (t.frozen) continue;
    // An all-zero gradient means the tensor did not participate in this
    // loss; skipping it keeps untouched heads bit-identical.
    if (t.grad.cwiseAbs().maxCoeff() == 0.0) continue;
    t.m = beta1 * t.m + (1.0 - beta1) * t.grad;
    t.v = beta2 * t.v + (1.0 - beta2) * t.grad.cwiseProduct(t.grad);
    const Eigen::MatrixXd m_hat = t.m / bc1;
    const Eigen::MatrixXd v_hat = t.v / bc2;
    t.value.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + eps);
  }
}

void ParameterStore::freeze(const std::string& prefix) {
  int matched = 0;
  for (auto& [name, t] : params_) {
    if (name.rfind(prefix, 0) == 0) {
      t.frozen = true;
      ++matched;
    }
  }
  if (matched == 0) throw std::invalid_argument("freeze: no parameter matches prefix " + prefix);
}

void ParameterStore::unfreeze(const std::string& prefix) {
  int matched = 0;
  for (auto& [name, t] : params_) {
    if (name.rfind(prefix, 0) == 0) {
      t.frozen = false;
      ++matched;
    }
  }
  if (matched == 0) throw std::invalid_argument("unfreeze: no parameter matches prefix " + prefix);
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  b[0] = static_cast<char>(v & 0xff);
  b[1] = static_cast<char>((v >> 8) & 0xff);
  b[2] = static_cast<char>((v >> 16) & 0xff);
  b[3] = static_cast<char>((v >> 24) & 0xff);
  out.append(b, 4);
}

std::uint32_t get_u32(const std::string& s, std::size_t& pos) {
  if (pos + 4 > s.size()) throw std::runtime_error("checkpoint truncated");
  auto u = [&](int i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + i])); };
  std::uint32_t v = u(0) | (u(1) << 8) | (u(2) << 16) | (u(3) << 24);
  pos += 4;
  return v;
}

}  // namespace

std::string ParameterStore::serialize(const std::string& prefix) const {
  std::string out = "CHK1";
  std::uint32_t count = 0;
  for (const auto& [name, t] : params_)
    if (name.rfind(prefix, 0) == 0) ++count;
  put_u32(out, count);
  for (const auto& [name, t] : params_) {
    if (name.rfind(prefix, 0) != 0) continue;
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.cols()));
    for (long i = 0; i < t.rows(); ++i)
      for (long j = 0; j < t.cols(); ++j) {
        double d = t.value(i, j);
        char b[8];
        std::memcpy(b, &d, 8);  // little-endian host assumed; documented format
        out.append(b, 8);
      }
  }
  return out;
}

void ParameterStore::deserialize(const std::string& bytes) {
  std::size_t pos = 0;
  if (bytes.size() < 4 || bytes.compare(0, 4, "CHK1") != 0)
    throw std::runtime_error("bad checkpoint magic");
  pos = 4;
  const std::uint32_t count = get_u32(bytes, pos);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t name_len = get_u32(bytes, pos);
    if (pos + name_len > bytes.size()) throw std::runtime_error("checkpoint truncated");
    std::string name = bytes.substr(pos, name_len);
    pos += name_len;
    const long rows = static_cast<long>(get_u32(bytes, pos));
    const long cols = static_cast<long>(get_u32(bytes, pos));
    Eigen::MatrixXd value(rows, cols);
    for (long i = 0; i < rows; ++i)
      for (long j = 0; j < cols; ++j) {
        if (pos + 8 > bytes.size()) throw std::runtime_error("checkpoint truncated");
        double d;
        std::memcpy(&d, bytes.data() + pos, 8);
        pos += 8;
        value(i, j) = d;
      }
    auto it = params_.find(name);
    if (it != params_.end()) {
      if (it->second.rows() != rows || it->second.cols() != cols)
        throw std::runtime_error("checkpoint shape mismatch for " + name);
      it->second.value = value;
    } else {
      Tensor t;
      t.value = value;
      t.grad = Eigen::MatrixXd::Zero(rows, cols);
      t.m = t.grad;
      t.v = t.grad;
      params_.emplace(name, std::move(t));
    }
  }
}

void ParameterStore::save(const std::string& path, const std::string& prefix) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  const std::string bytes = serialize(prefix);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

void ParameterStore::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  deserialize(bytes);
}

}  // namespace choreo::nn
