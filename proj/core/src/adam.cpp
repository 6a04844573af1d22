#include "droq/adam.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "droq/errors.hpp"

namespace droq::nn {

Adam::Adam(std::span<const Tensor> params, AdamConfig config) : config_(config) {
  for (const Tensor& p : params) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
    rows_.push_back(p.rows());
    cols_.push_back(p.cols());
  }
}

void Adam::step(std::span<Tensor> params) {
  if (params.size() != m_.size()) {
    throw ConfigError("Adam::step: " + std::to_string(params.size()) + " parameters, optimizer built for " +
                      std::to_string(m_.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].rows() != rows_[i] || params[i].cols() != cols_[i]) {
      throw ConfigError("Adam::step: shape mismatch at parameter " + std::to_string(i));
    }
    if (!params[i].has_grad()) throw UsageError("Adam::step: parameter " + std::to_string(i) + " has no gradient");
  }
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].values();
    auto grad = std::as_const(params[i]).grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grad[j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      values[j] -= lr * (m[j] / bias1) / (std::sqrt(v[j] / bias2) + config_.epsilon);
    }
  }
}

}  // namespace droq::nn
