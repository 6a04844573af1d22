#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "droq/tensor.hpp"

namespace droq::nn {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias-corrected moment estimates. The moment buffers are shaped
// after the parameter list passed at construction; every step must present
// the same list.
class Adam {
 public:
  Adam() = default;
  Adam(std::span<const Tensor> params, AdamConfig config = {});

  // Descends along each parameter's gradient slot.
  void step(std::span<Tensor> params);

  std::uint64_t step_count() const { return t_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<std::vector<double>>& first_moment() const { return m_; }
  const std::vector<std::vector<double>>& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> cols_;
  std::uint64_t t_ = 0;
};

}  // namespace droq::nn
