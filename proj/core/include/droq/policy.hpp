#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "droq/adam.hpp"
#include "droq/network.hpp"
#include "droq/random.hpp"
#include "droq/tensor.hpp"

namespace droq {

class Checkpoint;

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kTanhCorrectionEpsilon = 1e-6;

struct PolicyConfig {
  std::size_t obs_dim = 0;
  std::size_t act_dim = 0;
  std::size_t hidden_width = 256;
  std::size_t hidden_layers = 2;
};

// One reparameterized draw per batch row. Keeps what backward() needs.
struct PolicySample {
  nn::Tensor action;              // tanh(u), B x A
  std::vector<double> log_prob;   // B
  nn::Tensor noise;               // xi ~ N(0, I)
  nn::Tensor std;                 // sigma after clamping
  std::vector<unsigned char> log_std_clamped;
};

// tanh-squashed diagonal Gaussian. The network maps obs to [mu | log sigma].
class SquashedGaussianPolicy {
 public:
  SquashedGaussianPolicy(PolicyConfig config, const RandomStream& init_rng);

  const PolicyConfig& config() const { return config_; }
  nn::Network& network() { return net_; }
  const nn::Network& network() const { return net_; }

  // Taped draw; follow with backward() to push gradients into the network.
  PolicySample sample(const nn::Tensor& obs, RandomStream& rng);
  // Stateless draw used when acting in the environment.
  PolicySample sample_detached(const nn::Tensor& obs, RandomStream& rng) const;
  // tanh(mu): the evaluation-episode action.
  nn::Tensor mean_action(const nn::Tensor& obs) const;

  // Given dL/da (B x A) and dL/dlog_prob (B) for the last sample(), fills the
  // network's parameter gradients.
  void backward(const PolicySample& s, const nn::Tensor& d_action, std::span<const double> d_log_prob);

  // log pi(a | mu, log_std) for a single action strictly inside (-1, 1).
  static double log_density(std::span<const double> mean, std::span<const double> log_std,
                            std::span<const double> action);

  void save(Checkpoint& ckpt, const std::string& name = "policy") const;
  void load(const Checkpoint& ckpt, const std::string& name = "policy");

 private:
  PolicySample draw(const nn::Tensor& head, RandomStream& rng) const;

  PolicyConfig config_;
  nn::Network net_;
};

// Automatic entropy-temperature adjustment on log(alpha).
class Temperature {
 public:
  Temperature(double target_entropy, double initial_alpha = 1.0, nn::AdamConfig adam = {});

  double alpha() const;
  double log_alpha() const { return log_alpha_[0].values()[0]; }
  double target_entropy() const { return target_entropy_; }

  // One Adam step on mean_b[-alpha * (log_prob_b + target_entropy)], log_prob held constant.
  void update(std::span<const double> batch_log_probs);

  void save(Checkpoint& ckpt, const std::string& name = "temperature") const;
  void load(const Checkpoint& ckpt, const std::string& name = "temperature");

 private:
  double target_entropy_;
  std::vector<nn::Tensor> log_alpha_;
  nn::Adam optimizer_;
};

}  // namespace droq
