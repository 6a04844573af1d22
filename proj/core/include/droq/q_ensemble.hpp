#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "droq/network.hpp"
#include "droq/random.hpp"
#include "droq/tensor.hpp"

namespace droq {

class Checkpoint;

enum class Normalization { None, LayerNorm, LayerNormNoVR, BatchNorm, GroupNorm2 };

std::string to_string(Normalization n);
Normalization normalization_from_string(const std::string& s);

// Which update-loop evaluations run with active dropout: the target (min
// over target networks), the current-Q regression, and the policy objective.
struct DropoutPlacement {
  bool target_q = true;
  bool current_q = true;
  bool policy_opt = true;

  friend bool operator==(const DropoutPlacement&, const DropoutPlacement&) = default;
};

struct QNetConfig {
  std::size_t obs_dim = 0;
  std::size_t act_dim = 0;
  std::size_t hidden_width = 256;
  std::size_t hidden_layers = 2;
  double dropout_rate = 0.0;
  Normalization normalization = Normalization::None;
  DropoutPlacement placement;
};

// Hidden block is Linear -> Dropout -> Norm -> ReLU, repeated, then Linear -> 1.
// Dropout is omitted at rate 0 and Norm when normalization is None, so the
// plain configuration is exactly the classic two-hidden-layer critic.
std::vector<nn::LayerSpec> q_network_layers(const QNetConfig& config);

enum class Which { Online, Target };

class QEnsemble {
 public:
  // Member i is initialized from init_rng.fork(i); targets start as exact copies.
  QEnsemble(QNetConfig config, std::size_t members, const RandomStream& init_rng);

  std::size_t size() const { return online_.size(); }
  const QNetConfig& config() const { return config_; }

  nn::Network& online(std::size_t i) { return online_.at(i); }
  const nn::Network& online(std::size_t i) const { return online_.at(i); }
  nn::Network& target(std::size_t i) { return target_.at(i); }
  const nn::Network& target(std::size_t i) const { return target_.at(i); }

  // Q-values of member i on the batch rows [obs | act]. With dropout_active
  // the member runs in Train mode and draws fresh masks from rng. The taped
  // forward stays live so the caller can backpropagate into online members.
  std::vector<double> q_value(Which which, std::size_t i, const nn::Tensor& obs, const nn::Tensor& act,
                              bool dropout_active, RandomStream& rng);

  // Mask-free, state-free evaluation of an online member.
  std::vector<double> predict(std::size_t i, const nn::Tensor& obs, const nn::Tensor& act) const;

  // target <- rho * target + (1 - rho) * online, element-wise over trainable parameters.
  void polyak_update(double rho);

  // Trainable parameters of the online members (targets excluded).
  std::size_t parameter_count() const;
  static std::size_t count_parameters(const QNetConfig& config, std::size_t members);

  // Sections "<prefix>online/<i>" then "<prefix>target/<i>".
  void save(Checkpoint& ckpt, const std::string& prefix = "q/") const;
  void load(const Checkpoint& ckpt, const std::string& prefix = "q/");

 private:
  QNetConfig config_;
  std::vector<nn::Network> online_;
  std::vector<nn::Network> target_;
};

}  // namespace droq
