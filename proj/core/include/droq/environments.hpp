#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "droq/random.hpp"

namespace droq::env {

// Actions always live in [-1, 1]^act_dim; out-of-range actions are clamped.
struct EnvSpec {
  std::size_t obs_dim = 0;
  std::size_t act_dim = 0;
  std::size_t max_episode_steps = 0;
};

struct StepResult {
  std::vector<double> obs;
  double reward = 0.0;
  bool terminal = false;
  bool truncated = false;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual EnvSpec spec() const = 0;
  virtual std::vector<double> reset(RandomStream& rng) = 0;
  virtual StepResult step(std::span<const double> action) = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
};

struct PendulumParams {
  double gravity = 10.0;
  double mass = 1.0;
  double length = 1.0;
  double dt = 0.05;
  double max_torque = 2.0;
  double max_speed = 8.0;
  std::size_t max_episode_steps = 200;
};

// Torque-limited swing-up. theta = 0 is upright; obs = (cos, sin, theta_dot).
// Semi-implicit Euler integration; no terminal states.
class Pendulum final : public Environment {
 public:
  explicit Pendulum(PendulumParams params = {}) : params_(params) {}

  std::string name() const override { return "pendulum"; }
  EnvSpec spec() const override { return {3, 1, params_.max_episode_steps}; }
  std::vector<double> reset(RandomStream& rng) override;
  StepResult step(std::span<const double> action) override;
  std::unique_ptr<Environment> clone() const override { return std::make_unique<Pendulum>(*this); }

  void set_state(double theta, double theta_dot);
  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }
  std::vector<double> observation() const;
  const PendulumParams& params() const { return params_; }

  static double angle_normalize(double x);

 private:
  PendulumParams params_;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
  std::size_t steps_ = 0;
};

struct LqgParams {
  double a = 0.9;
  double b = 0.5;
  double noise_std = 0.1;
  double init_std = 0.5;
  double action_cost = 0.1;
  std::size_t max_episode_steps = 100;
};

// Scalar linear-Gaussian system x' = a x + b u + w with reward -(x^2 + 0.1 u^2).
// Process noise comes from a stream split off the reset stream.
class Lqg final : public Environment {
 public:
  explicit Lqg(LqgParams params = {}) : params_(params) {}

  std::string name() const override { return "lqg"; }
  EnvSpec spec() const override { return {1, 1, params_.max_episode_steps}; }
  std::vector<double> reset(RandomStream& rng) override;
  StepResult step(std::span<const double> action) override;
  std::unique_ptr<Environment> clone() const override { return std::make_unique<Lqg>(*this); }

  void set_state(double x) { x_ = x; }
  double state() const { return x_; }
  const LqgParams& params() const { return params_; }

 private:
  LqgParams params_;
  double x_ = 0.0;
  std::size_t steps_ = 0;
  RandomStream noise_{0};
};

// Value of the linear policy u = -k x: V(x) = -p x^2 - c.
struct LqgValue {
  double p = 0.0;
  double c = 0.0;
};

// Throws DomainError unless |a - b k| sqrt(gamma) < 1 and gamma in [0, 1).
LqgValue lqg_policy_value(const LqgParams& params, double k, double gamma);
// Exact Q of the linear policy: -(x^2 + 0.1 u^2) + gamma E[V(a x + b u + w)].
double lqg_true_q(const LqgParams& params, double k, double gamma, double x, double u);

// "pendulum" or "lqg".
std::unique_ptr<Environment> make_environment(std::string_view name);

}  // namespace droq::env
