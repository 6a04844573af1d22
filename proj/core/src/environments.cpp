#include "droq/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "droq/errors.hpp"

namespace droq::env {
namespace {

double checked_action(std::span<const double> action, std::size_t dims) {
  if (action.size() != dims) throw ConfigError("step: action has wrong dimension");
  if (!std::isfinite(action[0])) throw NumericError("step: non-finite action");
  return std::clamp(action[0], -1.0, 1.0);
}

}  // namespace

double Pendulum::angle_normalize(double x) {
  constexpr double pi = std::numbers::pi;
  return std::fmod(std::fmod(x + pi, 2.0 * pi) + 2.0 * pi, 2.0 * pi) - pi;
}

std::vector<double> Pendulum::reset(RandomStream& rng) {
  theta_ = rng.uniform(-std::numbers::pi, std::numbers::pi);
  theta_dot_ = rng.uniform(-1.0, 1.0);
  steps_ = 0;
  return observation();
}

void Pendulum::set_state(double theta, double theta_dot) {
  theta_ = theta;
  theta_dot_ = theta_dot;
  steps_ = 0;
}

std::vector<double> Pendulum::observation() const { return {std::cos(theta_), std::sin(theta_), theta_dot_}; }

StepResult Pendulum::step(std::span<const double> action) {
  const double u = checked_action(action, 1) * params_.max_torque;
  const double g = params_.gravity;
  const double m = params_.mass;
  const double l = params_.length;
  const double dt = params_.dt;

  const double angle = angle_normalize(theta_);
  const double reward = -(angle * angle + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u);

  double new_theta_dot = theta_dot_ + (3.0 * g / (2.0 * l) * std::sin(theta_) + 3.0 / (m * l * l) * u) * dt;
  new_theta_dot = std::clamp(new_theta_dot, -params_.max_speed, params_.max_speed);
  theta_ += new_theta_dot * dt;
  theta_dot_ = new_theta_dot;
  ++steps_;

  return {observation(), reward, false, steps_ >= params_.max_episode_steps};
}

std::vector<double> Lqg::reset(RandomStream& rng) {
  x_ = params_.init_std * rng.normal();
  noise_ = rng.split();
  steps_ = 0;
  return {x_};
}

StepResult Lqg::step(std::span<const double> action) {
  const double u = checked_action(action, 1);
  const double reward = -(x_ * x_ + params_.action_cost * u * u);
  const double w = params_.noise_std > 0.0 ? params_.noise_std * noise_.normal() : 0.0;
  x_ = params_.a * x_ + params_.b * u + w;
  ++steps_;
  return {{x_}, reward, false, steps_ >= params_.max_episode_steps};
}

LqgValue lqg_policy_value(const LqgParams& params, double k, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("lqg: gamma must lie in [0, 1)");
  const double closed_loop = params.a - params.b * k;
  if (!(std::abs(closed_loop) * std::sqrt(gamma) < 1.0)) {
    throw DomainError("lqg: closed loop is not discounted-stable for k = " + std::to_string(k));
  }
  // p = (1 + r k^2) + gamma (a - b k)^2 p ;  c = gamma (p sigma^2 + c)
  const double p = (1.0 + params.action_cost * k * k) / (1.0 - gamma * closed_loop * closed_loop);
  const double c = gamma * p * params.noise_std * params.noise_std / (1.0 - gamma);
  return {p, c};
}

double lqg_true_q(const LqgParams& params, double k, double gamma, double x, double u) {
  const LqgValue v = lqg_policy_value(params, k, gamma);
  const double mean_next = params.a * x + params.b * u;
  const double expected_next_value =
      -v.p * (mean_next * mean_next + params.noise_std * params.noise_std) - v.c;
  return -(x * x + params.action_cost * u * u) + gamma * expected_next_value;
}

std::unique_ptr<Environment> make_environment(std::string_view name) {
  if (name == "pendulum") return std::make_unique<Pendulum>();
  if (name == "lqg") return std::make_unique<Lqg>();
  throw ConfigError("unknown environment '" + std::string(name) + "'");
}

}  // namespace droq::env
