#include "droq/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "droq/checkpoint.hpp"
#include "droq/errors.hpp"

namespace droq {
namespace {

// Largest double below 1; keeps squashed actions strictly inside (-1, 1)
// even where tanh rounds to +-1.
const double kMaxAbsAction = std::nextafter(1.0, 0.0);
const double kHalfLogTwoPi = 0.5 * std::log(2.0 * std::numbers::pi);

std::vector<nn::LayerSpec> policy_layers(const PolicyConfig& c) {
  if (c.obs_dim == 0 || c.act_dim == 0) throw ConfigError("PolicyConfig: zero obs/act dimension");
  if (c.hidden_width == 0 || c.hidden_layers == 0) throw ConfigError("PolicyConfig: empty hidden stack");
  std::vector<nn::LayerSpec> layers;
  std::size_t width = c.obs_dim;
  for (std::size_t l = 0; l < c.hidden_layers; ++l) {
    layers.push_back(nn::LayerSpec::linear(width, c.hidden_width));
    layers.push_back(nn::LayerSpec::relu());
    width = c.hidden_width;
  }
  layers.push_back(nn::LayerSpec::linear(width, 2 * c.act_dim));
  return layers;
}

double squash(double u) { return std::clamp(std::tanh(u), -kMaxAbsAction, kMaxAbsAction); }

}  // namespace

SquashedGaussianPolicy::SquashedGaussianPolicy(PolicyConfig config, const RandomStream& init_rng)
    : config_(config) {
  RandomStream rng = init_rng;
  net_ = nn::Network(policy_layers(config_), rng);
}

PolicySample SquashedGaussianPolicy::draw(const nn::Tensor& head, RandomStream& rng) const {
  const std::size_t rows = head.rows();
  const std::size_t dims = config_.act_dim;
  PolicySample s;
  s.action = nn::Tensor(rows, dims);
  s.noise = nn::Tensor(rows, dims);
  s.std = nn::Tensor(rows, dims);
  s.log_std_clamped.assign(rows * dims, 0);
  s.log_prob.assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double lp = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double mu = head(r, d);
      const double raw = head(r, dims + d);
      const double log_std = std::clamp(raw, kLogStdMin, kLogStdMax);
      s.log_std_clamped[r * dims + d] = raw != log_std;
      const double sigma = std::exp(log_std);
      const double xi = rng.normal();
      const double a = squash(mu + sigma * xi);
      s.noise(r, d) = xi;
      s.std(r, d) = sigma;
      s.action(r, d) = a;
      lp += -0.5 * xi * xi - log_std - kHalfLogTwoPi - std::log(1.0 - a * a + kTanhCorrectionEpsilon);
    }
    s.log_prob[r] = lp;
  }
  return s;
}

PolicySample SquashedGaussianPolicy::sample(const nn::Tensor& obs, RandomStream& rng) {
  // The policy has no dropout, so the forward stream is never consumed.
  RandomStream unused(0);
  net_.set_mode(nn::Mode::Train);
  return draw(net_.forward(obs, unused), rng);
}

PolicySample SquashedGaussianPolicy::sample_detached(const nn::Tensor& obs, RandomStream& rng) const {
  return draw(net_.predict(obs), rng);
}

nn::Tensor SquashedGaussianPolicy::mean_action(const nn::Tensor& obs) const {
  const nn::Tensor head = net_.predict(obs);
  nn::Tensor a(obs.rows(), config_.act_dim);
  for (std::size_t r = 0; r < obs.rows(); ++r) {
    for (std::size_t d = 0; d < config_.act_dim; ++d) a(r, d) = squash(head(r, d));
  }
  return a;
}

void SquashedGaussianPolicy::backward(const PolicySample& s, const nn::Tensor& d_action,
                                      std::span<const double> d_log_prob) {
  const std::size_t rows = s.action.rows();
  const std::size_t dims = config_.act_dim;
  if (d_action.rows() != rows || d_action.cols() != dims || d_log_prob.size() != rows) {
    throw ConfigError("SquashedGaussianPolicy::backward: gradient shape mismatch");
  }
  nn::Tensor d_head(rows, 2 * dims);
  for (std::size_t r = 0; r < rows; ++r) {
    const double g_lp = d_log_prob[r];
    for (std::size_t d = 0; d < dims; ++d) {
      const double a = s.action(r, d);
      const double one_minus_a2 = 1.0 - a * a;
      // d log_prob / du through the tanh correction term only; the Gaussian
      // term is constant in u for fixed noise.
      const double du = d_action(r, d) * one_minus_a2 +
                        g_lp * 2.0 * a * one_minus_a2 / (one_minus_a2 + kTanhCorrectionEpsilon);
      d_head(r, d) = du;
      d_head(r, dims + d) =
          s.log_std_clamped[r * dims + d] ? 0.0 : du * s.std(r, d) * s.noise(r, d) - g_lp;
    }
  }
  net_.backward(d_head);
}

double SquashedGaussianPolicy::log_density(std::span<const double> mean, std::span<const double> log_std,
                                           std::span<const double> action) {
  double lp = 0.0;
  for (std::size_t d = 0; d < action.size(); ++d) {
    const double a = action[d];
    const double ls = std::clamp(log_std[d], kLogStdMin, kLogStdMax);
    const double u = std::atanh(a);
    const double z = (u - mean[d]) / std::exp(ls);
    lp += -0.5 * z * z - ls - kHalfLogTwoPi - std::log(1.0 - a * a + kTanhCorrectionEpsilon);
  }
  return lp;
}

void SquashedGaussianPolicy::save(Checkpoint& ckpt, const std::string& name) const { ckpt.add_network(name, net_); }

void SquashedGaussianPolicy::load(const Checkpoint& ckpt, const std::string& name) { ckpt.restore_into(name, net_); }

Temperature::Temperature(double target_entropy, double initial_alpha, nn::AdamConfig adam)
    : target_entropy_(target_entropy) {
  if (!(initial_alpha > 0.0)) throw ConfigError("Temperature: initial alpha must be positive");
  log_alpha_.emplace_back(1, 1, std::log(initial_alpha));
  optimizer_ = nn::Adam(log_alpha_, adam);
}

double Temperature::alpha() const { return std::exp(log_alpha()); }

void Temperature::update(std::span<const double> batch_log_probs) {
  if (batch_log_probs.empty()) return;
  double mean = 0.0;
  for (double lp : batch_log_probs) mean += lp + target_entropy_;
  mean /= static_cast<double>(batch_log_probs.size());
  log_alpha_[0].grad()[0] = -alpha() * mean;
  optimizer_.step(log_alpha_);
}

void Temperature::save(Checkpoint& ckpt, const std::string& name) const {
  ckpt.add_tensors(name, {nn::Tensor(1, 2, {log_alpha(), target_entropy_})});
}

void Temperature::load(const Checkpoint& ckpt, const std::string& name) {
  const auto& t = ckpt.tensors(name);
  if (t.size() != 1 || t[0].size() != 2) throw ConfigError("Temperature::load: bad section");
  log_alpha_[0].values()[0] = t[0].values()[0];
  target_entropy_ = t[0].values()[1];
}

}  // namespace droq
