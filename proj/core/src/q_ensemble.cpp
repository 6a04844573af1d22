#include "droq/q_ensemble.hpp"

#include <string>

#include "droq/checkpoint.hpp"
#include "droq/errors.hpp"

namespace droq {

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::None: return "None";
    case Normalization::LayerNorm: return "LayerNorm";
    case Normalization::LayerNormNoVR: return "LayerNormNoVR";
    case Normalization::BatchNorm: return "BatchNorm";
    case Normalization::GroupNorm2: return "GroupNorm";
  }
  return "None";
}

Normalization normalization_from_string(const std::string& s) {
  if (s == "None" || s == "none") return Normalization::None;
  if (s == "LayerNorm" || s == "LN") return Normalization::LayerNorm;
  if (s == "LayerNormNoVR" || s == "LNwoVR") return Normalization::LayerNormNoVR;
  if (s == "BatchNorm" || s == "BN") return Normalization::BatchNorm;
  if (s == "GroupNorm" || s == "GroupNorm2" || s == "GN") return Normalization::GroupNorm2;
  throw ConfigError("unknown normalization '" + s + "'");
}

std::vector<nn::LayerSpec> q_network_layers(const QNetConfig& config) {
  if (config.obs_dim == 0 || config.act_dim == 0) throw ConfigError("QNetConfig: zero obs/act dimension");
  if (config.hidden_width == 0 || config.hidden_layers == 0) throw ConfigError("QNetConfig: empty hidden stack");
  if (!(config.dropout_rate >= 0.0 && config.dropout_rate < 1.0)) {
    throw ConfigError("QNetConfig: dropout rate must lie in [0, 1)");
  }
  std::vector<nn::LayerSpec> layers;
  std::size_t width = config.obs_dim + config.act_dim;
  const std::size_t h = config.hidden_width;
  for (std::size_t l = 0; l < config.hidden_layers; ++l) {
    layers.push_back(nn::LayerSpec::linear(width, h));
    if (config.dropout_rate > 0.0) layers.push_back(nn::LayerSpec::dropout(config.dropout_rate));
    switch (config.normalization) {
      case Normalization::None: break;
      case Normalization::LayerNorm: layers.push_back(nn::LayerSpec::layer_norm(h)); break;
      case Normalization::LayerNormNoVR: layers.push_back(nn::LayerSpec::layer_norm_no_vr(h)); break;
      case Normalization::BatchNorm: layers.push_back(nn::LayerSpec::batch_norm(h)); break;
      case Normalization::GroupNorm2: layers.push_back(nn::LayerSpec::group_norm(h, 2)); break;
    }
    layers.push_back(nn::LayerSpec::relu());
    width = h;
  }
  layers.push_back(nn::LayerSpec::linear(width, 1));
  return layers;
}

QEnsemble::QEnsemble(QNetConfig config, std::size_t members, const RandomStream& init_rng)
    : config_(config) {
  if (members == 0) throw ConfigError("QEnsemble: need at least one member");
  const auto layers = q_network_layers(config_);
  online_.reserve(members);
  for (std::size_t i = 0; i < members; ++i) {
    RandomStream member_rng = init_rng.fork(i);
    online_.emplace_back(layers, member_rng);
  }
  target_ = online_;
}

std::vector<double> QEnsemble::q_value(Which which, std::size_t i, const nn::Tensor& obs,
                                       const nn::Tensor& act, bool dropout_active, RandomStream& rng) {
  if (i >= size()) throw ConfigError("QEnsemble::q_value: member index out of range");
  if (obs.cols() != config_.obs_dim || act.cols() != config_.act_dim || obs.rows() != act.rows()) {
    throw ConfigError("QEnsemble::q_value: batch dimensions do not match the ensemble");
  }
  nn::Network& net = which == Which::Online ? online_[i] : target_[i];
  net.set_mode(dropout_active ? nn::Mode::Train : nn::Mode::Eval);
  const nn::Tensor out = net.forward(nn::concat_cols(obs, act), rng);
  return {out.values().begin(), out.values().end()};
}

std::vector<double> QEnsemble::predict(std::size_t i, const nn::Tensor& obs, const nn::Tensor& act) const {
  if (i >= size()) throw ConfigError("QEnsemble::predict: member index out of range");
  if (obs.cols() != config_.obs_dim || act.cols() != config_.act_dim || obs.rows() != act.rows()) {
    throw ConfigError("QEnsemble::predict: batch dimensions do not match the ensemble");
  }
  const nn::Tensor out = online_[i].predict(nn::concat_cols(obs, act));
  return {out.values().begin(), out.values().end()};
}

void QEnsemble::polyak_update(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("polyak_update: rho must lie in [0, 1]");
  for (std::size_t i = 0; i < size(); ++i) {
    auto& tp = target_[i].parameters();
    const auto& op = online_[i].parameters();
    for (std::size_t k = 0; k < tp.size(); ++k) {
      auto t = tp[k].values();
      auto o = op[k].values();
      for (std::size_t j = 0; j < t.size(); ++j) t[j] = rho * t[j] + (1.0 - rho) * o[j];
    }
  }
}

std::size_t QEnsemble::parameter_count() const {
  std::size_t n = 0;
  for (const auto& net : online_) n += net.parameter_count();
  return n;
}

std::size_t QEnsemble::count_parameters(const QNetConfig& config, std::size_t members) {
  const std::size_t h = config.hidden_width;
  const std::size_t norm = config.normalization == Normalization::None ? 0 : 2 * h;
  std::size_t per_member = 0;
  std::size_t width = config.obs_dim + config.act_dim;
  for (std::size_t l = 0; l < config.hidden_layers; ++l) {
    per_member += width * h + h + norm;
    width = h;
  }
  per_member += width + 1;
  return per_member * members;
}

void QEnsemble::save(Checkpoint& ckpt, const std::string& prefix) const {
  for (std::size_t i = 0; i < size(); ++i) ckpt.add_network(prefix + "online/" + std::to_string(i), online_[i]);
  for (std::size_t i = 0; i < size(); ++i) ckpt.add_network(prefix + "target/" + std::to_string(i), target_[i]);
}

void QEnsemble::load(const Checkpoint& ckpt, const std::string& prefix) {
  for (std::size_t i = 0; i < size(); ++i) {
    ckpt.restore_into(prefix + "online/" + std::to_string(i), online_[i]);
    ckpt.restore_into(prefix + "target/" + std::to_string(i), target_[i]);
  }
}

}  // namespace droq
