#include "droq/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "droq/checkpoint.hpp"
#include "droq/errors.hpp"
#include "droq/metrics.hpp"

namespace droq {

void TrainerConfig::validate() const {
  if (G == 0) throw ConfigError("G must be at least 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (buffer_capacity == 0) throw ConfigError("buffer_capacity must be positive");
  if (epoch_steps == 0) throw ConfigError("epoch_steps must be positive");
  if (eval_episodes == 0) throw ConfigError("eval_episodes must be positive");
  if (hidden_width == 0 || hidden_layers == 0) throw ConfigError("hidden_width and hidden_layers must be positive");
  if (!(initial_alpha > 0.0)) throw ConfigError("initial_alpha must be positive");
  if (variant.normalization == Normalization::GroupNorm2 && hidden_width % 2 != 0) {
    throw ConfigError("GroupNorm with two groups needs an even hidden_width");
  }
  if (variant.algorithm == Algorithm::SinDroQ && variant.policy_objective == PolicyObjective::MinOverEnsemble) {
    throw ConfigError("SinDroQ supports only the MeanOverEnsemble policy objective");
  }
}

QNetConfig q_net_config(const TrainerConfig& config, const env::EnvSpec& spec) {
  QNetConfig q;
  q.obs_dim = spec.obs_dim;
  q.act_dim = spec.act_dim;
  q.hidden_width = config.hidden_width;
  q.hidden_layers = config.hidden_layers;
  q.dropout_rate = config.variant.dropout_rate;
  q.normalization = config.variant.normalization;
  q.placement = config.variant.placement;
  return q;
}

std::vector<double> bootstrap_target(std::span<const double> reward, std::span<const double> terminal,
                                     std::span<const double> min_q, std::span<const double> log_prob, double alpha,
                                     double gamma) {
  const std::size_t n = reward.size();
  if (terminal.size() != n || min_q.size() != n || log_prob.size() != n) {
    throw ConfigError("bootstrap_target: length mismatch");
  }
  std::vector<double> y(n);
  for (std::size_t b = 0; b < n; ++b) {
    y[b] = reward[b] + gamma * (1.0 - terminal[b]) * (min_q[b] - alpha * log_prob[b]);
  }
  return y;
}

TargetResult compute_target(const AlgorithmVariant& variant, const TransitionBatch& batch,
                            const TargetEvaluator& evaluate, const SquashedGaussianPolicy& policy, double alpha,
                            double gamma, RandomStream& rng) {
  const std::size_t rows = batch.size();
  if (rows == 0) throw ConfigError("compute_target: empty batch");
  const PolicySample next = policy.sample_detached(batch.next_obs, rng);

  TargetResult out;
  out.members = target_evaluation_members(variant, rng);
  out.min_q.assign(rows, std::numeric_limits<double>::infinity());
  const bool active = variant.placement.target_q;
  for (std::size_t idx : out.members) {
    const std::vector<double> q = evaluate(idx, batch.next_obs, next.action, active, rng);
    if (q.size() != rows) throw ConfigError("compute_target: evaluator returned wrong row count");
    for (std::size_t b = 0; b < rows; ++b) out.min_q[b] = std::min(out.min_q[b], q[b]);
  }
  out.log_prob = next.log_prob;
  out.y = bootstrap_target(batch.reward, batch.terminal, out.min_q, out.log_prob, alpha, gamma);
  return out;
}

TargetResult compute_target(const AlgorithmVariant& variant, const TransitionBatch& batch, QEnsemble& ensemble,
                            const SquashedGaussianPolicy& policy, double alpha, double gamma, RandomStream& rng) {
  const TargetEvaluator evaluate = [&ensemble](std::size_t i, const nn::Tensor& obs, const nn::Tensor& act,
                                               bool active, RandomStream& r) {
    return ensemble.q_value(Which::Target, i, obs, act, active, r);
  };
  return compute_target(variant, batch, evaluate, policy, alpha, gamma, rng);
}

QUpdateResult q_update_step(const AlgorithmVariant& variant, const TransitionBatch& batch, std::span<const double> y,
                            QEnsemble& ensemble, std::span<nn::Adam> optimizers, RandomStream& rng,
                            bool collect_gradient) {
  const std::size_t rows = batch.size();
  const std::size_t members = ensemble.size();
  if (y.size() != rows) throw ConfigError("q_update_step: target length differs from batch");
  if (optimizers.size() != members) throw ConfigError("q_update_step: one optimizer per member required");
  const bool active = variant.placement.current_q;
  const double inv_rows = 1.0 / static_cast<double>(rows);

  QUpdateResult result;
  result.losses.reserve(members);
  nn::Tensor dq(rows, 1);
  for (std::size_t i = 0; i < members; ++i) {
    const std::vector<double> q = ensemble.q_value(Which::Online, i, batch.obs, batch.action, active, rng);
    double loss = 0.0;
    for (std::size_t b = 0; b < rows; ++b) {
      const double err = q[b] - y[b];
      loss += err * err;
      dq(b, 0) = 2.0 * err * inv_rows;
    }
    loss *= inv_rows;
    if (!std::isfinite(loss)) throw NumericError("Q loss diverged (member " + std::to_string(i) + ")");
    result.losses.push_back(loss);

    nn::Network& net = ensemble.online(i);
    net.backward(dq);
    if (collect_gradient) {
      std::size_t offset = 0;
      for (nn::Tensor& p : net.parameters()) {
        const std::span<double> g = p.grad();
        if (result.mean_gradient.size() < offset + g.size()) result.mean_gradient.resize(offset + g.size(), 0.0);
        for (std::size_t j = 0; j < g.size(); ++j) result.mean_gradient[offset + j] += g[j] / static_cast<double>(members);
        offset += g.size();
      }
    }
    optimizers[i].step(net.parameters());
  }
  return result;
}

std::vector<std::size_t> policy_evaluation_members(const AlgorithmVariant& variant) {
  if (variant.algorithm == Algorithm::SinDroQ) return std::vector<std::size_t>(variant.in_target_min, 0);
  std::vector<std::size_t> idx(variant.members);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

double policy_objective_value(PolicyObjective objective, const std::vector<std::vector<double>>& member_q,
                              std::span<const double> log_prob, double alpha) {
  if (member_q.empty()) throw ConfigError("policy_objective_value: no member values");
  const std::size_t rows = log_prob.size();
  double loss = 0.0;
  for (std::size_t b = 0; b < rows; ++b) {
    double agg = objective == PolicyObjective::MinOverEnsemble ? std::numeric_limits<double>::infinity() : 0.0;
    for (const auto& q : member_q) {
      if (q.size() != rows) throw ConfigError("policy_objective_value: row mismatch");
      if (objective == PolicyObjective::MinOverEnsemble) {
        agg = std::min(agg, q[b]);
      } else {
        agg += q[b] / static_cast<double>(member_q.size());
      }
    }
    loss += alpha * log_prob[b] - agg;
  }
  return loss / static_cast<double>(rows);
}

PolicyUpdateResult policy_update_step(const AlgorithmVariant& variant, const TransitionBatch& batch,
                                      QEnsemble& ensemble, SquashedGaussianPolicy& policy, nn::Adam& policy_optimizer,
                                      Temperature& temperature, RandomStream& rng) {
  const std::size_t rows = batch.size();
  if (rows == 0) throw ConfigError("policy_update_step: empty batch");
  const std::size_t obs_dim = ensemble.config().obs_dim;
  const std::size_t act_dim = ensemble.config().act_dim;
  const double inv_rows = 1.0 / static_cast<double>(rows);
  const double alpha = temperature.alpha();
  const bool active = variant.placement.policy_opt;
  const std::vector<std::size_t> evals = policy_evaluation_members(variant);
  const double k = static_cast<double>(evals.size());

  const PolicySample s = policy.sample(batch.obs, rng);
  nn::Tensor d_action(rows, act_dim);
  std::vector<std::vector<double>> member_q;
  member_q.reserve(evals.size());

  auto accumulate_input_grad = [&](std::size_t member, const nn::Tensor& dq) {
    const nn::Tensor d_in = ensemble.online(member).backward(dq, false);
    for (std::size_t b = 0; b < rows; ++b) {
      for (std::size_t d = 0; d < act_dim; ++d) d_action(b, d) += d_in(b, obs_dim + d);
    }
  };

  nn::Tensor dq(rows, 1);
  if (variant.policy_objective == PolicyObjective::MeanOverEnsemble) {
    dq.fill(-inv_rows / k);
    for (std::size_t member : evals) {
      member_q.push_back(ensemble.q_value(Which::Online, member, batch.obs, s.action, active, rng));
      accumulate_input_grad(member, dq);
    }
  } else {
    if (std::set<std::size_t>(evals.begin(), evals.end()).size() != evals.size()) {
      throw UsageError("MinOverEnsemble needs distinct members");
    }
    for (std::size_t member : evals) {
      member_q.push_back(ensemble.q_value(Which::Online, member, batch.obs, s.action, active, rng));
    }
    for (std::size_t e = 0; e < evals.size(); ++e) {
      for (std::size_t b = 0; b < rows; ++b) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < evals.size(); ++j) {
          if (member_q[j][b] < member_q[best][b]) best = j;
        }
        dq(b, 0) = best == e ? -inv_rows : 0.0;
      }
      accumulate_input_grad(evals[e], dq);
    }
  }

  PolicyUpdateResult result;
  result.alpha_before = alpha;
  result.loss = policy_objective_value(variant.policy_objective, member_q, s.log_prob, alpha);
  if (!std::isfinite(result.loss)) throw NumericError("policy loss diverged");
  double mean_lp = 0.0;
  for (double lp : s.log_prob) mean_lp += lp;
  result.mean_log_prob = mean_lp * inv_rows;

  const std::vector<double> d_log_prob(rows, alpha * inv_rows);
  policy.backward(s, d_action, d_log_prob);
  policy_optimizer.step(policy.network().parameters());
  temperature.update(s.log_prob);
  return result;
}

namespace {

nn::AdamConfig adam_config(double lr) {
  nn::AdamConfig cfg;
  cfg.learning_rate = lr;
  return cfg;
}

constexpr std::uint64_t kPolicyInitTag = 1'000'000;

}  // namespace

Trainer::Trainer(TrainerConfig config)
    : config_((config.validate(), std::move(config))),
      root_(config_.seed),
      env_(env::make_environment(config_.env)),
      ensemble_(q_net_config(config_, env_->spec()), config_.variant.members, root_.fork(1)),
      policy_(PolicyConfig{env_->spec().obs_dim, env_->spec().act_dim, config_.hidden_width, config_.hidden_layers},
              root_.fork(1).fork(kPolicyInitTag)),
      temperature_(-static_cast<double>(env_->spec().act_dim), config_.initial_alpha, adam_config(config_.lr)),
      buffer_(config_.buffer_capacity, env_->spec().obs_dim, env_->spec().act_dim),
      env_rng_(root_.fork(2)),
      explore_rng_(root_.fork(3)),
      batch_rng_(root_.fork(4)),
      target_rng_(root_.fork(6)),
      update_rng_(root_.fork(7)),
      policy_rng_(root_.fork(8)),
      eval_rng_(root_.fork(9)) {
  for (std::size_t i = 0; i < ensemble_.size(); ++i) {
    q_optimizers_.emplace_back(ensemble_.online(i).parameters(), adam_config(config_.lr));
  }
  policy_optimizer_ = nn::Adam(policy_.network().parameters(), adam_config(config_.lr));
  obs_ = env_->reset(env_rng_);
}

void Trainer::env_step() {
  ++env_steps_;
  const std::size_t act_dim = env_->spec().act_dim;
  std::vector<double> action(act_dim);
  if (!learning()) {
    for (double& a : action) a = explore_rng_.uniform(-1.0, 1.0);
  } else {
    const nn::Tensor obs(1, obs_.size(), obs_);
    const PolicySample s = policy_.sample_detached(obs, explore_rng_);
    std::copy(s.action.values().begin(), s.action.values().end(), action.begin());
  }
  const env::StepResult r = env_->step(action);
  buffer_.push(obs_, action, r.reward, r.obs, r.terminal);
  obs_ = (r.terminal || r.truncated) ? env_->reset(env_rng_) : r.obs;

  if (!learning()) {
    last_q_block_ms_ = 0.0;
    return;
  }

  const auto t0 = std::chrono::steady_clock::now();
  TransitionBatch batch;
  for (std::size_t g = 0; g < config_.G; ++g) {
    batch = buffer_.sample(config_.batch_size, batch_rng_);
    const TargetResult target =
        compute_target(config_.variant, batch, ensemble_, policy_, temperature_.alpha(), config_.gamma, target_rng_);
    ++counters_.target_computations;
    const bool last = g + 1 == config_.G;
    QUpdateResult q = q_update_step(config_.variant, batch, target.y, ensemble_, q_optimizers_, update_rng_, last);
    counters_.q_member_updates += ensemble_.size();
    ensemble_.polyak_update(1.0 - config_.rho);
    ++counters_.polyak_updates;
    if (last) {
      last_q_stats_ = q_stats(q.losses, q.mean_gradient);
      last_q_losses_ = std::move(q.losses);
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  last_q_block_ms_ = std::chrono::duration<double, std::milli>(t1 - t0).count();

  policy_update_step(config_.variant, batch, ensemble_, policy_, policy_optimizer_, temperature_, policy_rng_);
  ++counters_.policy_updates;
}

RandomStream Trainer::next_eval_stream() { return eval_rng_.split(); }

void Trainer::save(Checkpoint& ckpt) const {
  ensemble_.save(ckpt);
  policy_.save(ckpt);
  temperature_.save(ckpt);
}

}  // namespace droq
