#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "droq/adam.hpp"
#include "droq/environments.hpp"
#include "droq/policy.hpp"
#include "droq/q_ensemble.hpp"
#include "droq/random.hpp"
#include "droq/replay_buffer.hpp"
#include "droq/variant.hpp"

namespace droq {

struct TrainerConfig {
  std::string env = "pendulum";
  AlgorithmVariant variant = resolve_variant("DroQ");
  std::size_t G = 20;
  double gamma = 0.99;
  // Target-smoothing coefficient: each iteration moves targets by this
  // fraction toward online, i.e. polyak_update(1 - rho).
  double rho = 0.005;
  std::size_t batch_size = 256;
  double lr = 3e-4;
  std::size_t buffer_capacity = 1'000'000;
  std::size_t random_starting_steps = 5000;
  std::size_t total_env_steps = 100'000;
  std::size_t epoch_steps = 1000;
  std::size_t eval_episodes = 10;
  std::uint64_t seed = 0;
  std::size_t hidden_width = 256;
  std::size_t hidden_layers = 2;
  double initial_alpha = 1.0;
  std::size_t checkpoint_every = 0;  // epochs; 0 disables
  bool record_wall_time = false;

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

// Per-row bootstrap target and the pieces it was built from.
struct TargetResult {
  std::vector<double> y;
  std::vector<double> min_q;     // min over the evaluation set
  std::vector<double> log_prob;  // log pi(a'|s')
  std::vector<std::size_t> members;
};

// Q-values of one target evaluation: (member, next_obs, next_action, dropout_active, rng).
using TargetEvaluator = std::function<std::vector<double>(std::size_t, const nn::Tensor&, const nn::Tensor&, bool,
                                                          RandomStream&)>;

// y = r + gamma (1 - terminal) (min_j q_j - alpha log_prob), row-wise.
std::vector<double> bootstrap_target(std::span<const double> reward, std::span<const double> terminal,
                                     std::span<const double> min_q, std::span<const double> log_prob, double alpha,
                                     double gamma);

// Samples a' ~ pi(.|s'), picks the evaluation set, evaluates each entry
// through `evaluate` and forms the target. rng order: a' noise, subset, masks.
TargetResult compute_target(const AlgorithmVariant& variant, const TransitionBatch& batch,
                            const TargetEvaluator& evaluate, const SquashedGaussianPolicy& policy, double alpha,
                            double gamma, RandomStream& rng);
TargetResult compute_target(const AlgorithmVariant& variant, const TransitionBatch& batch, QEnsemble& ensemble,
                            const SquashedGaussianPolicy& policy, double alpha, double gamma, RandomStream& rng);

struct QUpdateResult {
  std::vector<double> losses;        // L_i per member
  std::vector<double> mean_gradient;  // (1/K) sum_i dL_i/dphi_i, flattened; filled on request
};

// One Adam step per member on mean_b (Q_i(s, a) - y)^2. y is a constant.
QUpdateResult q_update_step(const AlgorithmVariant& variant, const TransitionBatch& batch, std::span<const double> y,
                            QEnsemble& ensemble, std::span<nn::Adam> optimizers, RandomStream& rng,
                            bool collect_gradient = false);

struct PolicyUpdateResult {
  double loss = 0.0;
  double mean_log_prob = 0.0;
  double alpha_before = 0.0;
};

// Entries of the policy objective: all members, or member 0 M times for SinDroQ.
std::vector<std::size_t> policy_evaluation_members(const AlgorithmVariant& variant);

// Loss mean_b[alpha log pi(a|s) - Qagg(s, a)], a ~ pi fresh; Qagg is the mean
// or min over policy_evaluation_members. Takes one Adam step on the policy,
// then one temperature step. Q parameter gradients are left untouched.
PolicyUpdateResult policy_update_step(const AlgorithmVariant& variant, const TransitionBatch& batch,
                                      QEnsemble& ensemble, SquashedGaussianPolicy& policy, nn::Adam& policy_optimizer,
                                      Temperature& temperature, RandomStream& rng);

// Policy loss without any state change, evaluated with the given member
// values and log-probabilities. Exposed for tests of the aggregation rule.
double policy_objective_value(PolicyObjective objective, const std::vector<std::vector<double>>& member_q,
                              std::span<const double> log_prob, double alpha);

struct UpdateCounters {
  std::uint64_t target_computations = 0;
  std::uint64_t q_member_updates = 0;
  std::uint64_t polyak_updates = 0;
  std::uint64_t policy_updates = 0;
};

// Aggregated Q statistics of one update (losses across members, gradient
// components of the member-averaged gradient).
struct QStats {
  double loss_mean = 0.0;
  double loss_std = 0.0;
  double grad_mean = 0.0;
  double grad_std = 0.0;
};

// The parameterized off-policy loop. Random streams are forks of the seed:
// 1 init, 2 env, 3 exploration, 4 batches, 6 targets, 7 Q updates,
// 8 policy updates, 9 evaluation.
class Trainer {
 public:
  explicit Trainer(TrainerConfig config);

  const TrainerConfig& config() const { return config_; }
  const AlgorithmVariant& variant() const { return config_.variant; }
  QEnsemble& ensemble() { return ensemble_; }
  const QEnsemble& ensemble() const { return ensemble_; }
  SquashedGaussianPolicy& policy() { return policy_; }
  const SquashedGaussianPolicy& policy() const { return policy_; }
  Temperature& temperature() { return temperature_; }
  const Temperature& temperature() const { return temperature_; }
  ReplayBuffer& buffer() { return buffer_; }
  const env::Environment& environment() const { return *env_; }
  const UpdateCounters& counters() const { return counters_; }
  std::size_t env_steps() const { return env_steps_; }
  bool learning() const { return env_steps_ > config_.random_starting_steps; }

  // One pass of the outer loop: act, store, and once past the random phase
  // G Q-iterations then one policy update. Throws NumericError on divergence.
  void env_step();

  // Milliseconds spent in the G-iteration Q block of the last env_step
  // (0 during the random phase).
  double last_q_block_ms() const { return last_q_block_ms_; }
  // Stats of the last Q iteration of the last learning env_step.
  const QStats& last_q_stats() const { return last_q_stats_; }
  std::vector<double> last_q_losses() const { return last_q_losses_; }

  // Fresh evaluation stream for epoch-level measurement; deterministic in
  // the number of evaluations requested so far.
  RandomStream next_eval_stream();

  void save(Checkpoint& ckpt) const;

 private:
  TrainerConfig config_;
  RandomStream root_;
  std::unique_ptr<env::Environment> env_;
  QEnsemble ensemble_;
  std::vector<nn::Adam> q_optimizers_;
  SquashedGaussianPolicy policy_;
  nn::Adam policy_optimizer_;
  Temperature temperature_;
  ReplayBuffer buffer_;

  RandomStream env_rng_;
  RandomStream explore_rng_;
  RandomStream batch_rng_;
  RandomStream target_rng_;
  RandomStream update_rng_;
  RandomStream policy_rng_;
  RandomStream eval_rng_;

  std::vector<double> obs_;
  std::size_t env_steps_ = 0;
  UpdateCounters counters_;
  double last_q_block_ms_ = 0.0;
  QStats last_q_stats_;
  std::vector<double> last_q_losses_;
};

QNetConfig q_net_config(const TrainerConfig& config, const env::EnvSpec& spec);

}  // namespace droq
