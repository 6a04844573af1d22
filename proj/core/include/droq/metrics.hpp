#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "droq/environments.hpp"
#include "droq/policy.hpp"
#include "droq/q_ensemble.hpp"
#include "droq/random.hpp"
#include "droq/trainer.hpp"

namespace droq {

// One test episode: obs[t], action[t], reward[t] for t < length.
struct EvalTrajectory {
  std::vector<std::vector<double>> obs;
  std::vector<std::vector<double>> action;
  std::vector<double> reward;

  std::size_t size() const { return reward.size(); }
};

struct ReturnEstimate {
  double mean_return = 0.0;
  std::vector<double> episode_returns;
  std::vector<EvalTrajectory> trajectories;
};

// Must be safe to call concurrently.
using ActionFn = std::function<std::vector<double>(std::span<const double> obs)>;

// Runs `episodes` episodes on clones of `prototype`; episode e resets from
// rng.fork(e). Up to `threads` episodes run concurrently (0 reads
// DROQ_THREADS, default 1); the result does not depend on the thread count.
ReturnEstimate evaluate_return(const ActionFn& act, const env::Environment& prototype, std::size_t episodes,
                               const RandomStream& rng, std::size_t threads = 0);
// Mean action tanh(mu) of the policy.
ReturnEstimate evaluate_return(const SquashedGaussianPolicy& policy, const env::Environment& prototype,
                               std::size_t episodes, const RandomStream& rng, std::size_t threads = 0);

// Threads requested through DROQ_THREADS (at least 1).
std::size_t evaluation_threads_from_env();

// Truncated discounted return from every step of one reward sequence.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

struct BiasEstimate {
  double avg_bias = 0.0;
  double std_bias = 0.0;
  double normalizer = 0.0;  // mean Monte-Carlo Q over all pairs
  std::size_t pairs = 0;
};

// Q-hat for a batch of (obs, action) rows.
using QHatFn = std::function<std::vector<double>(const nn::Tensor& obs, const nn::Tensor& act)>;

// Normalized error |Q_mc - Q_hat| / |mean Q_mc| over every visited pair of
// every trajectory; population std. Throws DomainError when
// |mean Q_mc| < 1e-9 and ConfigError on empty input.
BiasEstimate estimate_bias(const QHatFn& q_hat, std::span<const EvalTrajectory> trajectories, double gamma);
// Q-hat = mean of the online members, mask-free.
BiasEstimate estimate_bias(const QEnsemble& ensemble, std::span<const EvalTrajectory> trajectories, double gamma);

// Loss mean / population std over members; gradient mean / population std
// over the components of the member-averaged gradient.
QStats q_stats(std::span<const double> losses, std::span<const double> mean_gradient);

struct ProfileResult {
  double ms_per_loop = 0.0;     // median full env-step loop
  double ms_per_qupdate = 0.0;  // median G-iteration Q block
  std::size_t timed_loops = 0;
};

// Steps the trainer through its random phase (buffer fill), runs warmup
// loops, then reports medians of the timed loops.
ProfileResult profile_update(Trainer& trainer, std::size_t warmup_loops = 10, std::size_t timed_loops = 100);

struct MetricsRecord {
  std::uint64_t env_step = 0;
  double avg_return = 0.0;
  double avg_bias = 0.0;
  double std_bias = 0.0;
  double q_loss_mean = 0.0;
  double q_loss_std = 0.0;
  double q_grad_mean = 0.0;
  double q_grad_std = 0.0;
  double wall_ms_per_loop = 0.0;
  double wall_ms_per_qupdate = 0.0;
  std::uint64_t param_count = 0;
};

struct TrainOptions {
  std::function<void(const MetricsRecord&)> on_epoch;
  // Called with the trainer and the 1-based epoch after each checkpoint_every epochs.
  std::function<void(const Trainer&, std::size_t)> on_checkpoint;
  std::size_t eval_threads = 0;
};

// Full run: total_env_steps env steps with evaluation, bias and statistics
// logged at every epoch boundary. Q statistics are averaged over the
// learning steps of the epoch (NaN when none); a degenerate bias
// normalizer is logged as NaN. Wall-time columns are 0 unless
// record_wall_time is set.
std::vector<MetricsRecord> train(const TrainerConfig& config, const TrainOptions& options = {});

}  // namespace droq
