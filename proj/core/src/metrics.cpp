#include "droq/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string>
#include <thread>

#include "droq/errors.hpp"

namespace droq {
namespace {

EvalTrajectory run_episode(const ActionFn& act, const env::Environment& prototype, RandomStream rng) {
  std::unique_ptr<env::Environment> env = prototype.clone();
  EvalTrajectory traj;
  std::vector<double> obs = env->reset(rng);
  const std::size_t limit = env->spec().max_episode_steps;
  for (std::size_t t = 0; t < limit; ++t) {
    std::vector<double> a = act(obs);
    env::StepResult r = env->step(a);
    traj.obs.push_back(std::move(obs));
    traj.action.push_back(std::move(a));
    traj.reward.push_back(r.reward);
    if (r.terminal || r.truncated) break;
    obs = std::move(r.obs);
  }
  return traj;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_std(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

std::size_t evaluation_threads_from_env() {
  const char* raw = std::getenv("DROQ_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  char* end = nullptr;
  const unsigned long n = std::strtoul(raw, &end, 10);
  if (end == raw || *end != '\0' || n == 0) return 1;
  return static_cast<std::size_t>(n);
}

ReturnEstimate evaluate_return(const ActionFn& act, const env::Environment& prototype, std::size_t episodes,
                               const RandomStream& rng, std::size_t threads) {
  if (episodes == 0) throw ConfigError("evaluate_return: episodes must be at least 1");
  if (threads == 0) threads = evaluation_threads_from_env();
  threads = std::min(threads, episodes);

  ReturnEstimate out;
  out.trajectories.resize(episodes);
  if (threads <= 1) {
    for (std::size_t e = 0; e < episodes; ++e) out.trajectories[e] = run_episode(act, prototype, rng.fork(e));
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t e = w; e < episodes; e += threads) {
            out.trajectories[e] = run_episode(act, prototype, rng.fork(e));
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }
  double total = 0.0;
  for (const EvalTrajectory& traj : out.trajectories) {
    double ret = 0.0;
    for (double r : traj.reward) ret += r;
    out.episode_returns.push_back(ret);
    total += ret;
  }
  out.mean_return = total / static_cast<double>(episodes);
  return out;
}

ReturnEstimate evaluate_return(const SquashedGaussianPolicy& policy, const env::Environment& prototype,
                               std::size_t episodes, const RandomStream& rng, std::size_t threads) {
  const ActionFn act = [&policy](std::span<const double> obs) {
    const nn::Tensor a = policy.mean_action(nn::Tensor(1, obs.size(), std::vector<double>(obs.begin(), obs.end())));
    return std::vector<double>(a.values().begin(), a.values().end());
  };
  return evaluate_return(act, prototype, episodes, rng, threads);
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc = rewards[t] + gamma * acc;
    g[t] = acc;
  }
  return g;
}

BiasEstimate estimate_bias(const QHatFn& q_hat, std::span<const EvalTrajectory> trajectories, double gamma) {
  std::vector<double> q_mc;
  std::vector<double> q_est;
  for (const EvalTrajectory& traj : trajectories) {
    if (traj.size() == 0) continue;
    const std::vector<double> g = discounted_returns(traj.reward, gamma);
    q_mc.insert(q_mc.end(), g.begin(), g.end());
    const std::size_t obs_dim = traj.obs.front().size();
    const std::size_t act_dim = traj.action.front().size();
    nn::Tensor obs(traj.size(), obs_dim);
    nn::Tensor act(traj.size(), act_dim);
    for (std::size_t t = 0; t < traj.size(); ++t) {
      std::copy(traj.obs[t].begin(), traj.obs[t].end(), obs.row(t).begin());
      std::copy(traj.action[t].begin(), traj.action[t].end(), act.row(t).begin());
    }
    const std::vector<double> est = q_hat(obs, act);
    if (est.size() != traj.size()) throw ConfigError("estimate_bias: Q-hat returned wrong row count");
    q_est.insert(q_est.end(), est.begin(), est.end());
  }
  if (q_mc.empty()) throw ConfigError("estimate_bias: no state-action pairs");

  BiasEstimate out;
  out.pairs = q_mc.size();
  out.normalizer = mean_of(q_mc);
  const double scale = std::abs(out.normalizer);
  if (scale < 1e-9) throw DomainError("estimate_bias: degenerate normalizer (mean Monte-Carlo Q is ~0)");
  std::vector<double> err(q_mc.size());
  for (std::size_t i = 0; i < err.size(); ++i) err[i] = std::abs(q_mc[i] - q_est[i]) / scale;
  out.avg_bias = mean_of(err);
  out.std_bias = population_std(err, out.avg_bias);
  return out;
}

BiasEstimate estimate_bias(const QEnsemble& ensemble, std::span<const EvalTrajectory> trajectories, double gamma) {
  const QHatFn q_hat = [&ensemble](const nn::Tensor& obs, const nn::Tensor& act) {
    std::vector<double> mean(obs.rows(), 0.0);
    const double k = static_cast<double>(ensemble.size());
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
      const std::vector<double> q = ensemble.predict(i, obs, act);
      for (std::size_t b = 0; b < mean.size(); ++b) mean[b] += q[b] / k;
    }
    return mean;
  };
  return estimate_bias(q_hat, trajectories, gamma);
}

QStats q_stats(std::span<const double> losses, std::span<const double> mean_gradient) {
  if (losses.empty()) throw ConfigError("q_stats: at least one member loss required");
  QStats s;
  s.loss_mean = mean_of(losses);
  s.loss_std = population_std(losses, s.loss_mean);
  if (!mean_gradient.empty()) {
    s.grad_mean = mean_of(mean_gradient);
    s.grad_std = population_std(mean_gradient, s.grad_mean);
  }
  return s;
}

ProfileResult profile_update(Trainer& trainer, std::size_t warmup_loops, std::size_t timed_loops) {
  while (!trainer.learning()) trainer.env_step();
  // The step that leaves the random phase is the first learning step.
  for (std::size_t i = 0; i < warmup_loops; ++i) trainer.env_step();
  std::vector<double> loop_ms;
  std::vector<double> q_ms;
  loop_ms.reserve(timed_loops);
  q_ms.reserve(timed_loops);
  for (std::size_t i = 0; i < timed_loops; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    trainer.env_step();
    const auto t1 = std::chrono::steady_clock::now();
    loop_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    q_ms.push_back(trainer.last_q_block_ms());
  }
  return {median(std::move(loop_ms)), median(std::move(q_ms)), timed_loops};
}

std::vector<MetricsRecord> train(const TrainerConfig& config, const TrainOptions& options) {
  Trainer trainer(config);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<MetricsRecord> records;

  QStats sum;
  std::size_t stat_steps = 0;
  double loop_ms = 0.0;
  double q_ms = 0.0;
  std::size_t epoch = 0;
  for (std::size_t step = 1; step <= config.total_env_steps; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    trainer.env_step();
    const auto t1 = std::chrono::steady_clock::now();
    loop_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
    q_ms += trainer.last_q_block_ms();
    if (trainer.learning()) {
      const QStats& s = trainer.last_q_stats();
      sum.loss_mean += s.loss_mean;
      sum.loss_std += s.loss_std;
      sum.grad_mean += s.grad_mean;
      sum.grad_std += s.grad_std;
      ++stat_steps;
    }
    if (step % config.epoch_steps != 0 && step != config.total_env_steps) continue;

    ++epoch;
    const std::size_t steps_in_epoch = (step - 1) % config.epoch_steps + 1;
    MetricsRecord rec;
    rec.env_step = step;
    const ReturnEstimate ret = evaluate_return(trainer.policy(), trainer.environment(), config.eval_episodes,
                                               trainer.next_eval_stream(), options.eval_threads);
    rec.avg_return = ret.mean_return;
    try {
      const BiasEstimate bias = estimate_bias(trainer.ensemble(), ret.trajectories, config.gamma);
      rec.avg_bias = bias.avg_bias;
      rec.std_bias = bias.std_bias;
    } catch (const DomainError&) {
      rec.avg_bias = rec.std_bias = nan;
    }
    if (stat_steps > 0) {
      const double n = static_cast<double>(stat_steps);
      rec.q_loss_mean = sum.loss_mean / n;
      rec.q_loss_std = sum.loss_std / n;
      rec.q_grad_mean = sum.grad_mean / n;
      rec.q_grad_std = sum.grad_std / n;
    } else {
      rec.q_loss_mean = rec.q_loss_std = rec.q_grad_mean = rec.q_grad_std = nan;
    }
    if (config.record_wall_time) {
      rec.wall_ms_per_loop = loop_ms / static_cast<double>(steps_in_epoch);
      rec.wall_ms_per_qupdate = q_ms / static_cast<double>(steps_in_epoch);
    }
    rec.param_count = trainer.ensemble().parameter_count();
    records.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
    if (options.on_checkpoint && config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) {
      options.on_checkpoint(trainer, epoch);
    }
    sum = QStats{};
    stat_steps = 0;
    loop_ms = q_ms = 0.0;
  }
  return records;
}

}  // namespace droq
