#include "droq/replay_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "droq/checkpoint.hpp"
#include "droq/errors.hpp"

namespace droq {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
  if (capacity == 0 || obs_dim == 0 || act_dim == 0) {
    throw ConfigError("ReplayBuffer: capacity and dimensions must be positive");
  }
}

void ReplayBuffer::push(const Transition& t) { push(t.obs, t.action, t.reward, t.next_obs, t.terminal); }

void ReplayBuffer::push(std::span<const double> obs, std::span<const double> action, double reward,
                        std::span<const double> next_obs, bool terminal) {
  if (obs.size() != obs_dim_ || next_obs.size() != obs_dim_ || action.size() != act_dim_) {
    throw ConfigError("ReplayBuffer::push: transition dimensions do not match the buffer");
  }
  if (!std::isfinite(reward)) throw NumericError("ReplayBuffer::push: non-finite reward");
  if (size_ < capacity_) {
    obs_.insert(obs_.end(), obs.begin(), obs.end());
    action_.insert(action_.end(), action.begin(), action.end());
    reward_.push_back(reward);
    next_obs_.insert(next_obs_.end(), next_obs.begin(), next_obs.end());
    terminal_.push_back(terminal ? 1 : 0);
    ++size_;
    return;
  }
  const std::size_t s = head_;
  std::copy(obs.begin(), obs.end(), obs_.begin() + static_cast<std::ptrdiff_t>(s * obs_dim_));
  std::copy(action.begin(), action.end(), action_.begin() + static_cast<std::ptrdiff_t>(s * act_dim_));
  reward_[s] = reward;
  std::copy(next_obs.begin(), next_obs.end(), next_obs_.begin() + static_cast<std::ptrdiff_t>(s * obs_dim_));
  terminal_[s] = terminal ? 1 : 0;
  head_ = (head_ + 1) % capacity_;
}

std::size_t ReplayBuffer::slot(std::size_t logical) const { return (head_ + logical) % capacity_; }

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw UsageError("ReplayBuffer::at: index out of range");
  const std::size_t s = slot(i);
  Transition t;
  t.obs.assign(obs_.begin() + static_cast<std::ptrdiff_t>(s * obs_dim_),
               obs_.begin() + static_cast<std::ptrdiff_t>((s + 1) * obs_dim_));
  t.action.assign(action_.begin() + static_cast<std::ptrdiff_t>(s * act_dim_),
                  action_.begin() + static_cast<std::ptrdiff_t>((s + 1) * act_dim_));
  t.reward = reward_[s];
  t.next_obs.assign(next_obs_.begin() + static_cast<std::ptrdiff_t>(s * obs_dim_),
                    next_obs_.begin() + static_cast<std::ptrdiff_t>((s + 1) * obs_dim_));
  t.terminal = terminal_[s] != 0;
  return t;
}

TransitionBatch ReplayBuffer::sample(std::size_t batch_size, RandomStream& rng) const {
  if (size_ == 0) throw UsageError("ReplayBuffer::sample: buffer is empty");
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(size_));
  return gather(idx);
}

TransitionBatch ReplayBuffer::gather(std::span<const std::size_t> indices) const {
  TransitionBatch b;
  const std::size_t n = indices.size();
  b.obs = nn::Tensor(n, obs_dim_);
  b.action = nn::Tensor(n, act_dim_);
  b.next_obs = nn::Tensor(n, obs_dim_);
  b.reward.resize(n);
  b.terminal.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (indices[r] >= size_) throw UsageError("ReplayBuffer::gather: index out of range");
    const std::size_t s = slot(indices[r]);
    std::copy_n(obs_.begin() + static_cast<std::ptrdiff_t>(s * obs_dim_), obs_dim_, b.obs.row(r).begin());
    std::copy_n(action_.begin() + static_cast<std::ptrdiff_t>(s * act_dim_), act_dim_, b.action.row(r).begin());
    std::copy_n(next_obs_.begin() + static_cast<std::ptrdiff_t>(s * obs_dim_), obs_dim_,
                b.next_obs.row(r).begin());
    b.reward[r] = reward_[s];
    b.terminal[r] = terminal_[s] ? 1.0 : 0.0;
  }
  return b;
}

void ReplayBuffer::save(Checkpoint& ckpt, const std::string& name) const {
  // Stored oldest-first so a restore resumes with head at slot 0.
  std::vector<std::size_t> all(size_);
  for (std::size_t i = 0; i < size_; ++i) all[i] = i;
  TransitionBatch b = gather(all);
  nn::Tensor meta(1, 4, {static_cast<double>(capacity_), static_cast<double>(obs_dim_),
                         static_cast<double>(act_dim_), static_cast<double>(size_)});
  nn::Tensor reward(size_, 1, b.reward);
  nn::Tensor terminal(size_, 1, b.terminal);
  ckpt.add_tensors(name, {meta, b.obs, b.action, reward, b.next_obs, terminal});
}

void ReplayBuffer::load(const Checkpoint& ckpt, const std::string& name) {
  const auto& t = ckpt.tensors(name);
  if (t.size() != 6 || t[0].size() != 4) throw ConfigError("ReplayBuffer::load: bad section");
  if (static_cast<std::size_t>(t[0].values()[1]) != obs_dim_ ||
      static_cast<std::size_t>(t[0].values()[2]) != act_dim_) {
    throw ConfigError("ReplayBuffer::load: dimension mismatch");
  }
  const auto n = static_cast<std::size_t>(t[0].values()[3]);
  size_ = 0;
  head_ = 0;
  obs_.clear();
  action_.clear();
  reward_.clear();
  next_obs_.clear();
  terminal_.clear();
  for (std::size_t i = 0; i < n; ++i) {
    push(t[1].row(i), t[2].row(i), t[3].values()[i], t[4].row(i), t[5].values()[i] != 0.0);
  }
}

}  // namespace droq
