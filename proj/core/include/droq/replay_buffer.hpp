#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "droq/random.hpp"
#include "droq/tensor.hpp"

namespace droq {

class Checkpoint;

struct Transition {
  std::vector<double> obs;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_obs;
  // True only for genuine termination; time-limit truncation bootstraps.
  bool terminal = false;

  friend bool operator==(const Transition&, const Transition&) = default;
};

struct TransitionBatch {
  nn::Tensor obs;
  nn::Tensor action;
  std::vector<double> reward;
  nn::Tensor next_obs;
  std::vector<double> terminal;  // 1.0 where terminal

  std::size_t size() const { return reward.size(); }
};

// Fixed-capacity FIFO store with uniform sampling with replacement.
// Storage grows on demand up to capacity.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim);

  void push(const Transition& t);
  void push(std::span<const double> obs, std::span<const double> action, double reward,
            std::span<const double> next_obs, bool terminal);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t act_dim() const { return act_dim_; }

  // i-th oldest stored transition.
  Transition at(std::size_t i) const;

  TransitionBatch sample(std::size_t batch_size, RandomStream& rng) const;
  // Batch assembled from logical (oldest-first) indices.
  TransitionBatch gather(std::span<const std::size_t> indices) const;

  void save(Checkpoint& ckpt, const std::string& name = "replay") const;
  void load(const Checkpoint& ckpt, const std::string& name = "replay");

 private:
  std::size_t slot(std::size_t logical) const;

  std::size_t capacity_;
  std::size_t obs_dim_;
  std::size_t act_dim_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;  // slot of the oldest transition once full
  std::vector<double> obs_;
  std::vector<double> action_;
  std::vector<double> reward_;
  std::vector<double> next_obs_;
  std::vector<unsigned char> terminal_;
};

}  // namespace droq
