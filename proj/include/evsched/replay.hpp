#pragma once

#include <span>
#include <vector>

#include "evsched/nn.hpp"

namespace evsched {

struct Transition {
  std::vector<double> state;
  double action = 0.0;  // kWh, as emitted by the agent
  double reward = 0.0;  // EUR (possibly shaped)
  double cost = 0.0;    // kWh
  std::vector<double> next_state;
  bool done = false;
};

/// Column-per-sample mini-batch.
struct Batch {
  Matrix states;
  Vector actions;
  Vector rewards;
  Vector costs;
  Matrix next_states;
  Vector dones;  // 1.0 for terminal transitions
  Eigen::Index size() const { return actions.size(); }
};

/// Fixed-capacity ring of transitions; the oldest entry is overwritten once
/// full. Sampling is uniform with replacement.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int state_dim);

  void push(const Transition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int state_dim() const { return state_dim_; }

  /// i-th stored transition, oldest first.
  Transition at(std::size_t i) const;

  /// Throws std::logic_error when empty.
  Batch sample(Rng& rng, std::size_t batch_size) const;
  Batch gather(std::span<const std::size_t> logical_indices) const;

 private:
  std::size_t physical(std::size_t logical) const { return (head_ + logical) % capacity_; }

  std::size_t capacity_;
  int state_dim_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;  // physical slot of the oldest entry
  Matrix states_;
  Matrix next_states_;
  Vector actions_;
  Vector rewards_;
  Vector costs_;
  Vector dones_;
};

}  // namespace evsched
