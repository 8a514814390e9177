#include "evsched/replay.hpp"

#include <stdexcept>

namespace evsched {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int state_dim)
    : capacity_(capacity), state_dim_(state_dim) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  const auto n = static_cast<Eigen::Index>(capacity);
  states_.resize(state_dim, n);
  next_states_.resize(state_dim, n);
  actions_.resize(n);
  rewards_.resize(n);
  costs_.resize(n);
  dones_.resize(n);
}

void ReplayBuffer::push(const Transition& t) {
  if (static_cast<int>(t.state.size()) != state_dim_ ||
      static_cast<int>(t.next_state.size()) != state_dim_) {
    throw std::invalid_argument("transition state has the wrong dimension");
  }
  std::size_t slot;
  if (size_ < capacity_) {
    slot = physical(size_);
    ++size_;
  } else {
    slot = head_;
    head_ = (head_ + 1) % capacity_;
  }
  const auto c = static_cast<Eigen::Index>(slot);
  states_.col(c) = Eigen::Map<const Vector>(t.state.data(), state_dim_);
  next_states_.col(c) = Eigen::Map<const Vector>(t.next_state.data(), state_dim_);
  actions_[c] = t.action;
  rewards_[c] = t.reward;
  costs_[c] = t.cost;
  dones_[c] = t.done ? 1.0 : 0.0;
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay index out of range");
  const auto c = static_cast<Eigen::Index>(physical(i));
  Transition t;
  t.state.assign(states_.col(c).data(), states_.col(c).data() + state_dim_);
  t.next_state.assign(next_states_.col(c).data(), next_states_.col(c).data() + state_dim_);
  t.action = actions_[c];
  t.reward = rewards_[c];
  t.cost = costs_[c];
  t.done = dones_[c] != 0.0;
  return t;
}

Batch ReplayBuffer::sample(Rng& rng, std::size_t batch_size) const {
  if (size_ == 0) throw std::logic_error("cannot sample from an empty replay buffer");
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = uniform_index(rng, size_);
  return gather(idx);
}

Batch ReplayBuffer::gather(std::span<const std::size_t> logical_indices) const {
  const auto n = static_cast<Eigen::Index>(logical_indices.size());
  Batch b;
  b.states.resize(state_dim_, n);
  b.next_states.resize(state_dim_, n);
  b.actions.resize(n);
  b.rewards.resize(n);
  b.costs.resize(n);
  b.dones.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t logical = logical_indices[static_cast<std::size_t>(j)];
    if (logical >= size_) throw std::out_of_range("replay index out of range");
    const auto c = static_cast<Eigen::Index>(physical(logical));
    b.states.col(j) = states_.col(c);
    b.next_states.col(j) = next_states_.col(c);
    b.actions[j] = actions_[c];
    b.rewards[j] = rewards_[c];
    b.costs[j] = costs_[c];
    b.dones[j] = dones_[c];
  }
  return b;
}

}  // namespace evsched
