#pragma once

// Deterministic policy gradient learner: tanh actor, one critic, target
// copies of both, additive Gaussian exploration.

#include "evsched/agent.hpp"
#include "evsched/policy.hpp"
#include "evsched/replay.hpp"

namespace evsched {

struct DdpgOptions {
  std::vector<int> hidden{256, 256};
  double gamma = 0.995;
  double lr = 5e-4;
  double soft_update = 0.005;
  /// Exploration noise std as a fraction of the action half-range.
  double exploration_noise = 0.1;
};

class DdpgAgent final : public OffPolicyAgent {
 public:
  DdpgAgent(int obs_dim, ActionScale scale, DdpgOptions options, Rng& init_rng);

  std::string method() const override { return "ddpg"; }
  double explore_action(std::span<const double> obs, Rng& rng) const override;
  double greedy_action(std::span<const double> obs) const override;
  UpdateStats update(const Batch& batch, Rng& rng) override;
  std::vector<NamedNet> networks() const override;
  void load_networks(const std::vector<NamedNet>& nets) override;

  const DenseNet& actor() const { return actor_; }
  const DenseNet& critic() const { return critic_; }

 private:
  Vector unit_actions(const DenseNet& actor, const Matrix& states) const;

  ActionScale scale_;
  DdpgOptions options_;
  DenseNet actor_;
  DenseNet actor_target_;
  DenseNet critic_;
  DenseNet critic_target_;
  AdamState actor_adam_;
  AdamState critic_adam_;
};

}  // namespace evsched
