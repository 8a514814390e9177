#pragma once

#include <span>
#include <string>
#include <vector>

#include "evsched/nn.hpp"

namespace evsched {

struct Batch;

struct NamedNet {
  std::string name;
  DenseNet net;
};

struct UpdateStats {
  double critic_loss = 0.0;
  double cost_critic_loss = 0.0;
  double actor_objective = 0.0;
  bool actor_stepped = false;
  /// False when any sub-step was skipped on a non-finite value.
  bool finite = true;
};

/// Common surface of the off-policy learners driven by the training loop.
class OffPolicyAgent {
 public:
  virtual ~OffPolicyAgent() = default;

  virtual std::string method() const = 0;
  /// Behaviour action (kWh) including exploration noise.
  virtual double explore_action(std::span<const double> obs, Rng& rng) const = 0;
  /// Deterministic action used for evaluation.
  virtual double greedy_action(std::span<const double> obs) const = 0;
  virtual UpdateStats update(const Batch& batch, Rng& rng) = 0;
  /// Every network, for checkpoints and best-model snapshots.
  virtual std::vector<NamedNet> networks() const = 0;
  /// Restores networks by name; throws on an architecture mismatch.
  virtual void load_networks(const std::vector<NamedNet>& nets) = 0;
  virtual double alpha() const { return 0.0; }
  virtual double lambda() const { return 0.0; }
};

/// Copies the parameters of `from` into `to`, checking layer sizes.
void assign_network(DenseNet& to, const std::vector<NamedNet>& from, const std::string& name);

}  // namespace evsched
