#pragma once

// Penalized-reward baselines: SAC or DDPG trained on R - sigma * R^c with no
// constraint handling of their own.

#include <memory>
#include <string_view>

#include "evsched/alsac.hpp"
#include "evsched/ddpg.hpp"
#include "evsched/trainer.hpp"

namespace evsched {

enum class PenalizedBase { Sac, Ddpg };

PenalizedBase parse_penalized_base(std::string_view text);

struct PenaltyConfig {
  double sigma = 0.0;  // EUR per kWh of violation
  PenalizedBase base = PenalizedBase::Sac;
  double exploration_noise = 0.1;  // ddpg only, fraction of the half-range

  void validate() const;
};

/// The SAC variant is the constrained agent with lambda pinned at 0, no
/// quadratic term and the entropy temperature still adapted.
std::unique_ptr<OffPolicyAgent> make_penalized_agent(int obs_dim, ActionScale scale,
                                                     const AlSacOptions& options,
                                                     const LagrangeState& lag,
                                                     const PenaltyConfig& pen, Rng& init_rng);

TrainResult train_penalized(OffPolicyAgent& agent, EvEnv& env,
                            std::span<const std::size_t> train_days,
                            const ObservationScaling& scaling, TrainConfig cfg,
                            const PenaltyConfig& pen);

}  // namespace evsched
