#include "evsched/penalized.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace evsched {

PenalizedBase parse_penalized_base(std::string_view text) {
  if (text == "sac") return PenalizedBase::Sac;
  if (text == "ddpg") return PenalizedBase::Ddpg;
  throw std::invalid_argument(fmt::format("unknown penalized base '{}' (expected sac or ddpg)", text));
}

void PenaltyConfig::validate() const {
  if (!(sigma >= 0.0)) throw std::invalid_argument("method.sigma must be >= 0");
  if (!(exploration_noise >= 0.0)) {
    throw std::invalid_argument("method.exploration_noise must be >= 0");
  }
}

std::unique_ptr<OffPolicyAgent> make_penalized_agent(int obs_dim, ActionScale scale,
                                                     const AlSacOptions& options,
                                                     const LagrangeState& lag,
                                                     const PenaltyConfig& pen, Rng& init_rng) {
  pen.validate();
  if (pen.base == PenalizedBase::Ddpg) {
    DdpgOptions d;
    d.hidden = options.hidden;
    d.gamma = options.gamma;
    d.lr = options.lr;
    d.soft_update = options.soft_update;
    d.exploration_noise = pen.exploration_noise;
    return std::make_unique<DdpgAgent>(obs_dim, scale, d, init_rng);
  }
  AlSacOptions o = options;
  o.name = "sac";
  LagrangeState l = lag;
  l.lambda = 0.0;
  l.learn_lambda = false;
  l.penalty_override = 0.0;
  return std::make_unique<AlSacAgent>(obs_dim, scale, o, l, init_rng);
}

TrainResult train_penalized(OffPolicyAgent& agent, EvEnv& env,
                            std::span<const std::size_t> train_days,
                            const ObservationScaling& scaling, TrainConfig cfg,
                            const PenaltyConfig& pen) {
  pen.validate();
  cfg.reward_penalty = pen.sigma;
  return train(agent, env, train_days, scaling, cfg);
}

}  // namespace evsched
