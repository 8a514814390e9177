#include "evsched/ddpg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evsched/alsac.hpp"

namespace evsched {

DdpgAgent::DdpgAgent(int obs_dim, ActionScale scale, DdpgOptions options, Rng& init_rng)
    : scale_(scale), options_(std::move(options)) {
  if (!(options_.gamma > 0.0 && options_.gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1]");
  }
  if (!(options_.exploration_noise >= 0.0)) {
    throw std::invalid_argument("exploration noise must be >= 0");
  }
  std::vector<int> actor_sizes{obs_dim};
  actor_sizes.insert(actor_sizes.end(), options_.hidden.begin(), options_.hidden.end());
  actor_sizes.push_back(1);
  std::vector<int> critic_sizes = actor_sizes;
  critic_sizes.front() = obs_dim + 1;

  actor_ = DenseNet(actor_sizes);
  actor_.init_uniform(init_rng, 0.01);
  critic_ = DenseNet(critic_sizes);
  critic_.init_uniform(init_rng);
  actor_target_ = actor_;
  critic_target_ = critic_;
  actor_adam_ = AdamState(actor_.param_count());
  critic_adam_ = AdamState(critic_.param_count());
}

double DdpgAgent::greedy_action(std::span<const double> obs) const {
  return scale_.to_action(std::tanh(actor_.forward(obs)[0]));
}

double DdpgAgent::explore_action(std::span<const double> obs, Rng& rng) const {
  const double noisy =
      greedy_action(obs) + options_.exploration_noise * scale_.scale * standard_normal(rng);
  return std::clamp(noisy, scale_.low(), scale_.high());
}

Vector DdpgAgent::unit_actions(const DenseNet& actor, const Matrix& states) const {
  return actor.forward(states).row(0).transpose().array().tanh().matrix();
}

UpdateStats DdpgAgent::update(const Batch& batch, Rng& /*rng*/) {
  const Eigen::Index n = batch.size();
  UpdateStats stats;

  const Vector next_actions = unit_actions(actor_target_, batch.next_states);
  const Vector next_q =
      critic_target_.forward(critic_inputs(batch.next_states, next_actions)).row(0).transpose();
  const Vector zero = Vector::Zero(n);
  const Vector y = bootstrap_target(batch.rewards, batch.dones, next_q, zero, options_.gamma, 0.0);

  Vector taken(n);
  for (Eigen::Index i = 0; i < n; ++i) taken[i] = scale_.to_unit(batch.actions[i]);
  Vector critic_grad = Vector::Zero(critic_.param_count());
  stats.critic_loss = critic_loss(critic_, critic_inputs(batch.states, taken), y, &critic_grad);
  stats.finite = std::isfinite(stats.critic_loss) &&
                 adam_step(critic_.params(), critic_grad, critic_adam_, options_.lr);

  // Ascend mean Q(s, tanh(actor(s))) through the critic's action input.
  Activations actor_cache;
  const Matrix pre = actor_.forward(batch.states, &actor_cache);
  const Vector u = pre.row(0).transpose().array().tanh().matrix();
  Activations critic_cache;
  const Matrix q = critic_.forward(critic_inputs(batch.states, u), &critic_cache);
  stats.actor_objective = q.mean();
  const Matrix upstream = Matrix::Constant(1, n, 1.0 / static_cast<double>(n));
  const Matrix dinput = critic_.backward(critic_cache, upstream, nullptr);
  Matrix dpre(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dpre(0, i) = dinput(dinput.rows() - 1, i) * (1.0 - u[i] * u[i]);
  }
  Vector actor_grad = Vector::Zero(actor_.param_count());
  actor_.backward(actor_cache, dpre, &actor_grad);
  const Vector descent = -actor_grad;
  const bool actor_ok =
      std::isfinite(stats.actor_objective) && adam_step(actor_.params(), descent, actor_adam_, options_.lr);
  stats.actor_stepped = actor_ok;
  stats.finite &= actor_ok;

  soft_update(critic_target_.params(), critic_.params(), options_.soft_update);
  soft_update(actor_target_.params(), actor_.params(), options_.soft_update);
  return stats;
}

std::vector<NamedNet> DdpgAgent::networks() const {
  return {{"actor", actor_},
          {"actor_target", actor_target_},
          {"q", critic_},
          {"q_target", critic_target_}};
}

void DdpgAgent::load_networks(const std::vector<NamedNet>& nets) {
  assign_network(actor_, nets, "actor");
  assign_network(actor_target_, nets, "actor_target");
  assign_network(critic_, nets, "q");
  assign_network(critic_target_, nets, "q_target");
}

}  // namespace evsched
