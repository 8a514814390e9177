#include "evsched/alsac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace evsched {

void LagrangeState::validate() const {
  if (!(alpha >= 0.0) || !(lambda >= 0.0)) {
    throw std::invalid_argument("multipliers must be non-negative");
  }
  if (!(alpha_lr > 0.0) || !(lambda_lr > 0.0)) {
    throw std::invalid_argument("multiplier step sizes must be positive");
  }
  if (penalty_override && !(*penalty_override >= 0.0)) {
    throw std::invalid_argument("penalty weight must be non-negative");
  }
  if (!(cost_budget >= 0.0)) throw std::invalid_argument("cost budget must be non-negative");
}

double project_nonnegative(double previous, double step) {
  const double next = previous + step;
  // Cancellation between previous and step leaves residues of a few ulps
  // of their magnitude; those are zero.
  const double noise = 4.0 * std::numeric_limits<double>::epsilon() *
                       (std::abs(previous) + std::abs(step));
  return next <= noise ? 0.0 : next;
}

LagrangeState dual_update(const LagrangeState& lag, double mean_log_prob, double mean_cost_q) {
  LagrangeState next = lag;
  const double entropy_residual = -lag.entropy_target - mean_log_prob;  // entropy - target
  const double cost_residual = mean_cost_q - lag.cost_budget;
  double alpha_dir = 0.0;
  double lambda_dir = 0.0;
  switch (lag.rule) {
    case DualRule::Residual:
      alpha_dir = -entropy_residual;
      lambda_dir = cost_residual;
      break;
    case DualRule::LiteralAscent:
      alpha_dir = entropy_residual;
      lambda_dir = -cost_residual;
      break;
  }
  if (lag.learn_alpha) next.alpha = project_nonnegative(lag.alpha, lag.alpha_lr * alpha_dir);
  if (lag.learn_lambda) next.lambda = project_nonnegative(lag.lambda, lag.lambda_lr * lambda_dir);
  return next;
}

CriticPair::CriticPair(const std::vector<int>& layer_sizes, Rng& rng) {
  for (std::size_t k = 0; k < 2; ++k) {
    online[k] = DenseNet(layer_sizes);
    online[k].init_uniform(rng);
    target[k] = online[k];
    adam[k] = AdamState(online[k].param_count());
  }
}

Vector CriticPair::min_target(const Matrix& inputs) const {
  const Vector q0 = target[0].forward(inputs).row(0).transpose();
  const Vector q1 = target[1].forward(inputs).row(0).transpose();
  return q0.cwiseMin(q1);
}

void CriticPair::soft_update_targets(double eta) {
  for (std::size_t k = 0; k < 2; ++k) soft_update(target[k].params(), online[k].params(), eta);
}

Matrix critic_inputs(const Matrix& states, const Vector& unit_actions) {
  Matrix in(states.rows() + 1, states.cols());
  in.topRows(states.rows()) = states;
  in.row(states.rows()) = unit_actions.transpose();
  return in;
}

Vector bootstrap_target(const Vector& rewards, const Vector& dones, const Vector& next_q,
                        const Vector& next_log_prob, double gamma, double alpha) {
  Vector y(rewards.size());
  for (Eigen::Index i = 0; i < rewards.size(); ++i) {
    y[i] = dones[i] != 0.0 ? rewards[i]
                           : rewards[i] + gamma * (next_q[i] - alpha * next_log_prob[i]);
  }
  return y;
}

NextActions sample_next_actions(const GaussianPolicy& policy, const Matrix& next_states,
                                const Vector& noise) {
  const Matrix out = policy.net().forward(next_states);
  NextActions next{Vector(noise.size()), Vector(noise.size())};
  const double scale = policy.action_scale().scale;
  for (Eigen::Index i = 0; i < noise.size(); ++i) {
    const double log_std = policy.clamp_log_std(out(1, i));
    const double y = std::tanh(out(0, i) + std::exp(log_std) * noise[i]);
    next.unit_actions[i] = y;
    next.log_prob[i] = squashed_log_prob(noise[i], log_std, y, scale);
  }
  return next;
}

Vector critic_target(const Batch& batch, const CriticPair& critics, const NextActions& next,
                     double gamma, double alpha) {
  const Vector q = critics.min_target(critic_inputs(batch.next_states, next.unit_actions));
  return bootstrap_target(batch.rewards, batch.dones, q, next.log_prob, gamma, alpha);
}

Vector cost_critic_target(const Batch& batch, const CriticPair& cost_critics,
                          const NextActions& next, double gamma) {
  const Vector q = cost_critics.min_target(critic_inputs(batch.next_states, next.unit_actions));
  return bootstrap_target(batch.costs, batch.dones, q, Vector::Zero(q.size()), gamma, 0.0);
}

double critic_loss(const DenseNet& critic, const Matrix& inputs, const Vector& targets,
                   Vector* grad) {
  Activations cache;
  const Matrix q = critic.forward(inputs, grad ? &cache : nullptr);
  const Eigen::RowVectorXd residual = q.row(0) - targets.transpose();
  const double n = static_cast<double>(targets.size());
  const double loss = residual.squaredNorm() / n;
  if (grad) critic.backward(cache, (2.0 / n) * residual, grad);
  return loss;
}

CriticUpdate critic_update(CriticPair& critics, const Matrix& inputs, const Vector& targets,
                           double lr) {
  CriticUpdate result;
  std::array<Vector, 2> grads;
  std::array<double, 2> losses{};
  for (std::size_t k = 0; k < 2; ++k) {
    grads[k] = Vector::Zero(critics.online[k].param_count());
    losses[k] = critic_loss(critics.online[k], inputs, targets, &grads[k]);
  }
  result.loss = 0.5 * (losses[0] + losses[1]);
  if (!std::isfinite(result.loss)) {
    result.applied = false;
    return result;
  }
  for (std::size_t k = 0; k < 2; ++k) {
    result.applied &= adam_step(critics.online[k].params(), grads[k], critics.adam[k], lr);
  }
  return result;
}

namespace {

// Forward quantities of the actor objective at re-sampled actions; the
// multipliers only enter afterwards.
struct ActorPass {
  Activations policy_cache;
  Vector y, sigma, log_prob, noise;
  std::vector<bool> clamped;
  std::array<Activations, 2> q_cache, qc_cache;
  std::array<Eigen::RowVectorXd, 2> q, qc;
  Eigen::Index action_row = 0;
  double mean_q = 0.0;
  double mean_log_prob = 0.0;
  double mean_cost_q = 0.0;
};

ActorPass actor_forward(const GaussianPolicy& policy, const Matrix& states, const Vector& noise,
                        const CriticPair& critics, const CriticPair& cost_critics,
                        bool keep_caches) {
  const Eigen::Index n = states.cols();
  if (noise.size() != n) throw std::invalid_argument("noise size must match the batch");
  const double scale = policy.action_scale().scale;
  ActorPass p;
  p.noise = noise;
  const Matrix out = policy.net().forward(states, keep_caches ? &p.policy_cache : nullptr);
  p.y.resize(n);
  p.sigma.resize(n);
  p.log_prob.resize(n);
  p.clamped.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double log_std = policy.clamp_log_std(out(1, i));
    p.clamped[static_cast<std::size_t>(i)] = log_std != out(1, i);
    p.sigma[i] = std::exp(log_std);
    p.y[i] = std::tanh(out(0, i) + p.sigma[i] * noise[i]);
    p.log_prob[i] = squashed_log_prob(noise[i], log_std, p.y[i], scale);
  }
  const Matrix inputs = critic_inputs(states, p.y);
  p.action_row = states.rows();
  for (std::size_t k = 0; k < 2; ++k) {
    p.q[k] = critics.online[k].forward(inputs, keep_caches ? &p.q_cache[k] : nullptr).row(0);
    p.qc[k] =
        cost_critics.online[k].forward(inputs, keep_caches ? &p.qc_cache[k] : nullptr).row(0);
  }
  p.mean_q = p.q[0].cwiseMin(p.q[1]).mean();
  p.mean_log_prob = p.log_prob.mean();
  p.mean_cost_q = p.qc[0].cwiseMin(p.qc[1]).mean();
  return p;
}

LagrangianEval actor_objective(const ActorPass& p, const LagrangeState& lag) {
  LagrangianEval eval;
  eval.mean_q = p.mean_q;
  eval.mean_log_prob = p.mean_log_prob;
  eval.mean_cost_q = p.mean_cost_q;
  const double excess = std::max(0.0, p.mean_cost_q - lag.cost_budget);
  eval.value = p.mean_q + lag.alpha * (-lag.entropy_target - p.mean_log_prob) +
               lag.lambda * (lag.cost_budget - p.mean_cost_q) -
               0.5 * lag.penalty_weight() * excess * excess;
  return eval;
}

void actor_backward(const ActorPass& p, const GaussianPolicy& policy, const CriticPair& critics,
                    const CriticPair& cost_critics, const LagrangeState& lag, Vector* grad) {
  const Eigen::Index n = p.y.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double excess = std::max(0.0, p.mean_cost_q - lag.cost_budget);
  const double g_q = inv_n;
  const double g_qc = (-lag.lambda - lag.penalty_weight() * excess) * inv_n;
  const double g_log_prob = -lag.alpha * inv_n;

  // dL/dy through whichever critic attains each minimum.
  Vector dl_dy = Vector::Zero(n);
  for (std::size_t k = 0; k < 2; ++k) {
    Eigen::RowVectorXd up_q = Eigen::RowVectorXd::Zero(n);
    Eigen::RowVectorXd up_qc = Eigen::RowVectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool pick_q = k == 0 ? p.q[0][i] <= p.q[1][i] : p.q[0][i] > p.q[1][i];
      const bool pick_qc = k == 0 ? p.qc[0][i] <= p.qc[1][i] : p.qc[0][i] > p.qc[1][i];
      if (pick_q) up_q[i] = g_q;
      if (pick_qc) up_qc[i] = g_qc;
    }
    dl_dy += critics.online[k].backward(p.q_cache[k], up_q, nullptr).row(p.action_row).transpose();
    if (g_qc != 0.0) {
      dl_dy += cost_critics.online[k]
                   .backward(p.qc_cache[k], up_qc, nullptr)
                   .row(p.action_row)
                   .transpose();
    }
  }

  Matrix upstream(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double one_minus_y2 = 1.0 - p.y[i] * p.y[i];
    const double dlogp_du = 2.0 * p.y[i] * one_minus_y2 / (one_minus_y2 + kSquashEps);
    const double dl_du = dl_dy[i] * one_minus_y2 + g_log_prob * dlogp_du;
    upstream(0, i) = dl_du;
    // d log_prob / d log_std carries an extra -1 from the Gaussian normaliser.
    upstream(1, i) = p.clamped[static_cast<std::size_t>(i)]
                         ? 0.0
                         : dl_du * p.sigma[i] * p.noise[i] - g_log_prob;
  }
  policy.net().backward(p.policy_cache, upstream, grad);
}

}  // namespace

LagrangianEval lagrangian_value(const GaussianPolicy& policy, const Matrix& states,
                                const Vector& noise, const CriticPair& critics,
                                const CriticPair& cost_critics, const LagrangeState& lag,
                                Vector* grad) {
  const ActorPass pass =
      actor_forward(policy, states, noise, critics, cost_critics, grad != nullptr);
  if (grad) actor_backward(pass, policy, critics, cost_critics, lag, grad);
  return actor_objective(pass, lag);
}

ActorUpdate actor_update(GaussianPolicy& policy, AdamState& adam, const Matrix& states,
                         const Vector& noise, const CriticPair& critics,
                         const CriticPair& cost_critics, const LagrangeState& lag, double lr) {
  ActorUpdate result;
  const ActorPass pass = actor_forward(policy, states, noise, critics, cost_critics, true);
  result.lag = dual_update(lag, pass.mean_log_prob, pass.mean_cost_q);
  result.eval = actor_objective(pass, result.lag);
  Vector grad = Vector::Zero(policy.net().param_count());
  actor_backward(pass, policy, critics, cost_critics, result.lag, &grad);
  // Ascent on L is descent on -L.
  result.applied = adam_step(policy.net().params(), -grad, adam, lr);
  return result;
}

AlSacAgent::AlSacAgent(int obs_dim, ActionScale scale, AlSacOptions options, LagrangeState lag,
                       Rng& init_rng)
    : scale_(scale), options_(std::move(options)), lag_(lag) {
  lag_.validate();
  if (!(options_.gamma > 0.0 && options_.gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1]");
  }
  if (options_.actor_delay < 1) throw std::invalid_argument("actor_delay must be >= 1");
  policy_ = GaussianPolicy(obs_dim, options_.hidden, scale);
  policy_.init(init_rng);
  policy_adam_ = AdamState(policy_.net().param_count());
  std::vector<int> critic_sizes{obs_dim + 1};
  critic_sizes.insert(critic_sizes.end(), options_.hidden.begin(), options_.hidden.end());
  critic_sizes.push_back(1);
  critics_ = CriticPair(critic_sizes, init_rng);
  cost_critics_ = CriticPair(critic_sizes, init_rng);
}

double AlSacAgent::explore_action(std::span<const double> obs, Rng& rng) const {
  return policy_.sample(obs, standard_normal(rng)).action;
}

double AlSacAgent::greedy_action(std::span<const double> obs) const {
  return policy_.deterministic_action(obs);
}

UpdateStats AlSacAgent::update(const Batch& batch, Rng& rng) {
  const Eigen::Index n = batch.size();
  UpdateStats stats;

  Vector next_noise(n);
  for (Eigen::Index i = 0; i < n; ++i) next_noise[i] = standard_normal(rng);
  const NextActions next = sample_next_actions(policy_, batch.next_states, next_noise);
  const Vector y = critic_target(batch, critics_, next, options_.gamma, lag_.alpha);
  const Vector yc = cost_critic_target(batch, cost_critics_, next, options_.gamma);

  Vector unit_actions(n);
  for (Eigen::Index i = 0; i < n; ++i) unit_actions[i] = scale_.to_unit(batch.actions[i]);
  const Matrix inputs = critic_inputs(batch.states, unit_actions);
  const CriticUpdate q_step = critic_update(critics_, inputs, y, options_.lr);
  const CriticUpdate qc_step = critic_update(cost_critics_, inputs, yc, options_.lr);
  stats.critic_loss = q_step.loss;
  stats.cost_critic_loss = qc_step.loss;
  stats.finite = q_step.applied && qc_step.applied;

  if (updates_ % options_.actor_delay == 0) {
    Vector noise(n);
    for (Eigen::Index i = 0; i < n; ++i) noise[i] = standard_normal(rng);
    const ActorUpdate a = actor_update(policy_, policy_adam_, batch.states, noise, critics_,
                                       cost_critics_, lag_, options_.lr);
    lag_ = a.lag;
    stats.actor_objective = a.eval.value;
    stats.actor_stepped = true;
    stats.finite &= a.applied;
  }

  critics_.soft_update_targets(options_.soft_update);
  cost_critics_.soft_update_targets(options_.soft_update);
  ++updates_;
  return stats;
}

std::vector<NamedNet> AlSacAgent::networks() const {
  return {{"policy", policy_.net()},
          {"q1", critics_.online[0]},
          {"q2", critics_.online[1]},
          {"q1_target", critics_.target[0]},
          {"q2_target", critics_.target[1]},
          {"qc1", cost_critics_.online[0]},
          {"qc2", cost_critics_.online[1]},
          {"qc1_target", cost_critics_.target[0]},
          {"qc2_target", cost_critics_.target[1]}};
}

void AlSacAgent::load_networks(const std::vector<NamedNet>& nets) {
  assign_network(policy_.net(), nets, "policy");
  assign_network(critics_.online[0], nets, "q1");
  assign_network(critics_.online[1], nets, "q2");
  assign_network(critics_.target[0], nets, "q1_target");
  assign_network(critics_.target[1], nets, "q2_target");
  assign_network(cost_critics_.online[0], nets, "qc1");
  assign_network(cost_critics_.online[1], nets, "qc2");
  assign_network(cost_critics_.target[0], nets, "qc1_target");
  assign_network(cost_critics_.target[1], nets, "qc2_target");
}

}  // namespace evsched
