#pragma once

// Augmented-Lagrangian soft actor-critic: double reward critics, double cost
// critics, a reparameterized squashed-Gaussian actor and projected dual
// updates for the entropy temperature and the cost multiplier.

#include <array>
#include <optional>
#include <span>

#include "evsched/agent.hpp"
#include "evsched/policy.hpp"
#include "evsched/replay.hpp"

namespace evsched {

/// How the multipliers move.
///  - Residual: alpha grows while entropy is below target, lambda grows
///    while expected cost exceeds the budget (projected dual descent on L).
///  - LiteralAscent: projected ascent of L in both multipliers, the sign
///    obtained by reading the update equations at face value. Ablation only.
enum class DualRule { Residual, LiteralAscent };

struct LagrangeState {
  double alpha = 0.0;
  double lambda = 0.0;
  double alpha_lr = 1e-5;
  double lambda_lr = 1e-5;
  double entropy_target = -1.0;
  double cost_budget = 0.024;  // kWh
  /// Quadratic penalty weight; coupled to lambda_lr unless overridden.
  std::optional<double> penalty_override;
  bool learn_alpha = true;
  bool learn_lambda = true;
  DualRule rule = DualRule::Residual;

  double penalty_weight() const { return penalty_override.value_or(lambda_lr); }
  void validate() const;
};

/// [x]+ with roundoff residue of the last step absorbed into zero.
double project_nonnegative(double previous, double step);

LagrangeState dual_update(const LagrangeState& lag, double mean_log_prob, double mean_cost_q);

/// Two online critics with target copies and one Adam state each.
struct CriticPair {
  CriticPair() = default;
  CriticPair(const std::vector<int>& layer_sizes, Rng& rng);

  std::array<DenseNet, 2> online;
  std::array<DenseNet, 2> target;
  std::array<AdamState, 2> adam;

  Vector min_target(const Matrix& inputs) const;
  void soft_update_targets(double eta);
};

/// Critic input: observation rows followed by the action mapped to [-1, 1].
Matrix critic_inputs(const Matrix& states, const Vector& unit_actions);

/// y = r + (1 - done) * gamma * (next_q - alpha * next_log_prob).
Vector bootstrap_target(const Vector& rewards, const Vector& dones, const Vector& next_q,
                        const Vector& next_log_prob, double gamma, double alpha);

struct NextActions {
  Vector unit_actions;
  Vector log_prob;
};

/// Fresh policy actions at the batch's next states for the given noise.
NextActions sample_next_actions(const GaussianPolicy& policy, const Matrix& next_states,
                                const Vector& noise);

/// Soft reward target using the minimum of the two target critics.
Vector critic_target(const Batch& batch, const CriticPair& critics, const NextActions& next,
                     double gamma, double alpha);
/// Cost target; no entropy term.
Vector cost_critic_target(const Batch& batch, const CriticPair& cost_critics,
                          const NextActions& next, double gamma);

/// Mean squared error of one critic against fixed targets; adds the gradient
/// into `grad` when given.
double critic_loss(const DenseNet& critic, const Matrix& inputs, const Vector& targets,
                   Vector* grad);

struct CriticUpdate {
  double loss = 0.0;  // mean of both critics' pre-step losses
  bool applied = true;
};

/// One Adam step per online critic. A non-finite loss skips the step.
CriticUpdate critic_update(CriticPair& critics, const Matrix& inputs, const Vector& targets,
                           double lr);

struct LagrangianEval {
  double value = 0.0;
  double mean_q = 0.0;
  double mean_log_prob = 0.0;
  double mean_cost_q = 0.0;
};

/// Batch estimate of
///   E[min Q] + alpha (-H - E log pi) + lambda (J_c - E min Qc)
///   - (penalty / 2) max(0, E min Qc - J_c)^2
/// at actions re-sampled with the given noise. When `grad` is non-null the
/// gradient w.r.t. the policy parameters is added to it.
LagrangianEval lagrangian_value(const GaussianPolicy& policy, const Matrix& states,
                                const Vector& noise, const CriticPair& critics,
                                const CriticPair& cost_critics, const LagrangeState& lag,
                                Vector* grad);

struct ActorUpdate {
  LagrangianEval eval;
  LagrangeState lag;  // multipliers after the dual step
  bool applied = true;
};

/// Dual step from the batch statistics, then one Adam ascent step of the
/// Lagrangian w.r.t. the policy.
ActorUpdate actor_update(GaussianPolicy& policy, AdamState& adam, const Matrix& states,
                         const Vector& noise, const CriticPair& critics,
                         const CriticPair& cost_critics, const LagrangeState& lag, double lr);

struct AlSacOptions {
  std::vector<int> hidden{256, 256};
  double gamma = 0.995;
  double lr = 5e-4;
  double soft_update = 0.005;
  int actor_delay = 2;
  /// Reported method name; the penalized baseline reuses this agent.
  std::string name = "alsac";
};

class AlSacAgent final : public OffPolicyAgent {
 public:
  AlSacAgent(int obs_dim, ActionScale scale, AlSacOptions options, LagrangeState lag, Rng& init_rng);

  std::string method() const override { return options_.name; }
  double explore_action(std::span<const double> obs, Rng& rng) const override;
  double greedy_action(std::span<const double> obs) const override;
  UpdateStats update(const Batch& batch, Rng& rng) override;
  std::vector<NamedNet> networks() const override;
  void load_networks(const std::vector<NamedNet>& nets) override;
  double alpha() const override { return lag_.alpha; }
  double lambda() const override { return lag_.lambda; }

  GaussianPolicy& policy() { return policy_; }
  const GaussianPolicy& policy() const { return policy_; }
  CriticPair& critics() { return critics_; }
  CriticPair& cost_critics() { return cost_critics_; }
  LagrangeState& lagrange() { return lag_; }
  const LagrangeState& lagrange() const { return lag_; }
  const AlSacOptions& options() const { return options_; }
  std::int64_t update_count() const { return updates_; }

 private:
  ActionScale scale_;
  AlSacOptions options_;
  LagrangeState lag_;
  GaussianPolicy policy_;
  AdamState policy_adam_;
  CriticPair critics_;
  CriticPair cost_critics_;
  std::int64_t updates_ = 0;
};

}  // namespace evsched
