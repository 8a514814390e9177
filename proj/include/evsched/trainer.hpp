#pragma once

// Episode loop shared by the off-policy learners, best-model selection on
// training days, and deterministic evaluation of any controller.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evsched/agent.hpp"
#include "evsched/env.hpp"

namespace evsched {

struct TrainConfig {
  int episodes = 1000;
  /// Stop before an episode that could exceed this many environment steps
  /// (0 = no cap).
  std::int64_t max_env_steps = 0;
  int batch_size = 256;
  /// Uniform-random episodes before gradient steps begin. Updates also wait
  /// until the buffer holds a full batch.
  int warmup_episodes = 5;
  int updates_per_step = 1;
  std::size_t buffer_capacity = 100000;
  /// Evaluate the greedy policy on training days every `select_every`
  /// episodes and keep the best snapshot (0 disables selection).
  int select_every = 20;
  int select_episodes = 10;
  /// Reward shaping R - sigma * R^c used by the penalized baselines.
  double reward_penalty = 0.0;
  /// Consecutive non-finite updates tolerated before training halts.
  int max_bad_updates = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpisodeRecord {
  int episode = 0;
  std::int64_t env_steps = 0;
  double cost_eur = 0.0;       // sum of a_eff * P, i.e. -sum of raw rewards
  double violation_kwh = 0.0;  // sum of costs
  double alpha = 0.0;
  double lambda = 0.0;
  double critic_loss = 0.0;    // mean over the episode's updates
  double cost_critic_loss = 0.0;
  double actor_objective = 0.0;
};

struct SelectionScore {
  int episode = -1;
  double cost_eur = 0.0;
  double violation_kwh = 0.0;
};

/// Lowest cost among scores within the budget; otherwise lowest violation.
bool better_selection(const SelectionScore& a, const SelectionScore& b, double budget);

struct TrainResult {
  std::vector<EpisodeRecord> log;
  std::vector<NamedNet> final_networks;
  std::vector<NamedNet> best_networks;
  std::optional<SelectionScore> best;
  std::int64_t env_steps = 0;
  bool halted = false;
  std::string halt_reason;
};

/// A source of actions for evaluation rollouts.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void begin_episode(const EvEnv& /*env*/) {}
  virtual double act(const EvEnv& env) = 0;
};

/// Greedy policy of an off-policy agent.
class AgentController final : public Controller {
 public:
  AgentController(const OffPolicyAgent& agent, ObservationScaling scaling)
      : agent_(agent), scaling_(scaling) {}
  double act(const EvEnv& env) override {
    return agent_.greedy_action(env.observation(scaling_));
  }

 private:
  const OffPolicyAgent& agent_;
  ObservationScaling scaling_;
};

struct EpisodeOutcome {
  std::size_t day = 0;
  Session session;
  double cost_eur = 0.0;
  double violation_kwh = 0.0;
};

struct EvalMetrics {
  double avg_cost_eur = 0.0;
  double avg_violation_kwh = 0.0;
  std::vector<EpisodeOutcome> episodes;
};

/// One hour of a rollout, as seen by observers (traces).
struct StepTrace {
  std::size_t episode = 0;
  std::size_t price_index = 0;
  int step = 0;
  double price = 0.0;
  double action = 0.0;  // applied kWh
  double soc_before = 0.0;
  double soc_after = 0.0;
  bool parked = false;
  double cost = 0.0;
};
using StepObserver = std::function<void(const StepTrace&)>;

/// Sessions for evaluation episode i are the i-th draw from `session_rng`;
/// day is days[i % days.size()].
std::vector<std::pair<std::size_t, Session>> evaluation_plan(const EvEnvConfig& cfg,
                                                             std::span<const std::size_t> days,
                                                             std::size_t episodes,
                                                             Rng& session_rng);

EvalMetrics evaluate(Controller& controller, EvEnv& env,
                     std::span<const std::pair<std::size_t, Session>> plan,
                     const StepObserver& observer = {});

/// R - sigma * R^c.
double shaped_reward(double reward, double cost, double sigma);

/// Off-policy training: roll episodes on random training days, store every
/// transition, and update the agent after each environment step.
TrainResult train(OffPolicyAgent& agent, EvEnv& env, std::span<const std::size_t> train_days,
                  const ObservationScaling& scaling, const TrainConfig& cfg);

void write_training_log(std::ostream& out, std::span<const EpisodeRecord> log,
                        const std::string& method_column = {});

}  // namespace evsched
