#include "evsched/trainer.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "evsched/policy.hpp"
#include "evsched/replay.hpp"

namespace evsched {

double shaped_reward(double reward, double cost, double sigma) { return reward - sigma * cost; }

void TrainConfig::validate() const {
  if (episodes < 0) throw std::invalid_argument("train.episodes must be >= 0");
  if (max_env_steps < 0) throw std::invalid_argument("train.max_env_steps must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
  if (warmup_episodes < 0) throw std::invalid_argument("train.warmup_episodes must be >= 0");
  if (updates_per_step < 1) throw std::invalid_argument("train.updates_per_step must be >= 1");
  if (buffer_capacity < static_cast<std::size_t>(batch_size)) {
    throw std::invalid_argument("train.buffer_capacity must hold at least one batch");
  }
  if (select_every < 0 || select_episodes < 1) {
    throw std::invalid_argument("train.select_every must be >= 0 and select_episodes >= 1");
  }
  if (!(reward_penalty >= 0.0)) throw std::invalid_argument("penalty coefficient must be >= 0");
}

bool better_selection(const SelectionScore& a, const SelectionScore& b, double budget) {
  const bool a_ok = a.violation_kwh <= budget;
  const bool b_ok = b.violation_kwh <= budget;
  if (a_ok != b_ok) return a_ok;
  if (a_ok) return a.cost_eur < b.cost_eur;
  return a.violation_kwh < b.violation_kwh;
}

std::vector<std::pair<std::size_t, Session>> evaluation_plan(const EvEnvConfig& cfg,
                                                             std::span<const std::size_t> days,
                                                             std::size_t episodes,
                                                             Rng& session_rng) {
  if (days.empty()) throw std::invalid_argument("evaluation needs at least one day");
  std::vector<std::pair<std::size_t, Session>> plan;
  plan.reserve(episodes);
  for (std::size_t i = 0; i < episodes; ++i) {
    plan.emplace_back(days[i % days.size()], sample_session(session_rng, cfg));
  }
  return plan;
}

EvalMetrics evaluate(Controller& controller, EvEnv& env,
                     std::span<const std::pair<std::size_t, Session>> plan,
                     const StepObserver& observer) {
  EvalMetrics metrics;
  for (std::size_t e = 0; e < plan.size(); ++e) {
    const auto& [day, session] = plan[e];
    env.reset(day, session);
    controller.begin_episode(env);
    EpisodeOutcome outcome{day, session, 0.0, 0.0};
    while (!env.done()) {
      const double action = controller.act(env);
      const double soc_before = env.state().soc;
      const bool parked = env.state().parked;
      const int step = env.state().step;
      const std::size_t price_index = env.current_price_index();
      const StepResult r = env.step(action);
      outcome.cost_eur += r.applied_action * r.price;
      outcome.violation_kwh += r.cost;
      if (observer) {
        observer(StepTrace{e, price_index, step, r.price, r.applied_action, soc_before,
                           r.state.soc, parked, r.cost});
      }
    }
    metrics.avg_cost_eur += outcome.cost_eur;
    metrics.avg_violation_kwh += outcome.violation_kwh;
    metrics.episodes.push_back(outcome);
  }
  if (!plan.empty()) {
    metrics.avg_cost_eur /= static_cast<double>(plan.size());
    metrics.avg_violation_kwh /= static_cast<double>(plan.size());
  }
  return metrics;
}

TrainResult train(OffPolicyAgent& agent, EvEnv& env, std::span<const std::size_t> train_days,
                  const ObservationScaling& scaling, const TrainConfig& cfg) {
  cfg.validate();
  if (train_days.empty()) throw std::invalid_argument("training needs at least one day");
  const EvEnvConfig& env_cfg = env.config();

  Rng session_rng = make_stream(cfg.seed, "sessions");
  Rng explore_rng = make_stream(cfg.seed, "policy-noise");
  Rng replay_rng = make_stream(cfg.seed, "replay");
  Rng update_rng = make_stream(cfg.seed, "update-noise");
  Rng select_rng = make_stream(cfg.seed, "select");
  const auto select_plan = evaluation_plan(
      env_cfg, train_days, static_cast<std::size_t>(cfg.select_episodes), select_rng);

  ReplayBuffer buffer(cfg.buffer_capacity, observation_size(env_cfg));
  const ActionScale bounds = ActionScale::from_bounds(-env_cfg.max_discharge, env_cfg.max_charge);

  TrainResult result;
  std::int64_t steps = 0;
  int bad_updates = 0;

  int last_selected = -1;
  auto consider_snapshot = [&](int episode) {
    last_selected = episode;
    AgentController greedy(agent, scaling);
    const EvalMetrics m = evaluate(greedy, env, select_plan);
    const SelectionScore score{episode, m.avg_cost_eur, m.avg_violation_kwh};
    if (!result.best || better_selection(score, *result.best, env_cfg.cost_budget)) {
      result.best = score;
      result.best_networks = agent.networks();
    }
  };

  for (int ep = 0; ep < cfg.episodes && !result.halted; ++ep) {
    if (cfg.max_env_steps > 0 && steps + kEpisodeSteps > cfg.max_env_steps) break;
    const std::size_t day = train_days[uniform_index(session_rng, train_days.size())];
    const Session session = sample_session(session_rng, env_cfg);
    env.reset(day, session);
    std::vector<double> obs = env.observation(scaling);

    const bool warmup = ep < cfg.warmup_episodes;
    EpisodeRecord rec;
    rec.episode = ep;
    int update_count = 0;
    int actor_count = 0;
    while (!env.done()) {
      const double action =
          warmup ? uniform(explore_rng, bounds.low(), bounds.high())
                 : agent.explore_action(obs, explore_rng);
      const StepResult r = env.step(action);
      std::vector<double> next_obs = observe(r.state, env_cfg, scaling);
      buffer.push(Transition{obs, action, shaped_reward(r.reward, r.cost, cfg.reward_penalty), r.cost,
                             next_obs, r.done});
      rec.cost_eur += r.applied_action * r.price;
      rec.violation_kwh += r.cost;
      ++steps;

      if (!warmup && buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
        for (int u = 0; u < cfg.updates_per_step; ++u) {
          const Batch batch = buffer.sample(replay_rng, static_cast<std::size_t>(cfg.batch_size));
          const UpdateStats s = agent.update(batch, update_rng);
          if (!s.finite) {
            if (++bad_updates >= cfg.max_bad_updates) {
              result.halted = true;
              result.halt_reason = fmt::format(
                  "{} consecutive non-finite updates at env step {}", bad_updates, steps);
              break;
            }
          } else {
            bad_updates = 0;
          }
          rec.critic_loss += s.critic_loss;
          rec.cost_critic_loss += s.cost_critic_loss;
          ++update_count;
          if (s.actor_stepped) {
            rec.actor_objective += s.actor_objective;
            ++actor_count;
          }
        }
      }
      if (result.halted) break;
      obs = std::move(next_obs);
    }
    if (update_count > 0) {
      rec.critic_loss /= update_count;
      rec.cost_critic_loss /= update_count;
    }
    if (actor_count > 0) rec.actor_objective /= actor_count;
    rec.env_steps = steps;
    rec.alpha = agent.alpha();
    rec.lambda = agent.lambda();
    result.log.push_back(rec);

    if (cfg.select_every > 0 && !warmup && !result.halted && (ep + 1) % cfg.select_every == 0) {
      consider_snapshot(ep);
    }
  }

  if (cfg.select_every > 0 && !result.halted && !result.log.empty()) {
    const int last = result.log.back().episode;
    if (!result.best || last_selected != last) consider_snapshot(last);
  }
  result.env_steps = steps;
  result.final_networks = agent.networks();
  if (result.best_networks.empty()) result.best_networks = result.final_networks;
  return result;
}

void write_training_log(std::ostream& out, std::span<const EpisodeRecord> log,
                        const std::string& method_column) {
  out << "episode,env_steps,episode_cost_eur,episode_violation_kwh,alpha,lambda,critic_loss,"
         "cost_critic_loss,actor_objective";
  if (!method_column.empty()) out << ",method";
  out << '\n';
  for (const EpisodeRecord& r : log) {
    out << fmt::format("{},{},{:.6f},{:.6f},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}", r.episode,
                       r.env_steps, r.cost_eur, r.violation_kwh, r.alpha, r.lambda,
                       r.critic_loss, r.cost_critic_loss, r.actor_objective);
    if (!method_column.empty()) out << ',' << method_column;
    out << '\n';
  }
}

}  // namespace evsched
