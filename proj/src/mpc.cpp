#include "evsched/mpc.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace evsched {

DepartureMode parse_departure_mode(std::string_view text) {
  if (text == "sampled") return DepartureMode::Sampled;
  if (text == "known") return DepartureMode::Known;
  throw std::invalid_argument(
      fmt::format("unknown departure mode '{}' (expected sampled or known)", text));
}

std::string_view to_string(DepartureMode mode) {
  return mode == DepartureMode::Sampled ? "sampled" : "known";
}

void MpcConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("method.horizon must be >= 1");
  if (!(price_error >= 0.0)) throw std::invalid_argument("method.price_error must be >= 0");
}

std::vector<double> forecast_prices(std::span<const double> prices, double fraction, Rng& rng) {
  if (!(fraction >= 0.0)) throw std::invalid_argument("forecast error fraction must be >= 0");
  std::vector<double> out(prices.begin(), prices.end());
  if (fraction == 0.0) return out;
  for (double& p : out) {
    // Draw even when p == 0 so the stream position does not depend on prices.
    const double z = standard_normal(rng);
    p += fraction * p * z;
  }
  return out;
}

LpProblem charging_problem(const EvEnvConfig& cfg, double soc, std::vector<double> prices) {
  LpProblem p;
  p.prices = std::move(prices);
  p.initial_soc = soc;
  p.soc_min = cfg.soc_min;
  p.capacity = cfg.capacity;
  p.soc_target = cfg.soc_target;
  p.max_charge = cfg.max_charge;
  p.max_discharge = cfg.max_discharge;
  return p;
}

MpcController::MpcController(MpcConfig cfg, Rng& rng) : cfg_(cfg), rng_(&rng) { cfg_.validate(); }

int MpcController::draw_departure_step(const EvEnv& env) {
  const EvEnvConfig& ec = env.config();
  const int hour = cfg_.departure == DepartureMode::Known ? env.session().departure_hour
                                                          : round_hour(ec.departure.sample(*rng_));
  return std::clamp(hour + 24 - ec.anchor_hour, env.arrival_step() + 1, kEpisodeSteps);
}

void MpcController::begin_episode(const EvEnv& env) {
  predicted_departure_ = draw_departure_step(env);
  open_loop_.clear();
  open_loop_start_ = -1;
}

double MpcController::fallback(const EvEnv& env) {
  const EvEnvConfig& ec = env.config();
  return std::clamp(ec.soc_target - env.state().soc, -ec.max_discharge, ec.max_charge);
}

double MpcController::act(const EvEnv& env) {
  const EpisodeState& s = env.state();
  if (!s.parked) return 0.0;
  if (cfg_.redraw_departure && cfg_.departure == DepartureMode::Sampled) {
    predicted_departure_ = draw_departure_step(env);
  }
  // Past the predicted departure the plan is exhausted: hold at target.
  if (s.step >= predicted_departure_) return fallback(env);

  if (!cfg_.resolve_each_step && open_loop_start_ >= 0) {
    const auto k = static_cast<std::size_t>(s.step - open_loop_start_);
    return k < open_loop_.size() ? open_loop_[k] : fallback(env);
  }

  const int steps = std::min(predicted_departure_ - s.step, cfg_.horizon);
  const PriceSeries& series = env.series();
  std::vector<double> truth(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    truth[static_cast<std::size_t>(k)] = series.prices()[env.current_price_index() + static_cast<std::size_t>(k)];
  }
  const ChargingPlan plan = solve_charging_lp(
      charging_problem(env.config(), s.soc, forecast_prices(truth, cfg_.price_error, *rng_)));
  if (!plan.feasible) {
    ++fallback_steps_;
    return fallback(env);
  }
  if (!cfg_.resolve_each_step) {
    open_loop_ = plan.schedule;
    open_loop_start_ = s.step;
  }
  return plan.schedule.front();
}

EvalMetrics mpc_rollout(EvEnv& env, std::span<const std::pair<std::size_t, Session>> plan,
                        const MpcConfig& cfg, Rng& rng, const StepObserver& observer) {
  MpcController controller(cfg, rng);
  return evaluate(controller, env, plan, observer);
}

}  // namespace evsched
