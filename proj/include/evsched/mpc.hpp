#pragma once

// Receding-horizon MPC over the charging LP, with noisy or exact price
// forecasts and a sampled or known departure hour.

#include <optional>
#include <string_view>
#include <vector>

#include "evsched/lp.hpp"
#include "evsched/trainer.hpp"

namespace evsched {

enum class DepartureMode { Sampled, Known };

DepartureMode parse_departure_mode(std::string_view text);
std::string_view to_string(DepartureMode mode);

struct MpcConfig {
  int horizon = 24;
  double price_error = 0.10;  // forecast std as a fraction of the true price
  DepartureMode departure = DepartureMode::Sampled;
  bool resolve_each_step = true;
  bool redraw_departure = false;

  static MpcConfig ideal() { return {24, 0.0, DepartureMode::Known, true, false}; }
  void validate() const;
};

/// P_t + N(0, (fraction * P_t)^2), independently per entry.
std::vector<double> forecast_prices(std::span<const double> prices, double fraction, Rng& rng);

/// Charging LP from the current environment state to a departure step, with
/// the given price forecasts.
LpProblem charging_problem(const EvEnvConfig& cfg, double soc, std::vector<double> prices);

class MpcController final : public Controller {
 public:
  /// `rng` drives departure predictions and forecast noise and must outlive
  /// the controller.
  MpcController(MpcConfig cfg, Rng& rng);

  void begin_episode(const EvEnv& env) override;
  double act(const EvEnv& env) override;

  /// Steps at which the plan was infeasible and the fallback acted.
  int fallback_steps() const { return fallback_steps_; }
  int predicted_departure_step() const { return predicted_departure_; }

 private:
  int draw_departure_step(const EvEnv& env);
  double fallback(const EvEnv& env);

  MpcConfig cfg_;
  Rng* rng_;
  int predicted_departure_ = 0;
  std::vector<double> open_loop_;
  int open_loop_start_ = -1;
  int fallback_steps_ = 0;
};

EvalMetrics mpc_rollout(EvEnv& env, std::span<const std::pair<std::size_t, Session>> plan,
                        const MpcConfig& cfg, Rng& rng, const StepObserver& observer = {});

}  // namespace evsched
