#pragma once

// The constrained EV charging environment: one episode is 24 hourly steps
// anchored at `anchor_hour`, during which the EV arrives, parks and leaves.
// Rewards are the negative charging bill; costs measure SOC violations.

#include <array>
#include <span>
#include <vector>

#include "evsched/pricing.hpp"
#include "evsched/rng.hpp"

namespace evsched {

inline constexpr int kEpisodeSteps = 24;

struct TruncatedNormal {
  double mean = 0.0;
  double stddev = 1.0;
  double lower = 0.0;
  double upper = 1.0;

  /// Rejection sampling; std-dev 0 is a point mass at the mean.
  double sample(Rng& rng) const;
  void validate(std::string_view name) const;
};

struct EvEnvConfig {
  double capacity = 24.0;       // kWh
  double soc_min = 4.8;         // kWh
  double soc_target = 24.0;     // kWh
  double max_charge = 6.0;      // kWh per hour
  double max_discharge = 6.0;   // kWh per hour
  TruncatedNormal arrival{18.0, 1.0, 15.0, 21.0};    // hour of day
  TruncatedNormal departure{8.0, 1.0, 6.0, 11.0};    // hour of next day
  TruncatedNormal init_soc{0.5, 0.1, 0.3, 0.8};      // fraction of capacity
  double cost_budget = 0.024;   // kWh
  int anchor_hour = 12;
  bool clip_infeasible_actions = true;
  bool state_time_features = false;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct Session {
  int arrival_hour = 18;
  int departure_hour = 8;
  double initial_soc = 12.0;  // kWh
  friend bool operator==(const Session&, const Session&) = default;
};

/// Rounds to the nearest hour, ties upward.
int round_hour(double hour);

Session sample_session(Rng& rng, const EvEnvConfig& cfg);

/// Clips `action` to what the battery can physically absorb or deliver.
double feasible_action_clip(double soc, double action, const EvEnvConfig& cfg);

struct EpisodeState {
  int step = 0;
  double soc = 0.0;
  bool parked = false;
  std::array<double, kWindowHours> price_window{};
  double hours_since_arrival = 0.0;
  double hours_to_departure = 0.0;
  friend bool operator==(const EpisodeState&, const EpisodeState&) = default;
};

struct StepResult {
  EpisodeState state;
  double applied_action = 0.0;  // kWh actually moved
  double price = 0.0;           // EUR/kWh of the step
  double reward = 0.0;          // EUR
  double cost = 0.0;            // kWh
  bool done = false;
};

/// Centring statistics for the price part of an observation, computed once
/// from the training split.
struct ObservationScaling {
  double price_mean = 0.0;
  double price_std = 1.0;
};

int observation_size(const EvEnvConfig& cfg);
std::vector<double> observe(const EpisodeState& state, const EvEnvConfig& cfg,
                            const ObservationScaling& scaling);

class EvEnv {
 public:
  /// The series must outlive the environment.
  EvEnv(EvEnvConfig cfg, const PriceSeries& series);

  const EvEnvConfig& config() const { return cfg_; }
  const PriceSeries& series() const { return *series_; }

  /// True when the episode starting at `day_index` has a full lookback window
  /// and 24 hours of prices plus the terminal observation.
  bool day_fits(std::size_t day_index) const;
  std::vector<std::size_t> valid_days(std::size_t first_day, std::size_t end_day) const;

  const EpisodeState& reset(std::size_t day_index, const Session& session);
  StepResult step(double action);

  const EpisodeState& state() const { return state_; }
  const Session& session() const { return session_; }
  bool done() const { return done_; }
  int arrival_step() const { return arrival_step_; }
  /// First step at which the EV is gone; the last parked step is one before.
  int departure_step() const { return departure_step_; }
  std::size_t episode_start_index() const { return start_index_; }
  std::size_t current_price_index() const { return start_index_ + static_cast<std::size_t>(state_.step); }
  std::vector<double> observation(const ObservationScaling& scaling) const {
    return observe(state_, cfg_, scaling);
  }

 private:
  bool parked_at(int step) const { return step >= arrival_step_ && step < departure_step_; }
  void refresh_state_features();

  EvEnvConfig cfg_;
  const PriceSeries* series_;
  Session session_{};
  EpisodeState state_{};
  std::size_t start_index_ = 0;
  int arrival_step_ = 0;
  int departure_step_ = 0;
  bool done_ = true;
};

}  // namespace evsched
