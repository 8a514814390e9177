#include "evsched/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace evsched {

double TruncatedNormal::sample(Rng& rng) const {
  if (stddev == 0.0) return mean;
  for (;;) {
    const double x = mean + stddev * standard_normal(rng);
    if (x >= lower && x <= upper) return x;
  }
}

void TruncatedNormal::validate(std::string_view name) const {
  if (!std::isfinite(mean) || !std::isfinite(stddev) || !std::isfinite(lower) ||
      !std::isfinite(upper)) {
    throw std::invalid_argument(fmt::format("{}: parameters must be finite", name));
  }
  if (!(lower < upper)) throw std::invalid_argument(fmt::format("{}: needs lower < upper", name));
  if (stddev < 0.0) throw std::invalid_argument(fmt::format("{}: stddev must be >= 0", name));
  if (stddev == 0.0 && (mean < lower || mean > upper)) {
    throw std::invalid_argument(fmt::format("{}: point mass outside bounds", name));
  }
}

void EvEnvConfig::validate() const {
  if (!(0.0 <= soc_min && soc_min < soc_target && soc_target <= capacity)) {
    throw std::invalid_argument("env: need 0 <= soc_min < soc_target <= capacity");
  }
  if (!(max_charge > 0.0)) throw std::invalid_argument("env: max_charge must be > 0");
  if (!(max_discharge > 0.0)) throw std::invalid_argument("env: max_discharge must be > 0");
  if (!(cost_budget >= 0.0)) throw std::invalid_argument("env: cost_budget must be >= 0");
  arrival.validate("env.arrival");
  departure.validate("env.departure");
  init_soc.validate("env.init_soc");
  if (init_soc.lower < 0.0 || init_soc.upper > 1.0) {
    throw std::invalid_argument("env.init_soc: bounds must lie in [0, 1]");
  }
  if (anchor_hour < 0 || anchor_hour > 23) {
    throw std::invalid_argument("env: anchor_hour must be in [0, 23]");
  }
  // Arrival must happen after the episode clock starts and departure (next
  // day) no later than 24 steps in.
  if (round_hour(arrival.lower) < anchor_hour || round_hour(arrival.upper) > 23) {
    throw std::invalid_argument(
        "env: arrival hours must lie in [anchor_hour, 23] after rounding");
  }
  if (round_hour(departure.lower) < 0 || round_hour(departure.upper) > anchor_hour) {
    throw std::invalid_argument(
        "env: departure hours must lie in [0, anchor_hour] after rounding");
  }
}

int round_hour(double hour) { return static_cast<int>(std::floor(hour + 0.5)); }

Session sample_session(Rng& rng, const EvEnvConfig& cfg) {
  Session s;
  s.arrival_hour = round_hour(cfg.arrival.sample(rng));
  s.departure_hour = round_hour(cfg.departure.sample(rng));
  s.initial_soc = cfg.init_soc.sample(rng) * cfg.capacity;
  return s;
}

double feasible_action_clip(double soc, double action, const EvEnvConfig& cfg) {
  const double lo = std::max(-cfg.max_discharge, -soc);
  const double hi = std::min(cfg.max_charge, cfg.capacity - soc);
  return std::clamp(action, lo, hi);
}

int observation_size(const EvEnvConfig& cfg) {
  return 1 + static_cast<int>(kWindowHours) + (cfg.state_time_features ? 2 : 0);
}

std::vector<double> observe(const EpisodeState& state, const EvEnvConfig& cfg,
                            const ObservationScaling& scaling) {
  if (!(scaling.price_std > 0.0)) {
    throw std::invalid_argument("observation scaling has no price statistics");
  }
  std::vector<double> obs;
  obs.reserve(static_cast<std::size_t>(observation_size(cfg)));
  obs.push_back(state.soc / cfg.capacity);
  for (double p : state.price_window) {
    obs.push_back((p - scaling.price_mean) / scaling.price_std);
  }
  if (cfg.state_time_features) {
    obs.push_back(state.hours_since_arrival);
    obs.push_back(state.hours_to_departure);
  }
  return obs;
}

EvEnv::EvEnv(EvEnvConfig cfg, const PriceSeries& series) : cfg_(cfg), series_(&series) {
  cfg_.validate();
}

bool EvEnv::day_fits(std::size_t day_index) const {
  const std::size_t start = day_index * kHoursPerDay + static_cast<std::size_t>(cfg_.anchor_hour);
  return start + 1 >= kWindowHours && start + kEpisodeSteps < series_->size();
}

std::vector<std::size_t> EvEnv::valid_days(std::size_t first_day, std::size_t end_day) const {
  std::vector<std::size_t> days;
  for (std::size_t d = first_day; d < end_day; ++d) {
    if (day_fits(d)) days.push_back(d);
  }
  return days;
}

const EpisodeState& EvEnv::reset(std::size_t day_index, const Session& session) {
  if (!day_fits(day_index)) {
    throw std::out_of_range(fmt::format(
        "day {} lacks a 24-hour price lookback or a full episode in a {}-hour series",
        day_index, series_->size()));
  }
  session_ = session;
  start_index_ = day_index * kHoursPerDay + static_cast<std::size_t>(cfg_.anchor_hour);
  arrival_step_ = session.arrival_hour >= cfg_.anchor_hour
                      ? session.arrival_hour - cfg_.anchor_hour
                      : session.arrival_hour + 24 - cfg_.anchor_hour;
  departure_step_ = session.departure_hour + 24 - cfg_.anchor_hour;
  if (departure_step_ <= arrival_step_) {
    throw std::invalid_argument("session departs before it arrives");
  }
  state_ = EpisodeState{};
  state_.step = 0;
  state_.soc = session.initial_soc;
  state_.price_window = price_window(*series_, start_index_);
  refresh_state_features();
  done_ = false;
  return state_;
}

void EvEnv::refresh_state_features() {
  const int t = state_.step;
  state_.parked = parked_at(t);
  state_.hours_since_arrival = state_.parked ? (t - arrival_step_) / 24.0 : 0.0;
  state_.hours_to_departure = state_.parked ? (departure_step_ - t) / 24.0 : 0.0;
}

StepResult EvEnv::step(double action) {
  if (done_) throw std::logic_error("step() called on a finished episode");
  const int t = state_.step;
  const bool parked = parked_at(t);
  const double price = (*series_)[start_index_ + static_cast<std::size_t>(t)];

  double applied = 0.0;
  if (parked) {
    applied = cfg_.clip_infeasible_actions ? feasible_action_clip(state_.soc, action, cfg_)
                                           : action;
  }
  double soc = state_.soc + applied;
  if (cfg_.clip_infeasible_actions) soc = std::clamp(soc, 0.0, cfg_.capacity);

  StepResult result;
  result.applied_action = applied;
  result.price = price;
  result.reward = -applied * price;
  const bool departing = parked && t + 1 == departure_step_;
  if (departing) {
    result.cost = std::abs(soc - cfg_.soc_target);
  } else if (parked) {
    result.cost = std::max(0.0, cfg_.soc_min - soc);
  }
  done_ = departing || t + 1 >= kEpisodeSteps;
  result.done = done_;

  state_.step = t + 1;
  state_.soc = soc;
  state_.price_window = price_window(*series_, start_index_ + static_cast<std::size_t>(t + 1));
  refresh_state_features();
  result.state = state_;
  return result;
}

}  // namespace evsched
