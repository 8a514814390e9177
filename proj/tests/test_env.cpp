#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "evsched/env.hpp"

namespace evsched {
namespace {

PriceSeries two_tier(std::size_t days = 4) { return gen_synthetic({}, days); }

TEST(TruncatedNormal, StaysInsideBounds) {
  const EvEnvConfig cfg;
  Rng rng = make_stream(1, "sessions");
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Session s = sample_session(rng, cfg);
    ASSERT_GE(s.arrival_hour, 15);
    ASSERT_LE(s.arrival_hour, 21);
    ASSERT_GE(s.departure_hour, 6);
    ASSERT_LE(s.departure_hour, 11);
    ASSERT_GE(s.initial_soc, 7.2);
    ASSERT_LE(s.initial_soc, 19.2);
    sum += cfg.arrival.sample(rng);
  }
  // The truncation at +-3 sigma is symmetric, so the mean stays at 18.
  EXPECT_NEAR(sum / n, 18.0, 0.05);
}

TEST(TruncatedNormal, MeanMatchesNumericIntegral) {
  // Asymmetric truncation: N(8, 1) on [6, 11].
  const TruncatedNormal d{8.0, 1.0, 6.0, 11.0};
  double num = 0.0, den = 0.0;
  const int steps = 200000;
  const double h = (d.upper - d.lower) / steps;
  for (int i = 0; i <= steps; ++i) {
    const double x = d.lower + i * h;
    const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    const double pdf = std::exp(-0.5 * (x - d.mean) * (x - d.mean));
    num += w * x * pdf;
    den += w * pdf;
  }
  const double exact = num / den;
  Rng rng = make_stream(2, "tn");
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += d.sample(rng);
  EXPECT_NEAR(sum / n, exact, 0.01);
}

TEST(TruncatedNormal, PointMass) {
  const TruncatedNormal d{18.0, 0.0, 15.0, 21.0};
  Rng rng = make_stream(3, "tn");
  for (int i = 0; i < 10; ++i) EXPECT_EQ(d.sample(rng), 18.0);
  EXPECT_THROW((TruncatedNormal{25.0, 0.0, 15.0, 21.0}.validate("x")), std::invalid_argument);
  EXPECT_THROW((TruncatedNormal{18.0, 1.0, 21.0, 15.0}.validate("x")), std::invalid_argument);
}

TEST(RoundHour, TiesRoundUp) {
  EXPECT_EQ(round_hour(17.5), 18);
  EXPECT_EQ(round_hour(17.49), 17);
  EXPECT_EQ(round_hour(6.5), 7);
}

TEST(FeasibleActionClip, BatteryLimits) {
  const EvEnvConfig cfg;
  EXPECT_EQ(feasible_action_clip(23.0, 6.0, cfg), 1.0);
  EXPECT_EQ(feasible_action_clip(2.0, -6.0, cfg), -2.0);
  EXPECT_EQ(feasible_action_clip(12.0, 3.0, cfg), 3.0);
  EXPECT_EQ(feasible_action_clip(12.0, 9.0, cfg), 6.0);
  EXPECT_EQ(feasible_action_clip(12.0, -9.0, cfg), -6.0);
}

TEST(EvEnvConfig, Validation) {
  EvEnvConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.soc_min = 25.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.init_soc.upper = 1.2;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_charge = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.anchor_hour = 16;  // arrivals from 15:00 would precede the episode
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(EvEnv, ValidDaysNeedLookbackAndTerminalPrice) {
  const PriceSeries s = two_tier(4);
  const EvEnv env(EvEnvConfig{}, s);
  EXPECT_FALSE(env.day_fits(0));  // starts at hour 12, lookback needs 23 earlier hours
  EXPECT_TRUE(env.day_fits(1));
  EXPECT_TRUE(env.day_fits(2));
  EXPECT_FALSE(env.day_fits(3));  // no prices for the next morning
  EXPECT_EQ(env.valid_days(0, 4), (std::vector<std::size_t>{1, 2}));
}

TEST(EvEnv, ResetAnchorsTheClock) {
  const PriceSeries s = two_tier();
  EvEnv env(EvEnvConfig{}, s);
  const EpisodeState& st = env.reset(1, Session{18, 8, 12.0});
  EXPECT_EQ(st.step, 0);
  EXPECT_FALSE(st.parked);
  EXPECT_EQ(st.soc, 12.0);
  EXPECT_EQ(env.arrival_step(), 6);
  EXPECT_EQ(env.departure_step(), 20);
  EXPECT_EQ(st.price_window[23], s[36]);
  EXPECT_THROW(env.reset(0, Session{}), std::out_of_range);

  env.reset(1, Session{15, 8, 12.0});
  for (int t = 0; t < 3; ++t) {
    EXPECT_FALSE(env.state().parked) << t;
    env.step(0.0);
  }
  EXPECT_TRUE(env.state().parked);
}

TEST(EvEnv, ResetIsDeterministic) {
  const PriceSeries s = two_tier();
  EvEnv env(EvEnvConfig{}, s);
  const EpisodeState a = env.reset(1, Session{17, 9, 10.0});
  env.step(1.0);
  const EpisodeState b = env.reset(1, Session{17, 9, 10.0});
  EXPECT_EQ(a, b);
}

TEST(EvEnv, RewardIsNegativeBill) {
  const PriceSeries s = two_tier();
  EvEnv env(EvEnvConfig{}, s);
  env.reset(1, Session{12, 8, 12.0});
  // Hour 12 costs 0.30; jump to a cheap hour by stepping to midnight.
  StepResult r = env.step(2.0);
  EXPECT_DOUBLE_EQ(r.reward, -2.0 * 0.30);
  for (int t = 1; t < 12; ++t) env.step(0.0);
  r = env.step(2.0);
  EXPECT_EQ(r.price, 0.05);
  EXPECT_DOUBLE_EQ(r.reward, -0.10);
}

TEST(EvEnv, CostBranches) {
  const PriceSeries s = two_tier();
  EvEnvConfig cfg;
  EvEnv env(cfg, s);

  // Away: forced zero action, zero reward and cost.
  env.reset(1, Session{18, 8, 12.0});
  StepResult r = env.step(6.0);
  EXPECT_EQ(r.applied_action, 0.0);
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_EQ(r.cost, 0.0);

  // Parked, in range.
  for (int t = 1; t < 6; ++t) env.step(0.0);
  r = env.step(-6.0);
  EXPECT_EQ(r.state.soc, 6.0);
  EXPECT_EQ(r.cost, 0.0);

  // Parked, below the floor: 4.0 vs 4.8.
  r = env.step(-2.0);
  EXPECT_EQ(r.state.soc, 4.0);
  EXPECT_EQ(r.cost, 4.8 - 4.0);

  // Terminal deviation: 22 at departure against 24.
  r = env.step(6.0);
  r = env.step(6.0);
  r = env.step(6.0);
  for (int t = env.state().step; t < 19; ++t) env.step(0.0);
  r = env.step(0.0);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.state.soc, 22.0);
  EXPECT_EQ(r.cost, 2.0);
  EXPECT_THROW(env.step(0.0), std::logic_error);
}

TEST(EvEnv, ZeroPolicyIdentity) {
  const PriceSeries s = gen_synthetic({PricePattern::Sinusoid, 0.05, 0.3, 0, 6, 0.01, 3, {}}, 5);
  EvEnv env(EvEnvConfig{}, s);
  Rng rng = make_stream(5, "sessions");
  for (int e = 0; e < 50; ++e) {
    const Session session = sample_session(rng, env.config());
    env.reset(1 + static_cast<std::size_t>(e) % 3, session);
    double reward = 0.0, cost = 0.0, last = 0.0;
    while (!env.done()) {
      const StepResult r = env.step(0.0);
      reward += r.reward;
      cost += r.cost;
      last = r.cost;
    }
    EXPECT_EQ(reward, 0.0);
    EXPECT_EQ(cost, last);
    EXPECT_EQ(last, std::abs(session.initial_soc - 24.0));
  }
}

TEST(EvEnv, ClippingKeepsSocInside) {
  const PriceSeries s = two_tier();
  EvEnv env(EvEnvConfig{}, s);
  Rng rng = make_stream(6, "actions");
  for (int e = 0; e < 200; ++e) {
    env.reset(1, sample_session(rng, env.config()));
    while (!env.done()) {
      const StepResult r = env.step(uniform(rng, -20.0, 20.0));
      const double bill = r.applied_action * r.price;
      EXPECT_EQ(r.reward, -bill);
      ASSERT_GE(r.state.soc, 0.0);
      ASSERT_LE(r.state.soc, 24.0);
      ASSERT_GE(r.cost, 0.0);
    }
  }
}

TEST(EvEnv, WithoutClippingActionsPassThrough) {
  const PriceSeries s = two_tier();
  EvEnvConfig cfg;
  cfg.clip_infeasible_actions = false;
  EvEnv env(cfg, s);
  env.reset(1, Session{12, 8, 20.0});
  const StepResult r = env.step(9.0);
  EXPECT_EQ(r.applied_action, 9.0);
  EXPECT_EQ(r.state.soc, 29.0);
}

TEST(Observe, LayoutAndScaling) {
  const PriceSeries s = two_tier();
  EvEnvConfig cfg;
  EvEnv env(cfg, s);
  env.reset(1, Session{12, 8, 12.0});
  const auto obs = env.observation({0.0, 1.0});
  ASSERT_EQ(obs.size(), 25u);
  EXPECT_EQ(obs[0], 0.5);

  EpisodeState st = env.state();
  st.price_window.fill(0.2);
  const auto centred = observe(st, cfg, {0.2, 0.1});
  for (std::size_t i = 1; i < 25; ++i) EXPECT_EQ(centred[i], 0.0);
  EXPECT_THROW(observe(st, cfg, {0.2, 0.0}), std::invalid_argument);

  cfg.state_time_features = true;
  EvEnv timed(cfg, s);
  timed.reset(1, Session{12, 8, 12.0});
  const auto t = timed.observation({0.0, 1.0});
  ASSERT_EQ(t.size(), 27u);
  EXPECT_EQ(t[25], 0.0);
  EXPECT_EQ(t[26], 20.0 / 24.0);
  EXPECT_GE(t[26], 0.0);
  EXPECT_LE(t[26], 1.0);
}

}  // namespace
}  // namespace evsched
