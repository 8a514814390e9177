#include <gtest/gtest.h>

#include <sstream>

#include "evsched/alsac.hpp"
#include "evsched/trainer.hpp"

namespace evsched {
namespace {

class Constant final : public Controller {
 public:
  explicit Constant(double a) : a_(a) {}
  double act(const EvEnv&) override { return a_; }

 private:
  double a_;
};

TEST(BetterSelection, PrefersFeasibleThenCheaper) {
  const SelectionScore cheap_bad{1, -2.0, 0.5};
  const SelectionScore ok{2, 1.0, 0.01};
  const SelectionScore cheaper_ok{3, 0.5, 0.02};
  const SelectionScore less_bad{4, 3.0, 0.1};
  EXPECT_TRUE(better_selection(ok, cheap_bad, 0.024));
  EXPECT_FALSE(better_selection(cheap_bad, ok, 0.024));
  EXPECT_TRUE(better_selection(cheaper_ok, ok, 0.024));
  EXPECT_TRUE(better_selection(less_bad, cheap_bad, 0.024));
}

TEST(EvaluationPlan, CyclesDaysAndIsSeeded) {
  EvEnvConfig cfg;
  const std::vector<std::size_t> days{4, 5, 6};
  Rng a = make_stream(1, "eval-sessions"), b = make_stream(1, "eval-sessions");
  const auto p = evaluation_plan(cfg, days, 7, a);
  const auto q = evaluation_plan(cfg, days, 7, b);
  ASSERT_EQ(p.size(), 7u);
  EXPECT_EQ(p, q);
  EXPECT_EQ(p[3].first, 4u);
  EXPECT_EQ(p[6].first, 4u);
}

TEST(Evaluate, ConstantChargingByHand) {
  std::vector<double> prices(24 * 3);
  for (std::size_t i = 0; i < prices.size(); ++i) prices[i] = 0.01 * static_cast<double>(i % 24);
  const PriceSeries series(HourStamp{}, prices);
  EvEnv env(EvEnvConfig{}, series);
  Constant c(1.0);
  // Parked 18:00 to 08:00 (14 hours) from 10 kWh: +1 kWh each hour.
  const std::vector<std::pair<std::size_t, Session>> plan{{1, Session{18, 8, 10.0}}};
  const EvalMetrics m = evaluate(c, env, plan);
  double cost = 0.0;
  for (int h = 18; h < 24; ++h) cost += 0.01 * h;
  for (int h = 0; h < 8; ++h) cost += 0.01 * h;
  EXPECT_NEAR(m.avg_cost_eur, cost, 1e-12);
  EXPECT_EQ(m.avg_violation_kwh, 0.0);
}

TEST(Train, SmallRunIsDeterministic) {
  const PriceSeries series = gen_synthetic({PricePattern::TwoTier, 0.05, 0.3, 0, 6, 0.01, 2, {}}, 12);
  EvEnvConfig ec;
  const auto run = [&] {
    EvEnv env(ec, series);
    const auto days = env.valid_days(0, 10);
    Rng init = make_stream(3, "init");
    AlSacOptions o;
    o.hidden = {8, 8};
    AlSacAgent agent(observation_size(ec), ActionScale::from_bounds(-6.0, 6.0), o, LagrangeState{},
                     init);
    TrainConfig tc;
    tc.episodes = 6;
    tc.batch_size = 16;
    tc.warmup_episodes = 1;
    tc.select_every = 3;
    tc.select_episodes = 2;
    tc.seed = 3;
    const PriceStats st = price_stats(series);
    return train(agent, env, days, ObservationScaling{st.mean, st.stddev}, tc);
  };
  const TrainResult a = run();
  const TrainResult b = run();
  ASSERT_EQ(a.log.size(), 6u);
  EXPECT_FALSE(a.halted);
  EXPECT_TRUE(a.best.has_value());
  EXPECT_EQ(a.env_steps, a.log.back().env_steps);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].cost_eur, b.log[i].cost_eur);
    EXPECT_EQ(a.log[i].critic_loss, b.log[i].critic_loss);
  }
  EXPECT_EQ(a.final_networks[0].net.params(), b.final_networks[0].net.params());
}

TEST(TrainingLog, HeaderAndOptionalMethodColumn) {
  const std::vector<EpisodeRecord> log{{1, 24, -0.5, 0.0, 0.2, 0.01, 1.5, 0.25, -3.0}};
  std::ostringstream plain, tagged;
  write_training_log(plain, log, "");
  write_training_log(tagged, log, "sac");
  EXPECT_EQ(plain.str(),
            "episode,env_steps,episode_cost_eur,episode_violation_kwh,alpha,lambda,critic_loss,"
            "cost_critic_loss,actor_objective\n1,24,-0.500000,0.000000,0.2,0.01,1.5,0.25,-3\n");
  EXPECT_NE(tagged.str().find(",actor_objective,method\n"), std::string::npos);
  EXPECT_NE(tagged.str().find(",-3,sac\n"), std::string::npos);
}

}  // namespace
}  // namespace evsched
