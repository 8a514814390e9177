// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>

#include <fmt/format.h>

#include "evsched/alloc.hpp"
#include "evsched/config.hpp"
#include "evsched/experiment.hpp"
#include "evsched/mpc.hpp"
#include "support/constant_policy.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/quadrature.hpp"
#include "support/temp_dir.hpp"

namespace evsched {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void progress(const std::string& msg) {
  std::fprintf(stderr, "  .. %s\n", msg.c_str());
  std::fflush(stderr);
}

Outcome gradient_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_stream(101, "acceptance-grad");
  int ok[3] = {0, 0, 0};
  double worst[3] = {0.0, 0.0, 0.0};
  int rejected = 0;
  const double tol[3] = {1e-6, 1e-6, 1e-4};
  for (int kind = 0; kind < 3; ++kind) {
    int accepted = 0;
    while (accepted < 100) {
      const std::optional<double> err =
          kind == 2 ? testing::actor_grad_error(rng) : testing::critic_grad_error(rng, kind == 1);
      if (!err) {
        ++rejected;
        if (rejected > 10000) return {false, "too many instances rejected near ReLU kinks"};
        continue;
      }
      ++accepted;
      worst[kind] = std::max(worst[kind], *err);
      if (*err < tol[kind]) ++ok[kind];
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = ok[0] == 100 && ok[1] == 100 && ok[2] == 100 && secs < 30.0;
  return {pass, fmt::format("critic {}/100 (max {:.1e}), cost critic {}/100 (max {:.1e}), "
                            "actor {}/100 (max {:.1e}), {} kink instances redrawn, {:.1f} s",
                            ok[0], worst[0], ok[1], worst[1], ok[2], worst[2], rejected, secs)};
}

Outcome lp_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto hand = [](std::vector<double> prices, std::vector<double> schedule, double cost) {
    LpProblem p;
    p.prices = std::move(prices);
    p.initial_soc = 20.0;
    const ChargingPlan plan = solve_charging_lp(p);
    return plan.feasible && plan.schedule == schedule && std::abs(plan.objective - cost) < 1e-15;
  };
  const bool hand_ok =
      hand({0.1, 0.3, 0.2}, {4.0, -6.0, 6.0}, -0.20) && hand({0.3, 0.2, 0.1}, {-6.0, 4.0, 6.0}, -0.40);

  Rng rng = make_stream(102, "acceptance-lp");
  int matched = 0, feasible = 0;
  double worst_gap = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int h = 2 + static_cast<int>(uniform_index(rng, 4));
    LpProblem p;
    for (int t = 0; t < h; ++t) p.prices.push_back(std::round(uniform(rng, -0.1, 0.5) * 1e3) / 1e3);
    p.initial_soc = static_cast<double>(48 + uniform_index(rng, 193)) / 10.0;
    const ChargingPlan plan = solve_charging_lp(p);
    const std::optional<double> grid = testing::grid_optimum(p);
    if (plan.feasible != grid.has_value()) continue;
    if (!plan.feasible) {
      ++matched;
      continue;
    }
    ++feasible;
    double pmax = 0.0;
    for (double v : p.prices) pmax = std::max(pmax, std::abs(v));
    const double gap = std::abs(*grid - plan.objective);
    worst_gap = std::max(worst_gap, gap);
    if (gap <= 0.1 * pmax + 1e-12 && testing::constraint_violation(p, plan.schedule) <= 1e-9) {
      ++matched;
    }
  }
  const double secs = seconds_since(t0);
  return {hand_ok && matched == 200 && secs < 60.0,
          fmt::format("hand instances {}, {}/200 agree with grid search ({} feasible, max gap "
                      "{:.2e} EUR), {:.1f} s",
                      hand_ok ? "exact" : "WRONG", matched, feasible, worst_gap, secs)};
}

Outcome cost_branches() {
  std::vector<double> prices(24 * 3, 0.1);
  const PriceSeries series(HourStamp{}, prices);
  EvEnv env(EvEnvConfig{}, series);
  env.reset(1, Session{18, 8, 12.0});
  bool ok = true;
  StepResult r = env.step(6.0);  // 12:00, away
  ok &= r.cost == 0.0 && r.applied_action == 0.0;
  for (int t = 1; t < 6; ++t) env.step(0.0);
  r = env.step(-6.0);  // parked, 6 kWh left
  ok &= r.cost == 0.0 && r.state.soc == 6.0;
  r = env.step(-2.0);  // 4 kWh, below the 4.8 floor
  ok &= r.cost == 4.8 - 4.0;
  for (int i = 0; i < 3; ++i) env.step(6.0);
  while (env.state().step < 19) env.step(0.0);
  r = env.step(0.0);  // departure at 22 kWh
  ok &= r.done && r.cost == 2.0;

  // Away after departure: a later arrival leaves hours masked at both ends.
  env.reset(1, Session{20, 6, 12.0});
  for (int t = 0; t < 8; ++t) {
    r = env.step(-6.0);
    ok &= r.cost == 0.0 && r.applied_action == 0.0 && r.state.soc == 12.0;
  }
  return {ok, "away zero, in-range zero, floor deficit 0.8 kWh, terminal deviation 2 kWh"};
}

std::string desk_config(const std::string& method, std::uint64_t seed, const std::string& out,
                        const std::string& extra = "") {
  return fmt::format(
      "[experiment]\nseed = {}\neval_seed = 0\neval_episodes = 50\noutput_dir = {}\n"
      "[data]\nsource = synthetic\npattern = two-tier\nlow = 0.05\nhigh = 0.3\nnoise = 0\n"
      "days = 60\ntest_days = 10\n"
      "[env]\narrival_mean = 18\narrival_std = 0\ndeparture_mean = 8\ndeparture_std = 0\n"
      "init_soc_mean = 0.5\ninit_soc_std = 0\n"
      "{}"
      "[method]\nname = {}\n{}",
      seed, out, method == "mpc" ? "" : "[train]\nepisodes = 5000\nmax_env_steps = 20000\n",
      method, extra);
}

RunRecord run_text(const testing::TempDir& dir, const std::string& text) {
  const ExperimentConfig cfg = parse_config(text, dir.path());
  validate(cfg);
  return run_experiment(cfg);
}

struct DeskRuns {
  RunRecord mpc;
  std::map<std::pair<std::string, std::uint64_t>, RunRecord> runs;
  RunRecord repeat;
};

const std::string kNet = "hidden = 64,64\n";

Outcome convergence(const DeskRuns& d) {
  const RunRecord& a = d.runs.at({"alsac", 1});
  const double opt = d.mpc.avg_cost_eur;
  const double rel = std::abs(a.avg_cost_eur - opt) / std::abs(opt);
  const bool pass = a.eval_digest == d.mpc.eval_digest && a.train_env_steps <= 20000 &&
                    a.avg_violation_kwh <= 0.05 && rel <= 0.15 && a.wall_clock_s <= 600.0;
  return {pass, fmt::format("violation {:.6f} kWh, cost {:.6f} EUR vs ideal MPC {:.6f} EUR "
                            "({:.1f}% off), {} env steps, {:.0f} s",
                            a.avg_violation_kwh, a.avg_cost_eur, opt, 100.0 * rel,
                            a.train_env_steps, a.wall_clock_s)};
}

Outcome ordering(const DeskRuns& d) {
  int penalty_order = 0, alsac_safest = 0;
  std::string per_seed;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const RunRecord& lo = d.runs.at({"sac-0.12", s});
    const RunRecord& hi = d.runs.at({"sac-1.2", s});
    const RunRecord& al = d.runs.at({"alsac", s});
    if (hi.avg_violation_kwh < lo.avg_violation_kwh && hi.avg_cost_eur > lo.avg_cost_eur) {
      ++penalty_order;
    }
    if (al.avg_violation_kwh <= lo.avg_violation_kwh && al.avg_violation_kwh <= hi.avg_violation_kwh) {
      ++alsac_safest;
    }
    per_seed += fmt::format(" | seed {}: alsac {:.3f}/{:.3f}, sac0.12 {:.3f}/{:.3f}, sac1.2 {:.3f}/{:.3f}",
                            s, al.avg_cost_eur, al.avg_violation_kwh, lo.avg_cost_eur,
                            lo.avg_violation_kwh, hi.avg_cost_eur, hi.avg_violation_kwh);
  }
  return {penalty_order >= 4 && alsac_safest >= 4,
          fmt::format("sigma 1.2 safer and dearer than 0.12 in {}/5 seeds, alsac violation lowest in "
                      "{}/5 (cost EUR/violation kWh{})",
                      penalty_order, alsac_safest, per_seed)};
}

Outcome determinism(const DeskRuns& d) {
  bool same = true;
  std::string which;
  for (const char* f : {"train_log.csv", "metrics.csv"}) {
    const std::string a = testing::read_file(d.runs.at({"alsac", 1}).run_dir / f);
    const std::string b = testing::read_file(d.repeat.run_dir / f);
    if (a.empty() || a != b) {
      same = false;
      which += std::string(" ") + f;
    }
  }
  return {same, same ? "train_log.csv and metrics.csv byte-identical across two seed-1 runs"
                     : "differing:" + which};
}

Outcome dual_dynamics() {
  Rng rng = make_stream(106, "acceptance-dual");
  testing::GradInstance g = testing::make_grad_instance(rng);
  // Batch of 8 so that the mean of the constant critic output is exact.
  const Matrix states = testing::gaussian_matrix(rng, g.batch.states.rows(), 8);
  Vector noise(8);
  for (Eigen::Index i = 0; i < 8; ++i) noise[i] = standard_normal(rng);
  const auto set_cost = [&](double value) {
    for (auto* set : {&g.cost_critics.online, &g.cost_critics.target}) {
      for (DenseNet& net : *set) {
        net.params().setZero();
        net.params()[net.param_count() - 1] = value;
      }
    }
  };
  LagrangeState lag;
  lag.learn_alpha = false;
  const double delta = lag.lambda_lr;
  const double budget = lag.cost_budget;

  bool up_ok = true;
  set_cost(budget + 1.0);
  GaussianPolicy policy = g.policy;
  AdamState adam(policy.net().param_count());
  LagrangeState l = lag;
  for (int k = 0; k < 10; ++k) {
    const double before = l.lambda;
    l = actor_update(policy, adam, states, noise, g.critics, g.cost_critics, l, 3e-4).lag;
    up_ok &= l.lambda == before + delta;
  }

  set_cost(budget - 1.0);
  policy = g.policy;
  adam = AdamState(policy.net().param_count());
  l = lag;
  l.lambda = 3.0 * delta;
  int hit_zero = -1;
  bool stays = true;
  for (int k = 1; k <= 8; ++k) {
    l = actor_update(policy, adam, states, noise, g.critics, g.cost_critics, l, 3e-4).lag;
    if (hit_zero < 0 && l.lambda == 0.0) hit_zero = k;
    if (hit_zero > 0 && l.lambda != 0.0) stays = false;
  }
  const bool pass = up_ok && hit_zero == 3 && stays;
  return {pass, fmt::format("+delta per update {}, 3 delta reaches 0 after {} updates{}",
                            up_ok ? "exact" : "NOT exact", hit_zero, stays ? " and stays" : ", then leaves 0")};
}

Outcome ideal_mpc() {
  const PriceSeries series =
      gen_synthetic({PricePattern::Sinusoid, 0.02, 0.35, 0, 6, 0.03, 7, {}}, 120);
  EvEnvConfig cfg;
  EvEnv env(cfg, series);
  const auto days = env.valid_days(0, series.days());
  Rng sessions = make_stream(107, "eval-sessions");
  const auto plan = evaluation_plan(cfg, days, 100, sessions);
  Rng rng = make_stream(107, "forecast-noise");
  const EvalMetrics m = mpc_rollout(env, plan, MpcConfig::ideal(), rng);
  int equal = 0;
  double worst = 0.0;
  bool zero = m.avg_violation_kwh == 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& [day, session] = plan[i];
    env.reset(day, session);
    LpProblem p;
    p.initial_soc = session.initial_soc;
    const std::size_t first = env.current_price_index();
    for (int t = env.arrival_step(); t < env.departure_step(); ++t) {
      p.prices.push_back(series[first + static_cast<std::size_t>(t)]);
    }
    const ChargingPlan lp = solve_charging_lp(p);
    zero &= m.episodes[i].violation_kwh == 0.0;
    if (!lp.feasible) continue;
    const double gap = std::abs(lp.objective - m.episodes[i].cost_eur);
    worst = std::max(worst, gap);
    if (gap <= 1e-9) ++equal;
  }
  return {zero && equal == 100,
          fmt::format("violation {} over 100 episodes, {}/100 episode costs equal the one-shot LP "
                      "(max gap {:.1e} EUR)",
                      zero ? "exactly 0.0" : "NONZERO", equal, worst)};
}

Outcome density_normalization() {
  Rng rng = make_stream(109, "acceptance-density");
  int inside = 0;
  double lo = 2.0, hi = 0.0;
  for (int i = 0; i < 20; ++i) {
    const GaussianPolicy pi =
        testing::constant_policy(uniform(rng, -1.5, 1.5), uniform(rng, -2.0, 0.5));
    const std::vector<double> obs{0.0};
    const double mass =
        testing::integrate([&](double a) { return std::exp(pi.log_prob(obs, a)); }, -6.0, 6.0);
    lo = std::min(lo, mass);
    hi = std::max(hi, mass);
    if (mass >= 0.999 && mass <= 1.001) ++inside;
  }
  return {inside == 20, fmt::format("{}/20 integrals in [0.999, 1.001] (range {:.6f} .. {:.6f})",
                                    inside, lo, hi)};
}

Outcome data_accounting() {
  testing::TempDir dir;
  const HourStamp first = parse_hour_stamp("2018-10-01T00:00:00Z");
  const HourStamp last = parse_hour_stamp("2020-05-01T23:00:00Z");
  const auto hours = static_cast<std::size_t>(last.hours - first.hours + 1);
  std::vector<double> prices(hours);
  Rng rng = make_stream(110, "acceptance-data");
  for (double& p : prices) p = std::round(uniform(rng, -20.0, 120.0) * 100.0) / 100000.0;
  write_price_csv(dir / "prices.csv", PriceSeries(first, prices), PriceUnit::EurPerMwh);
  const PriceSeries loaded = load_price_csv(dir / "prices.csv", PriceUnit::EurPerMwh);
  const DatasetSplit split = split_train_test(loaded, 175);
  const bool pass = loaded.days() == 579 && split.train.days() == 404 && split.test.days() == 175 &&
                    split.train.size() == 404 * kHoursPerDay;
  return {pass, fmt::format("{} days loaded, {} train / {} test", loaded.days(),
                            split.train.days(), split.test.days())};
}

}  // namespace
}  // namespace evsched

int main() {
  using namespace evsched;
  tune_allocator();
  int failures = 0;
  const auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %2d %s: %s (%s)\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "gradient exactness", gradient_exactness);
  report(2, "LP oracle equivalence", lp_oracle);
  report(3, "cost branches", cost_branches);

  // Criteria 4, 5 and 8 share one set of desk-scale runs.
  testing::TempDir dir;
  DeskRuns desk;
  std::string setup_error;
  try {
    progress("ideal MPC reference");
    desk.mpc = run_text(dir, desk_config("mpc", 1, "mpc",
                                         "price_error = 0\ndeparture = known\n"));
    for (std::uint64_t s = 1; s <= 5; ++s) {
      for (const auto& [label, method, extra] :
           {std::tuple<std::string, std::string, std::string>{"alsac", "alsac", kNet},
            {"sac-0.12", "sac", kNet + "sigma = 0.12\n"},
            {"sac-1.2", "sac", kNet + "sigma = 1.2\n"}}) {
        progress(fmt::format("{} seed {}", label, s));
        desk.runs[{label, s}] =
            run_text(dir, desk_config(method, s, fmt::format("{}-{}", label, s), extra));
      }
    }
    progress("alsac seed 1 repeat");
    desk.repeat = run_text(dir, desk_config("alsac", 1, "alsac-1-repeat", kNet));
  } catch (const std::exception& e) {
    setup_error = std::string("desk runs failed: ") + e.what();
  }
  const auto needs_desk = [&](const std::function<Outcome()>& f) {
    return [&, f] { return setup_error.empty() ? f() : Outcome{false, setup_error}; };
  };
  report(4, "desk-scale convergence", needs_desk([&] { return convergence(desk); }));
  report(5, "penalty ordering", needs_desk([&] { return ordering(desk); }));
  report(6, "dual dynamics", dual_dynamics);
  report(7, "ideal MPC zero violation", ideal_mpc);
  report(8, "determinism", needs_desk([&] { return determinism(desk); }));
  report(9, "squashed density normalization", density_normalization);
  report(10, "data accounting", data_accounting);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
