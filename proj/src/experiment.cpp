#include "evsched/experiment.hpp"

#include <bit>
#include <chrono>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "evsched/checkpoint.hpp"
#include "json.hpp"

namespace evsched {
namespace {

using nlohmann::json;

constexpr const char* kSelectionRule =
    "selected model: lowest training cost among snapshots with training violation <= budget, "
    "else lowest violation";

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("failed writing {}", path.string()));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::uint64_t hash_double(double v, std::uint64_t h) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  return fnv1a(std::string_view(bytes, 8), h);
}

std::string metrics_csv(const RunRecord& r) {
  return fmt::format("method,sigma,avg_cost_eur,avg_violation_kwh,episodes\n{},{},{:.6f},{:.6f},{}\n",
                     r.label, r.sigma ? fmt::format("{:.6f}", *r.sigma) : "", r.avg_cost_eur,
                     r.avg_violation_kwh, r.eval_episodes);
}

std::string episodes_csv(const PriceSeries& series, const EvEnvConfig& env,
                         const EvalMetrics& metrics) {
  std::string out = "episode,start,arrival_hour,departure_hour,initial_soc_kwh,cost_eur,violation_kwh\n";
  for (std::size_t i = 0; i < metrics.episodes.size(); ++i) {
    const auto& e = metrics.episodes[i];
    const std::size_t start = e.day * kHoursPerDay + static_cast<std::size_t>(env.anchor_hour);
    out += fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f}\n", i,
                       format_hour_stamp(series.stamp(start)), e.session.arrival_hour,
                       e.session.departure_hour, e.session.initial_soc, e.cost_eur,
                       e.violation_kwh);
  }
  return out;
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData d;
  if (cfg.data.source == DataSource::Csv) {
    d.series = load_price_csv(cfg.resolve(cfg.data.path), cfg.data.unit);
  } else {
    d.series = gen_synthetic(cfg.data.synthetic, cfg.data.synthetic_days);
  }
  d.split = split_train_test(d.series, cfg.data.test_days);
  const EvEnv env(cfg.env, d.series);
  const std::size_t train_day_count = d.split.train.size() / kHoursPerDay;
  d.train_days = env.valid_days(0, train_day_count);
  d.test_days = env.valid_days(train_day_count, d.series.days());
  if (d.train_days.empty()) throw std::invalid_argument("training split holds no complete episode");
  if (d.test_days.empty()) throw std::invalid_argument("test split holds no complete episode");
  const PriceStats stats = price_stats(d.split.train);
  d.scaling = {stats.mean, stats.stddev};
  return d;
}

std::vector<std::pair<std::size_t, Session>> test_plan(const ExperimentConfig& cfg,
                                                       const PreparedData& data) {
  Rng rng = make_stream(cfg.eval_seed, "eval-sessions");
  const std::size_t n = cfg.eval_episodes == 0 ? data.test_days.size() : cfg.eval_episodes;
  return evaluation_plan(cfg.env, data.test_days, n, rng);
}

std::string evaluation_digest(const PriceSeries& series, const EvEnvConfig& env,
                              std::span<const std::pair<std::size_t, Session>> plan) {
  std::uint64_t h = fnv1a("evaluation");
  for (const auto& [day, s] : plan) {
    const std::size_t start = day * kHoursPerDay + static_cast<std::size_t>(env.anchor_hour);
    h = fnv1a(format_hour_stamp(series.stamp(start)), h);
    h = fnv1a(fmt::format("|{}|{}|", s.arrival_hour, s.departure_hour), h);
    h = hash_double(s.initial_soc, h);
    for (std::size_t i = start + 1 - kWindowHours; i <= start + kEpisodeSteps; ++i) {
      h = hash_double(series[i], h);
    }
  }
  return hex_digest(h);
}

std::unique_ptr<OffPolicyAgent> make_agent(const ExperimentConfig& cfg) {
  const int obs_dim = observation_size(cfg.env);
  const ActionScale scale = ActionScale::from_bounds(-cfg.env.max_discharge, cfg.env.max_charge);
  Rng init = make_stream(cfg.seed, "init");
  switch (cfg.method) {
    case Method::AlSac:
      return std::make_unique<AlSacAgent>(obs_dim, scale, cfg.network, cfg.lagrange, init);
    case Method::Sac:
    case Method::Ddpg:
      return make_penalized_agent(obs_dim, scale, cfg.network, cfg.lagrange, cfg.penalty, init);
    case Method::Mpc:
      break;
  }
  throw std::invalid_argument("mpc has no learner");
}

std::string method_label(const ExperimentConfig& cfg) {
  if (cfg.method != Method::Mpc) return std::string(to_string(cfg.method));
  const bool ideal = cfg.mpc.price_error == 0.0 && cfg.mpc.departure == DepartureMode::Known;
  std::string label = ideal ? "mpc-ideal" : "mpc";
  if (!cfg.mpc.resolve_each_step) label += "-open-loop";
  return label;
}

RunRecord run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.method = std::string(to_string(cfg.method));
  rec.label = method_label(cfg);
  if (cfg.method == Method::Sac || cfg.method == Method::Ddpg) rec.sigma = cfg.penalty.sigma;
  rec.seed = cfg.seed;
  rec.config_digest = config_digest(cfg);
  rec.run_dir = cfg.resolve(cfg.output_dir);
  rec.config_base_dir = std::filesystem::absolute(cfg.base_dir.empty() ? "." : cfg.base_dir);

  std::filesystem::create_directories(rec.run_dir);
  const auto manifest_path = rec.run_dir / "manifest.json";
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  try {
    write_text(rec.run_dir / "config.ini", resolved_config(cfg));
    rec.artifacts.emplace_back("config", "config.ini");

    const PreparedData data = prepare_data(cfg);
    const auto plan = test_plan(cfg, data);
    rec.eval_digest = evaluation_digest(data.series, cfg.env, plan);
    rec.eval_episodes = plan.size();
    EvEnv env(cfg.env, data.series);

    EvalMetrics metrics;
    if (cfg.method == Method::Mpc) {
      Rng forecast = make_stream(cfg.seed, "forecast-noise");
      metrics = mpc_rollout(env, plan, cfg.mpc, forecast);
    } else {
      auto agent = make_agent(cfg);
      const TrainResult result =
          cfg.method == Method::AlSac
              ? train(*agent, env, data.train_days, data.scaling, cfg.train)
              : train_penalized(*agent, env, data.train_days, data.scaling, cfg.train, cfg.penalty);
      rec.train_env_steps = result.env_steps;
      rec.halted = result.halted;
      rec.halt_reason = result.halt_reason;
      {
        std::ofstream log(rec.run_dir / "train_log.csv", std::ios::binary);
        write_training_log(log, result.log,
                           cfg.method == Method::AlSac ? std::string() : rec.label);
      }
      rec.artifacts.emplace_back("train_log", "train_log.csv");
      if (result.best) {
        rec.selected_episode = result.best->episode;
        agent->load_networks(result.best_networks);
      }
      save_checkpoint(rec.run_dir / "checkpoint.bin", agent->networks());
      rec.artifacts.emplace_back("checkpoint", "checkpoint.bin");
      AgentController controller(*agent, data.scaling);
      metrics = evaluate(controller, env, plan);
    }
    rec.avg_cost_eur = metrics.avg_cost_eur;
    rec.avg_violation_kwh = metrics.avg_violation_kwh;
    write_text(rec.run_dir / "metrics.csv", metrics_csv(rec));
    rec.artifacts.emplace_back("metrics", "metrics.csv");
    write_text(rec.run_dir / "episodes.csv", episodes_csv(data.series, cfg.env, metrics));
    rec.artifacts.emplace_back("episodes", "episodes.csv");
  } catch (const std::exception& ex) {
    rec.status = "failed";
    rec.error = ex.what();
    rec.wall_clock_s = elapsed();
    write_manifest(manifest_path, rec);
    throw RunFailure(ex.what(), rec);
  }
  rec.wall_clock_s = elapsed();
  write_manifest(manifest_path, rec);
  return rec;
}

void write_manifest(const std::filesystem::path& path, const RunRecord& r) {
  json j;
  j["method"] = r.method;
  j["label"] = r.label;
  j["sigma"] = r.sigma ? json(*r.sigma) : json(nullptr);
  j["seed"] = r.seed;
  j["config_digest"] = r.config_digest;
  j["eval_digest"] = r.eval_digest;
  j["metrics"] = {{"avg_cost_eur", r.avg_cost_eur},
                  {"avg_violation_kwh", r.avg_violation_kwh},
                  {"episodes", r.eval_episodes}};
  j["training"] = {{"env_steps", r.train_env_steps},
                   {"selected_episode", r.selected_episode ? json(*r.selected_episode) : json(nullptr)},
                   {"halted", r.halted},
                   {"halt_reason", r.halt_reason},
                   {"selection_rule", kSelectionRule}};
  j["wall_clock_s"] = r.wall_clock_s;
  j["status"] = r.status;
  j["error"] = r.error;
  j["config_base_dir"] = r.config_base_dir.string();
  json artifacts = json::object();
  for (const auto& [name, file] : r.artifacts) artifacts[name] = file;
  j["artifacts"] = artifacts;
  write_text(path, j.dump(2) + "\n");
}

RunRecord read_manifest(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
    RunRecord r;
    r.method = j.at("method").get<std::string>();
    r.label = j.at("label").get<std::string>();
    if (!j.at("sigma").is_null()) r.sigma = j.at("sigma").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.eval_digest = j.at("eval_digest").get<std::string>();
    const auto& m = j.at("metrics");
    r.avg_cost_eur = m.at("avg_cost_eur").get<double>();
    r.avg_violation_kwh = m.at("avg_violation_kwh").get<double>();
    r.eval_episodes = m.at("episodes").get<std::size_t>();
    const auto& t = j.at("training");
    r.train_env_steps = t.at("env_steps").get<std::int64_t>();
    if (!t.at("selected_episode").is_null()) r.selected_episode = t.at("selected_episode").get<int>();
    r.halted = t.at("halted").get<bool>();
    r.halt_reason = t.at("halt_reason").get<std::string>();
    r.wall_clock_s = j.at("wall_clock_s").get<double>();
    r.status = j.at("status").get<std::string>();
    r.error = j.at("error").get<std::string>();
    r.config_base_dir = j.at("config_base_dir").get<std::string>();
    for (const auto& [name, file] : j.at("artifacts").items()) {
      r.artifacts.emplace_back(name, file.get<std::string>());
    }
    r.run_dir = path.parent_path();
    return r;
  } catch (const json::exception& ex) {
    throw std::runtime_error(fmt::format("malformed manifest {}: {}", path.string(), ex.what()));
  }
}

std::vector<ComparisonRow> compare_runs(const std::vector<std::filesystem::path>& manifests) {
  if (manifests.empty()) throw std::invalid_argument("compare needs at least one manifest");
  std::vector<ComparisonRow> rows;
  std::string digest;
  std::filesystem::path first;
  for (const auto& path : manifests) {
    const RunRecord r = read_manifest(path);
    if (r.status != "ok") {
      throw std::runtime_error(fmt::format("run {} did not complete: {}", path.string(), r.error));
    }
    if (digest.empty()) {
      digest = r.eval_digest;
      first = path;
    } else if (r.eval_digest != digest) {
      throw std::runtime_error(fmt::format(
          "runs were evaluated on different data: {} has digest {}, {} has {}", first.string(),
          digest, path.string(), r.eval_digest));
    }
    rows.push_back({r.label, r.sigma, r.avg_cost_eur, r.avg_violation_kwh, r.seed});
  }
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "method,sigma,seed,avg_cost_eur,avg_violation_kwh\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{:.6f},{:.6f}\n", r.label,
                       r.sigma ? fmt::format("{:.6f}", *r.sigma) : "", r.seed, r.avg_cost_eur,
                       r.avg_violation_kwh);
  }
  return out;
}

std::string comparison_text(const std::vector<ComparisonRow>& rows) {
  std::size_t w = 6;
  for (const auto& r : rows) w = std::max(w, r.label.size());
  std::string out = fmt::format("{:<{}}  {:>6}  {:>6}  {:>18}  {:>24}\n", "method", w, "sigma",
                                "seed", "avg cost (EUR)", "avg SOC violation (kWh)");
  for (const auto& r : rows) {
    out += fmt::format("{:<{}}  {:>6}  {:>6}  {:>18.3f}  {:>24.3f}\n", r.label, w,
                       r.sigma ? fmt::format("{:.2f}", *r.sigma) : "-", r.seed, r.avg_cost_eur,
                       r.avg_violation_kwh);
  }
  out += fmt::format("({})\n", kSelectionRule);
  return out;
}

std::vector<TraceRow> trace_run(const std::filesystem::path& manifest, std::size_t first_day,
                                std::size_t last_day) {
  const RunRecord rec = read_manifest(manifest);
  if (rec.status != "ok") {
    throw std::runtime_error(fmt::format("run {} did not complete: {}", manifest.string(), rec.error));
  }
  const ExperimentConfig cfg = parse_config(read_text(rec.run_dir / "config.ini"), rec.config_base_dir);
  validate(cfg);
  const PreparedData data = prepare_data(cfg);
  if (first_day > last_day) throw std::invalid_argument("trace day range is empty");
  const std::size_t train_day_count = data.split.train.size() / kHoursPerDay;
  EvEnv env(cfg.env, data.series);
  std::vector<std::size_t> days;
  for (std::size_t d = first_day; d <= last_day; ++d) {
    if (d >= cfg.data.test_days || !env.day_fits(train_day_count + d)) {
      throw std::out_of_range(fmt::format(
          "test day {} has no complete episode (test split covers days 0..{}, the last day "
          "lacks the next morning)",
          d, cfg.data.test_days - 1));
    }
    days.push_back(train_day_count + d);
  }
  Rng session_rng = make_stream(cfg.eval_seed, "trace-sessions");
  const auto plan = evaluation_plan(cfg.env, days, days.size(), session_rng);

  std::vector<TraceRow> rows;
  auto observer = [&](const StepTrace& s) {
    rows.push_back({format_hour_stamp(data.series.stamp(s.price_index)), s.price, s.action,
                    s.soc_before, s.parked});
  };
  std::unique_ptr<OffPolicyAgent> agent;
  std::unique_ptr<Controller> controller;
  Rng forecast = make_stream(cfg.seed, "forecast-noise");
  if (cfg.method == Method::Mpc) {
    controller = std::make_unique<MpcController>(cfg.mpc, forecast);
  } else {
    agent = make_agent(cfg);
    agent->load_networks(load_checkpoint(rec.run_dir / "checkpoint.bin"));
    controller = std::make_unique<AgentController>(*agent, data.scaling);
  }
  // Episodes end at departure; the remaining hours of the day are away.
  for (const auto& entry : plan) {
    evaluate(*controller, env, std::span(&entry, 1), observer);
    const std::size_t start = entry.first * kHoursPerDay + static_cast<std::size_t>(cfg.env.anchor_hour);
    const double soc = env.state().soc;
    for (std::size_t i = env.current_price_index(); i < start + kEpisodeSteps; ++i) {
      rows.push_back({format_hour_stamp(data.series.stamp(i)), data.series[i], 0.0, soc, false});
    }
  }
  return rows;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
  std::string out = "timestamp,price_eur_per_kwh,action_kwh,soc_kwh,parked\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{}\n", r.timestamp, r.price, r.action, r.soc, r.parked ? 1 : 0);
  }
  write_text(path, out);
}

}  // namespace evsched
