// evsched: run experiments, compare runs, and export schedule traces.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "evsched/alloc.hpp"
#include "evsched/experiment.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct DayRange {
  std::size_t first = 0;
  std::size_t last = 0;
};

DayRange parse_day_range(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) throw std::invalid_argument("day range must look like a..b");
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
      throw std::invalid_argument(fmt::format("bad day number '{}' in range '{}'", s, text));
    }
    return v;
  };
  const std::string_view all(text);
  const DayRange r{number(all.substr(0, dots)), number(all.substr(dots + 2))};
  if (r.first > r.last) throw std::invalid_argument(fmt::format("day range '{}' is empty", text));
  return r;
}

int cmd_run(const std::string& config_path) {
  evsched::ExperimentConfig cfg;
  try {
    cfg = evsched::load_config(config_path);
  } catch (const evsched::ConfigError& ex) {
    std::cerr << ex.what() << '\n';
    return kExitValidation;
  }
  try {
    const auto rec = evsched::run_experiment(cfg);
    fmt::print("{} seed {}: avg cost {:.6f} EUR, avg violation {:.6f} kWh over {} episodes ({:.1f} s)\n",
               rec.label, rec.seed, rec.avg_cost_eur, rec.avg_violation_kwh, rec.eval_episodes,
               rec.wall_clock_s);
    if (rec.halted) fmt::print(stderr, "warning: training halted early: {}\n", rec.halt_reason);
    fmt::print("manifest: {}\n", (rec.run_dir / "manifest.json").string());
  } catch (const evsched::RunFailure& ex) {
    fmt::print(stderr, "run failed: {}\nmanifest: {}\n", ex.what(),
               (ex.record().run_dir / "manifest.json").string());
    return kExitRuntime;
  } catch (const std::exception& ex) {
    fmt::print(stderr, "run failed: {}\n", ex.what());
    return kExitRuntime;
  }
  return 0;
}

int cmd_compare(const std::vector<std::string>& manifests, const std::string& out) {
  std::vector<std::filesystem::path> paths(manifests.begin(), manifests.end());
  try {
    const auto rows = evsched::compare_runs(paths);
    {
      std::ofstream csv(out, std::ios::binary);
      if (!csv) throw std::runtime_error(fmt::format("cannot write {}", out));
      csv << evsched::comparison_csv(rows);
    }
    const std::string text = evsched::comparison_text(rows);
    std::ofstream(out + ".txt", std::ios::binary) << text;
    std::cout << text;
  } catch (const std::exception& ex) {
    fmt::print(stderr, "compare failed: {}\n", ex.what());
    return kExitRuntime;
  }
  return 0;
}

int cmd_trace(const std::string& manifest, const std::string& days, const std::string& out) {
  DayRange range;
  try {
    range = parse_day_range(days);
  } catch (const std::exception& ex) {
    fmt::print(stderr, "{}\n", ex.what());
    return kExitValidation;
  }
  try {
    const auto rows = evsched::trace_run(manifest, range.first, range.last);
    evsched::write_trace_csv(out, rows);
    fmt::print("{} rows written to {}\n", rows.size(), out);
  } catch (const evsched::ConfigError& ex) {
    std::cerr << ex.what() << '\n';
    return kExitValidation;
  } catch (const std::out_of_range& ex) {
    fmt::print(stderr, "{}\n", ex.what());
    return kExitValidation;
  } catch (const std::exception& ex) {
    fmt::print(stderr, "trace failed: {}\n", ex.what());
    return kExitRuntime;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  evsched::tune_allocator();
  CLI::App app{"EV charging scheduler experiments"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "train or roll out the configured method and evaluate it");
  run->add_option("config", config_path, "experiment config file")->required();

  std::vector<std::string> manifests;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "tabulate average cost and violation of runs");
  compare->add_option("manifests", manifests, "manifest.json of each run")->required();
  compare->add_option("-o,--output", compare_out, "CSV output (an aligned .txt is written too)")
      ->required();

  std::string trace_manifest;
  std::string trace_days;
  std::string trace_out;
  auto* trace = app.add_subcommand("trace", "hourly schedule of a run on test days");
  trace->add_option("manifest", trace_manifest, "manifest.json of the run")->required();
  trace->add_option("--days", trace_days, "test day range a..b (inclusive, 0-based)")->required();
  trace->add_option("-o,--output", trace_out, "CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  if (run->parsed()) return cmd_run(config_path);
  if (compare->parsed()) return cmd_compare(manifests, compare_out);
  return cmd_trace(trace_manifest, trace_days, trace_out);
}
