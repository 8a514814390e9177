#pragma once

// Seeded experiment runs, cross-run comparison tables and schedule traces.

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "evsched/config.hpp"

namespace evsched {

/// Price data, the chronological split and the episode days on each side.
/// Test episodes take their lookback window from the end of the training
/// part, so the environment always runs over the full series.
struct PreparedData {
  PriceSeries series;
  DatasetSplit split;
  std::vector<std::size_t> train_days;
  std::vector<std::size_t> test_days;
  ObservationScaling scaling;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

/// Evaluation episodes on the test split, drawn from the evaluation seed.
std::vector<std::pair<std::size_t, Session>> test_plan(const ExperimentConfig& cfg,
                                                       const PreparedData& data);

/// Stable hash of the evaluation episodes: their sessions and every price
/// they observe.
std::string evaluation_digest(const PriceSeries& series, const EvEnvConfig& env,
                              std::span<const std::pair<std::size_t, Session>> plan);

/// Learner for the configured method, freshly initialised from the seed.
std::unique_ptr<OffPolicyAgent> make_agent(const ExperimentConfig& cfg);

/// Row label, e.g. "alsac", "sac", "mpc-ideal".
std::string method_label(const ExperimentConfig& cfg);

struct RunRecord {
  std::string method;
  std::string label;
  std::optional<double> sigma;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string eval_digest;
  double avg_cost_eur = 0.0;
  double avg_violation_kwh = 0.0;
  std::size_t eval_episodes = 0;
  std::int64_t train_env_steps = 0;
  std::optional<int> selected_episode;
  bool halted = false;
  std::string halt_reason;
  double wall_clock_s = 0.0;
  std::string status = "ok";
  std::string error;
  std::filesystem::path run_dir;
  /// Directory relative data paths in the saved config resolve against.
  std::filesystem::path config_base_dir;
  std::vector<std::pair<std::string, std::string>> artifacts;  // name -> file name
};

/// A run that failed after its output directory was created; the manifest
/// with the error has already been written.
class RunFailure : public std::runtime_error {
 public:
  RunFailure(const std::string& what, RunRecord record)
      : std::runtime_error(what), record_(std::move(record)) {}
  const RunRecord& record() const { return record_; }

 private:
  RunRecord record_;
};

/// Data, environment, training or rollout, test evaluation, then artifacts
/// in the output directory: train_log.csv (learners), metrics.csv,
/// episodes.csv, checkpoint.bin (learners), config.ini and manifest.json.
RunRecord run_experiment(const ExperimentConfig& cfg);

void write_manifest(const std::filesystem::path& path, const RunRecord& record);
RunRecord read_manifest(const std::filesystem::path& path);

struct ComparisonRow {
  std::string label;
  std::optional<double> sigma;
  double avg_cost_eur = 0.0;
  double avg_violation_kwh = 0.0;
  std::uint64_t seed = 0;
};

/// One row per manifest. Throws std::runtime_error when the runs were
/// evaluated on different data or a run did not complete.
std::vector<ComparisonRow> compare_runs(const std::vector<std::filesystem::path>& manifests);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);
std::string comparison_text(const std::vector<ComparisonRow>& rows);

struct TraceRow {
  std::string timestamp;
  double price = 0.0;   // EUR/kWh
  double action = 0.0;  // kWh applied during the hour
  double soc = 0.0;     // kWh at the start of the hour
  bool parked = false;
};

/// Hour-by-hour schedule of the run's saved policy (or its MPC settings) on
/// test days first_day..last_day inclusive, counted from the start of the
/// test split. Each day contributes the 24 hours from the anchor onwards.
std::vector<TraceRow> trace_run(const std::filesystem::path& manifest, std::size_t first_day,
                                std::size_t last_day);
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows);

}  // namespace evsched
