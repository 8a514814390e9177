#pragma once

// Experiment configuration: a sectioned `key = value` file with a strict
// schema. Every key has a documented default; the resolved configuration
// (defaults included) is what gets hashed and written next to a run.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evsched/alsac.hpp"
#include "evsched/env.hpp"
#include "evsched/mpc.hpp"
#include "evsched/penalized.hpp"
#include "evsched/pricing.hpp"
#include "evsched/trainer.hpp"

namespace evsched {

/// Every problem found while reading or validating a config.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class Method { AlSac, Sac, Ddpg, Mpc };

Method parse_method(std::string_view text);
std::string_view to_string(Method method);

enum class DataSource { Synthetic, Csv };

struct DataConfig {
  DataSource source = DataSource::Synthetic;
  std::string path;  // csv only; relative to the config file
  PriceUnit unit = PriceUnit::EurPerMwh;
  std::size_t test_days = 50;
  std::size_t synthetic_days = 100;
  SyntheticPriceSpec synthetic{};
};

struct ExperimentConfig {
  Method method = Method::AlSac;
  std::uint64_t seed = 0;
  /// Seeds the evaluation sessions separately so that runs with different
  /// training seeds are scored on the same episodes.
  std::uint64_t eval_seed = 0;
  /// Evaluation episodes on the test split; 0 means one per test day.
  std::size_t eval_episodes = 0;
  std::string output_dir = "run";  // relative to the config file
  /// Directory the config was read from; not part of the resolved config.
  std::filesystem::path base_dir;

  DataConfig data;
  EvEnvConfig env;
  TrainConfig train;
  AlSacOptions network;
  LagrangeState lagrange;
  PenaltyConfig penalty;
  MpcConfig mpc;

  std::filesystem::path resolve(const std::string& relative) const;
  bool is_learner() const { return method != Method::Mpc; }
};

/// Parses config text. Throws ConfigError listing every offending line.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Cross-field and file-system checks. Throws ConfigError.
void validate(const ExperimentConfig& cfg);

/// Canonical text of the fully resolved config (only keys that apply to the
/// chosen method). Parsing it back yields the same config.
std::string resolved_config(const ExperimentConfig& cfg);
std::string config_digest(const ExperimentConfig& cfg);

/// Closest key among `candidates` within a small edit distance, or empty.
std::string suggest_key(std::string_view key, const std::vector<std::string>& candidates);
std::size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace evsched
