#include "evsched/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace evsched {
namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "invalid configuration:";
  for (const auto& p : problems) out += "\n  " + p;
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw std::invalid_argument(fmt::format("expected a number, got '{}'", text));
  }
  return value;
}

bool parse_bool(std::string_view text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw std::invalid_argument(fmt::format("expected true or false, got '{}'", text));
}

std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_number<int>(trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

std::string show(double v) { return fmt::format("{}", v); }

struct Field {
  std::string section;
  std::string key;
  std::function<bool(const ExperimentConfig&)> applies;
  std::function<void(std::string_view)> set;
  std::function<std::string()> get;
};

using Pred = std::function<bool(const ExperimentConfig&)>;

template <typename T>
Field field(std::string section, std::string key, Pred applies, T& ref) {
  Field f{std::move(section), std::move(key), std::move(applies), {}, {}};
  if constexpr (std::is_same_v<T, bool>) {
    f.set = [&ref](std::string_view v) { ref = parse_bool(v); };
    f.get = [&ref] { return std::string(ref ? "true" : "false"); };
  } else if constexpr (std::is_same_v<T, std::string>) {
    f.set = [&ref](std::string_view v) { ref = std::string(v); };
    f.get = [&ref] { return ref; };
  } else if constexpr (std::is_floating_point_v<T>) {
    f.set = [&ref](std::string_view v) { ref = parse_number<T>(v); };
    f.get = [&ref] { return show(ref); };
  } else {
    f.set = [&ref](std::string_view v) { ref = parse_number<T>(v); };
    f.get = [&ref] { return fmt::format("{}", ref); };
  }
  return f;
}

Field custom(std::string section, std::string key, Pred applies,
             std::function<void(std::string_view)> set, std::function<std::string()> get) {
  return {std::move(section), std::move(key), std::move(applies), std::move(set), std::move(get)};
}

Pred methods(std::initializer_list<Method> ms) {
  std::vector<Method> list(ms);
  return [list](const ExperimentConfig& c) {
    return std::find(list.begin(), list.end(), c.method) != list.end();
  };
}

const Pred kAlways = [](const ExperimentConfig&) { return true; };

std::string_view unit_name(PriceUnit u) {
  return u == PriceUnit::EurPerKwh ? "eur_per_kwh" : "eur_per_mwh";
}

PriceUnit parse_unit(std::string_view v) {
  if (v == "eur_per_kwh") return PriceUnit::EurPerKwh;
  if (v == "eur_per_mwh") return PriceUnit::EurPerMwh;
  throw std::invalid_argument(fmt::format("unknown unit '{}' (expected eur_per_kwh or eur_per_mwh)", v));
}

std::string_view rule_name(DualRule r) {
  return r == DualRule::Residual ? "residual" : "literal-ascent";
}

DualRule parse_rule(std::string_view v) {
  if (v == "residual") return DualRule::Residual;
  if (v == "literal-ascent") return DualRule::LiteralAscent;
  throw std::invalid_argument(fmt::format("unknown dual rule '{}' (expected residual or literal-ascent)", v));
}

void add_distribution(std::vector<Field>& out, const std::string& prefix, TruncatedNormal& d) {
  out.push_back(field("env", prefix + "_mean", kAlways, d.mean));
  out.push_back(field("env", prefix + "_std", kAlways, d.stddev));
  out.push_back(field("env", prefix + "_lower", kAlways, d.lower));
  out.push_back(field("env", prefix + "_upper", kAlways, d.upper));
}

// Schema in canonical (dump) order.
std::vector<Field> schema(ExperimentConfig& c) {
  const Pred learners = methods({Method::AlSac, Method::Sac, Method::Ddpg});
  const Pred soft = methods({Method::AlSac, Method::Sac});
  const Pred alsac = methods({Method::AlSac});
  const Pred penalized = methods({Method::Sac, Method::Ddpg});
  const Pred mpc = methods({Method::Mpc});
  const Pred csv = [](const ExperimentConfig& x) { return x.data.source == DataSource::Csv; };
  const Pred synthetic = [](const ExperimentConfig& x) {
    return x.data.source == DataSource::Synthetic;
  };

  std::vector<Field> f;
  f.push_back(field("experiment", "seed", kAlways, c.seed));
  f.push_back(field("experiment", "eval_seed", kAlways, c.eval_seed));
  f.push_back(field("experiment", "eval_episodes", kAlways, c.eval_episodes));
  f.push_back(field("experiment", "output_dir", kAlways, c.output_dir));

  f.push_back(custom(
      "data", "source", kAlways,
      [&c](std::string_view v) {
        if (v == "synthetic") {
          c.data.source = DataSource::Synthetic;
        } else if (v == "csv") {
          c.data.source = DataSource::Csv;
        } else {
          throw std::invalid_argument(fmt::format("unknown source '{}' (expected synthetic or csv)", v));
        }
      },
      [&c] { return std::string(c.data.source == DataSource::Csv ? "csv" : "synthetic"); }));
  f.push_back(field("data", "path", csv, c.data.path));
  f.push_back(custom(
      "data", "unit", csv, [&c](std::string_view v) { c.data.unit = parse_unit(v); },
      [&c] { return std::string(unit_name(c.data.unit)); }));
  f.push_back(field("data", "test_days", kAlways, c.data.test_days));
  f.push_back(field("data", "days", synthetic, c.data.synthetic_days));
  f.push_back(custom(
      "data", "pattern", synthetic,
      [&c](std::string_view v) { c.data.synthetic.pattern = parse_price_pattern(v); },
      [&c] { return std::string(to_string(c.data.synthetic.pattern)); }));
  f.push_back(field("data", "low", synthetic, c.data.synthetic.low));
  f.push_back(field("data", "high", synthetic, c.data.synthetic.high));
  f.push_back(field("data", "cheap_start_hour", synthetic, c.data.synthetic.cheap_start_hour));
  f.push_back(field("data", "cheap_end_hour", synthetic, c.data.synthetic.cheap_end_hour));
  f.push_back(field("data", "noise", synthetic, c.data.synthetic.noise));
  f.push_back(field("data", "synthetic_seed", synthetic, c.data.synthetic.seed));
  f.push_back(custom(
      "data", "start", synthetic,
      [&c](std::string_view v) { c.data.synthetic.start = parse_hour_stamp(v); },
      [&c] { return format_hour_stamp(c.data.synthetic.start); }));

  f.push_back(field("env", "capacity", kAlways, c.env.capacity));
  f.push_back(field("env", "soc_min", kAlways, c.env.soc_min));
  f.push_back(field("env", "soc_target", kAlways, c.env.soc_target));
  f.push_back(field("env", "max_charge", kAlways, c.env.max_charge));
  f.push_back(field("env", "max_discharge", kAlways, c.env.max_discharge));
  add_distribution(f, "arrival", c.env.arrival);
  add_distribution(f, "departure", c.env.departure);
  add_distribution(f, "init_soc", c.env.init_soc);
  f.push_back(field("env", "cost_budget", kAlways, c.env.cost_budget));
  f.push_back(field("env", "anchor_hour", kAlways, c.env.anchor_hour));
  f.push_back(field("env", "clip_infeasible_actions", kAlways, c.env.clip_infeasible_actions));
  f.push_back(field("env", "state_time_features", kAlways, c.env.state_time_features));

  f.push_back(field("train", "episodes", learners, c.train.episodes));
  f.push_back(field("train", "max_env_steps", learners, c.train.max_env_steps));
  f.push_back(field("train", "batch_size", learners, c.train.batch_size));
  f.push_back(field("train", "warmup_episodes", learners, c.train.warmup_episodes));
  f.push_back(field("train", "updates_per_step", learners, c.train.updates_per_step));
  f.push_back(field("train", "buffer_capacity", learners, c.train.buffer_capacity));
  f.push_back(field("train", "select_every", learners, c.train.select_every));
  f.push_back(field("train", "select_episodes", learners, c.train.select_episodes));
  f.push_back(field("train", "max_bad_updates", learners, c.train.max_bad_updates));

  f.push_back(custom(
      "method", "name", kAlways, [](std::string_view) {},
      [&c] { return std::string(to_string(c.method)); }));
  f.push_back(custom(
      "method", "hidden", learners,
      [&c](std::string_view v) { c.network.hidden = parse_int_list(v); },
      [&c] { return fmt::format("{}", fmt::join(c.network.hidden, ",")); }));
  f.push_back(field("method", "gamma", learners, c.network.gamma));
  f.push_back(field("method", "lr", learners, c.network.lr));
  f.push_back(field("method", "soft_update", learners, c.network.soft_update));
  f.push_back(field("method", "actor_delay", soft, c.network.actor_delay));
  f.push_back(field("method", "alpha_init", soft, c.lagrange.alpha));
  f.push_back(field("method", "alpha_lr", soft, c.lagrange.alpha_lr));
  f.push_back(field("method", "entropy_target", soft, c.lagrange.entropy_target));
  f.push_back(field("method", "learn_alpha", soft, c.lagrange.learn_alpha));
  f.push_back(field("method", "lambda_init", alsac, c.lagrange.lambda));
  f.push_back(field("method", "lambda_lr", alsac, c.lagrange.lambda_lr));
  f.push_back(custom(
      "method", "penalty", alsac,
      [&c](std::string_view v) {
        if (v == "auto") {
          c.lagrange.penalty_override.reset();
        } else {
          c.lagrange.penalty_override = parse_number<double>(v);
        }
      },
      [&c] {
        return c.lagrange.penalty_override ? show(*c.lagrange.penalty_override)
                                           : std::string("auto");
      }));
  f.push_back(field("method", "learn_lambda", alsac, c.lagrange.learn_lambda));
  f.push_back(custom(
      "method", "dual_rule", alsac, [&c](std::string_view v) { c.lagrange.rule = parse_rule(v); },
      [&c] { return std::string(rule_name(c.lagrange.rule)); }));
  f.push_back(field("method", "sigma", penalized, c.penalty.sigma));
  f.push_back(field("method", "exploration_noise", methods({Method::Ddpg}), c.penalty.exploration_noise));
  f.push_back(field("method", "horizon", mpc, c.mpc.horizon));
  f.push_back(field("method", "price_error", mpc, c.mpc.price_error));
  f.push_back(custom(
      "method", "departure", mpc,
      [&c](std::string_view v) { c.mpc.departure = parse_departure_mode(v); },
      [&c] { return std::string(to_string(c.mpc.departure)); }));
  f.push_back(field("method", "resolve_each_step", mpc, c.mpc.resolve_each_step));
  f.push_back(field("method", "redraw_departure", mpc, c.mpc.redraw_departure));
  return f;
}

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

// Values shared between sections are mirrored into the structs that use them.
void synchronise(ExperimentConfig& c) {
  c.lagrange.cost_budget = c.env.cost_budget;
  c.train.seed = c.seed;
  c.penalty.base = c.method == Method::Ddpg ? PenalizedBase::Ddpg : PenalizedBase::Sac;
  c.network.name = std::string(to_string(c.method));
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

Method parse_method(std::string_view text) {
  if (text == "alsac") return Method::AlSac;
  if (text == "sac") return Method::Sac;
  if (text == "ddpg") return Method::Ddpg;
  if (text == "mpc") return Method::Mpc;
  throw std::invalid_argument(
      fmt::format("unknown method '{}' (expected alsac, sac, ddpg or mpc)", text));
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::AlSac: return "alsac";
    case Method::Sac: return "sac";
    case Method::Ddpg: return "ddpg";
    case Method::Mpc: return "mpc";
  }
  return "?";
}

std::filesystem::path ExperimentConfig::resolve(const std::string& relative) const {
  const std::filesystem::path p(relative);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::string suggest_key(std::string_view key, const std::vector<std::string>& candidates) {
  const std::size_t limit = std::max<std::size_t>(2, key.size() / 3);
  std::string best;
  std::size_t best_d = limit + 1;
  for (const auto& c : candidates) {
    const std::size_t d = edit_distance(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<std::string> problems;
  std::vector<Entry> entries;
  std::vector<std::pair<std::string, int>> headers;
  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.push_back(fmt::format("line {}: malformed section header '{}'", line_no, line));
        continue;
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      headers.emplace_back(section, line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      problems.push_back(fmt::format("line {}: expected 'key = value', got '{}'", line_no, line));
      continue;
    }
    if (section.empty()) {
      problems.push_back(fmt::format("line {}: key outside of any section", line_no));
      continue;
    }
    std::string_view value = line.substr(eq + 1);
    if (const auto hash = value.find(" #"); hash != std::string_view::npos) value = value.substr(0, hash);
    entries.push_back({section, std::string(trim(line.substr(0, eq))), std::string(trim(value)), line_no});
  }

  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  // Method and data source decide which other keys are legal.
  for (const auto& e : entries) {
    try {
      if (e.section == "method" && e.key == "name") cfg.method = parse_method(e.value);
    } catch (const std::exception& ex) {
      problems.push_back(fmt::format("line {}: [method] name: {}", e.line, ex.what()));
    }
  }
  std::vector<Field> fields = schema(cfg);
  auto find = [&](const std::string& sec, const std::string& key) -> Field* {
    for (auto& f : fields) {
      if (f.section == sec && f.key == key) return &f;
    }
    return nullptr;
  };
  for (const auto& e : entries) {
    if (e.section == "data" && e.key == "source") {
      try {
        find("data", "source")->set(e.value);
      } catch (const std::exception& ex) {
        problems.push_back(fmt::format("line {}: [data] source: {}", e.line, ex.what()));
      }
    }
  }

  std::vector<std::string> sections;
  for (const auto& f : fields) {
    if (std::find(sections.begin(), sections.end(), f.section) == sections.end()) {
      sections.push_back(f.section);
    }
  }
  // Unknown sections are reported at their header, even when empty.
  for (const auto& [name, line] : headers) {
    if (std::find(sections.begin(), sections.end(), name) == sections.end()) {
      const std::string hint = suggest_key(name, sections);
      problems.push_back(fmt::format("line {}: unknown section [{}]{}", line, name,
                                     hint.empty() ? "" : fmt::format(", did you mean [{}]?", hint)));
    }
  }
  std::vector<std::pair<std::string, std::string>> seen;
  for (const auto& e : entries) {
    if (std::find(sections.begin(), sections.end(), e.section) == sections.end()) continue;
    Field* f = find(e.section, e.key);
    if (f == nullptr) {
      std::vector<std::string> keys;
      for (const auto& g : fields) {
        if (g.section == e.section) keys.push_back(g.key);
      }
      const std::string hint = suggest_key(e.key, keys);
      problems.push_back(fmt::format("line {}: unknown key '{}' in [{}]{}", e.line, e.key, e.section,
                                     hint.empty() ? "" : fmt::format(", did you mean '{}'?", hint)));
      continue;
    }
    const std::pair<std::string, std::string> id{e.section, e.key};
    if (std::find(seen.begin(), seen.end(), id) != seen.end()) {
      problems.push_back(fmt::format("line {}: duplicate key '{}' in [{}]", e.line, e.key, e.section));
      continue;
    }
    seen.push_back(id);
    if (!f->applies(cfg)) {
      problems.push_back(fmt::format("line {}: key '{}' in [{}] does not apply to this run "
                                     "(method {}, data source {})",
                                     e.line, e.key, e.section, to_string(cfg.method),
                                     cfg.data.source == DataSource::Csv ? "csv" : "synthetic"));
      continue;
    }
    try {
      f->set(e.value);
    } catch (const std::exception& ex) {
      problems.push_back(fmt::format("line {}: [{}] {}: {}", e.line, e.section, e.key, ex.what()));
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  synchronise(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({fmt::format("cannot open config file {}", path.string())});
  std::stringstream buffer;
  buffer << in.rdbuf();
  ExperimentConfig cfg = parse_config(buffer.str(), path.parent_path());
  validate(cfg);
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  std::vector<std::string> problems;
  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& ex) {
      problems.emplace_back(ex.what());
    }
  };
  check([&] { cfg.env.validate(); });
  if (cfg.data.test_days < 1) problems.emplace_back("data.test_days must be >= 1");
  if (cfg.data.source == DataSource::Csv) {
    if (cfg.data.path.empty()) {
      problems.emplace_back("data.path is required for a csv source");
    } else if (!std::filesystem::exists(cfg.resolve(cfg.data.path))) {
      problems.push_back(fmt::format("data.path {} does not exist", cfg.resolve(cfg.data.path).string()));
    }
  } else if (cfg.data.synthetic_days < cfg.data.test_days + 2) {
    problems.emplace_back("data.days must exceed data.test_days by at least 2");
  }
  if (cfg.is_learner()) {
    check([&] { cfg.train.validate(); });
    if (cfg.network.hidden.empty() ||
        std::any_of(cfg.network.hidden.begin(), cfg.network.hidden.end(), [](int h) { return h < 1; })) {
      problems.emplace_back("method.hidden must list positive layer widths");
    }
    if (!(cfg.network.gamma > 0.0 && cfg.network.gamma <= 1.0)) {
      problems.emplace_back("method.gamma must lie in (0, 1]");
    }
    if (!(cfg.network.lr > 0.0)) problems.emplace_back("method.lr must be > 0");
    if (!(cfg.network.soft_update >= 0.0 && cfg.network.soft_update <= 1.0)) {
      problems.emplace_back("method.soft_update must lie in [0, 1]");
    }
    if (cfg.network.actor_delay < 1) problems.emplace_back("method.actor_delay must be >= 1");
    check([&] { cfg.lagrange.validate(); });
    check([&] { cfg.penalty.validate(); });
  } else {
    check([&] { cfg.mpc.validate(); });
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::string resolved_config(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  std::string out;
  std::string section;
  for (const auto& f : schema(copy)) {
    if (!f.applies(copy)) continue;
    if (f.section != section) {
      if (!section.empty()) out += '\n';
      section = f.section;
      out += fmt::format("[{}]\n", section);
    }
    out += fmt::format("{} = {}\n", f.key, f.get());
  }
  return out;
}

std::string config_digest(const ExperimentConfig& cfg) {
  return hex_digest(fnv1a(resolved_config(cfg)));
}

}  // namespace evsched
