#include <gtest/gtest.h>

#include "evsched/config.hpp"
#include "support/temp_dir.hpp"

namespace evsched {
namespace {

std::string joined(const ConfigError& e) {
  std::string s;
  for (const auto& p : e.problems()) s += p + "\n";
  return s;
}

std::string problems_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return joined(e);
  }
  return {};
}

TEST(Config, DefaultsWhenEmpty) {
  const ExperimentConfig c = parse_config("");
  EXPECT_EQ(c.method, Method::AlSac);
  EXPECT_EQ(c.train.batch_size, 256);
  EXPECT_EQ(c.network.hidden, (std::vector<int>{256, 256}));
  EXPECT_EQ(c.lagrange.cost_budget, c.env.cost_budget);
  EXPECT_FALSE(c.lagrange.penalty_override.has_value());
}

TEST(Config, ReadsValuesAndComments) {
  const ExperimentConfig c = parse_config(
      "# leading comment\n"
      "[experiment]\nseed = 7 # inline\n; other comment\n"
      "[env]\ncost_budget = 0.05\n"
      "[method]\nname = alsac\nhidden = 32, 16\npenalty = 2.5\ndual_rule = literal-ascent\n");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.train.seed, 7u);
  EXPECT_EQ(c.lagrange.cost_budget, 0.05);
  EXPECT_EQ(c.network.hidden, (std::vector<int>{32, 16}));
  EXPECT_EQ(c.lagrange.penalty_override, 2.5);
  EXPECT_EQ(c.lagrange.rule, DualRule::LiteralAscent);
}

TEST(Config, SuggestsNearbyKey) {
  const std::string p = problems_of("[train]\nbatchsize = 64\n");
  EXPECT_NE(p.find("line 2: unknown key 'batchsize' in [train], did you mean 'batch_size'?"),
            std::string::npos)
      << p;
  EXPECT_NE(problems_of("[trian]\n").find("did you mean [train]?"), std::string::npos);
  EXPECT_EQ(suggest_key("zzzzzz", {"seed", "eval_seed"}), "");
  EXPECT_EQ(edit_distance("kitten", "sitting"), 3u);
}

TEST(Config, CollectsEveryProblem) {
  const std::string p = problems_of(
      "[experiment]\nseed = abc\nseed = 2\n[env]\nmax_charge = 6\ncapacity = big\n"
      "[method]\nname = mpc\nsigma = 0.1\n");
  EXPECT_NE(p.find("line 2: [experiment] seed"), std::string::npos) << p;
  EXPECT_NE(p.find("line 3: duplicate key 'seed'"), std::string::npos) << p;
  EXPECT_NE(p.find("line 6: [env] capacity"), std::string::npos) << p;
  EXPECT_NE(p.find("line 9: key 'sigma' in [method] does not apply"), std::string::npos) << p;
}

TEST(Config, TrainSectionOnlyForLearners) {
  EXPECT_NE(problems_of("[method]\nname = mpc\n[train]\nepisodes = 3\n").find("does not apply"),
            std::string::npos);
  EXPECT_EQ(problems_of("[method]\nname = ddpg\nexploration_noise = 0.2\n[train]\nepisodes = 3\n"),
            "");
}

TEST(Config, UnknownMethodIsReported) {
  EXPECT_NE(problems_of("[method]\nname = ppo\n").find("unknown method 'ppo'"), std::string::npos);
}

TEST(Config, ValidateCatchesCrossFieldProblems) {
  testing::TempDir dir;
  ExperimentConfig c = parse_config(
      "[data]\nsource = csv\npath = nowhere.csv\ntest_days = 5\n[env]\nsoc_min = 30\n",
      dir.path());
  try {
    validate(c);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string p = joined(e);
    EXPECT_NE(p.find("does not exist"), std::string::npos) << p;
    EXPECT_NE(p.find("soc_min"), std::string::npos) << p;
  }
}

TEST(Config, ResolvedDumpRoundTrips) {
  for (const char* text :
       {"[method]\nname = alsac\npenalty = auto\n",
        "[method]\nname = sac\nsigma = 1.2\nhidden = 64,64\n[env]\narrival_std = 0\n",
        "[method]\nname = ddpg\nsigma = 0.3\n",
        "[method]\nname = mpc\nprice_error = 0\ndeparture = known\n[experiment]\nseed = 4\n"}) {
    const ExperimentConfig c = parse_config(text);
    const std::string dump = resolved_config(c);
    const ExperimentConfig back = parse_config(dump);
    EXPECT_EQ(resolved_config(back), dump);
    EXPECT_EQ(config_digest(back), config_digest(c));
  }
}

TEST(Config, DigestTracksValues) {
  const ExperimentConfig a = parse_config("[experiment]\nseed = 1\n");
  const ExperimentConfig b = parse_config("[experiment]\nseed = 2\n");
  const ExperimentConfig a2 = parse_config("# same\n[experiment]\nseed=1\n");
  EXPECT_NE(config_digest(a), config_digest(b));
  EXPECT_EQ(config_digest(a), config_digest(a2));
  EXPECT_EQ(config_digest(a).size(), 16u);
}

TEST(Config, MpcDumpOmitsLearnerKeys) {
  const std::string dump = resolved_config(parse_config("[method]\nname = mpc\n"));
  EXPECT_EQ(dump.find("[train]"), std::string::npos);
  EXPECT_EQ(dump.find("lr ="), std::string::npos);
  EXPECT_NE(dump.find("horizon = 24"), std::string::npos);
}

TEST(Config, ShippedConfigsParse) {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(EVSCHED_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    ++n;
    try {
      // Price files are not shipped, so only synthetic configs are validated.
      const ExperimentConfig c =
          parse_config(testing::read_file(entry.path()), entry.path().parent_path());
      if (c.data.source == DataSource::Synthetic) validate(c);
    } catch (const ConfigError& e) {
      ADD_FAILURE() << entry.path() << "\n" << joined(e);
    }
  }
  EXPECT_GE(n, 5u);
}

}  // namespace
}  // namespace evsched
