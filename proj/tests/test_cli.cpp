#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gpmle/cli.hpp"

using namespace gpmle;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gpmle_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ::unsetenv(cli::kWorkersEnv);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(path(name)) << content;
    return path(name);
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "gpmle");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli::run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  std::string small_config() const {
    return write("small.json", R"({
      "experiment": "increasing_normality",
      "regime": "increasing",
      "kernel": {"family": "exponential"},
      "theta0": {"sigma2": 1.0, "alpha": 0.5},
      "n_list": [15, 30],
      "replicates": 6,
      "master_seed": 5
    })");
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

const char* kMinimal = R"({"regime": "increasing", "kernel": {"family": "exponential"},
  "theta0": {"sigma2": 1, "alpha": 0.5}, "n_list": [10, 20], "replicates": 3, "master_seed": 1})";

}  // namespace

TEST(GitBlobHash, MatchesGit) {
  EXPECT_EQ(cli::git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(cli::git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_F(CliTest, MinimalConfigGetsDocumentedDefaults) {
  const ExperimentConfig cfg = parse_config(write("c.json", kMinimal));
  EXPECT_EQ(cfg.perturb, 0.2);
  EXPECT_EQ(cfg.bounds.alpha_inf, 0.1);
  EXPECT_EQ(cfg.bounds.alpha_sup, 10.0);
  EXPECT_EQ(cfg.workers, 1u);
  EXPECT_EQ(cfg.dimension, 1);
  EXPECT_EQ(cfg.delta, 1.0);
  const Json echo = to_json(cfg);
  for (const char* key : {"perturb", "bounds", "workers", "multistart", "box", "chol_policy", "theta_alt"}) {
    EXPECT_TRUE(echo.contains(key)) << key;
  }
  EXPECT_EQ(config_from_json(echo).master_seed, cfg.master_seed);
}

TEST_F(CliTest, OverridesWinOverFile) {
  const auto p = write("c.json", kMinimal);
  EXPECT_EQ(parse_config(p, {"replicates=5"}).replicates, 5u);
  EXPECT_EQ(parse_config(p, {"theta0.alpha=0.7"}).theta0.alpha, 0.7);
  EXPECT_EQ(parse_config(p, {"kernel.family=matern", "kernel.nu=1.5"}).kernel, KernelSpec::matern(1.5));
  EXPECT_THROW(parse_config(p, {"replicates"}), ConfigError);
}

TEST_F(CliTest, ValidationErrorsNameTheKey) {
  const auto p = write("c.json", kMinimal);
  try {
    parse_config(p, {"bounds.alpha=[5, 1]"});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key, "bounds.alpha");
    EXPECT_NE(std::string(e.what()).find("ParamBounds"), std::string::npos);
  }
  try {
    parse_config(p, {"colour=blue"});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key, "colour");
  }
  try {
    parse_config(p, {"replicates=\"many\""});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key, "replicates");
  }
  try {
    parse_config(p, {"theta0.beta=1"});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key, "theta0.beta");
  }
  EXPECT_THROW(parse_config(write("bad.json", "{not json")), ConfigError);
  EXPECT_THROW(parse_config(path("missing.json")), ConfigError);
  EXPECT_THROW(parse_config(write("m.json", R"({"regime": "increasing"})")), ConfigError);
}

TEST_F(CliTest, SelftestSucceedsAndWritesManifest) {
  EXPECT_EQ(run({"selftest", "--out", path("out")}), 0) << err_.str();
  EXPECT_NE(out_.str().find("PASS expected_score_zero_exponential"), std::string::npos);
  EXPECT_EQ(out_.str().find("FAIL"), std::string::npos);
  const Json m = Json::parse(slurp(path("out/manifest.json")));
  EXPECT_EQ(m["exit_status"], 0);
  EXPECT_TRUE(m["timings"].contains("total_seconds"));
  EXPECT_TRUE(fs::exists(path("out/selftest.json")));
}

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_NE(err_.str().find("Usage"), std::string::npos);
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"experiment", "--out", path("o")}), 1);
  EXPECT_EQ(run({"--help"}), 0);
  EXPECT_NE(out_.str().find(cli::kWorkersEnv), std::string::npos);
}

TEST_F(CliTest, ExperimentWritesReportsAndManifest) {
  const auto cfg = small_config();
  ASSERT_EQ(run({"experiment", "--config", cfg, "--out", path("run")}), 0) << err_.str();
  for (const char* f : {"records.csv", "summary.json", "trends.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(path(std::string("run/") + f))) << f;
  }
  const std::string records = slurp(path("run/records.csv"));
  EXPECT_EQ(records.substr(0, records.find('\n')), kRecordsHeader);
  const Json m = Json::parse(slurp(path("run/manifest.json")));
  EXPECT_EQ(m["inputs"][0]["git_blob_sha1"], cli::git_blob_sha1(slurp(cfg)));
  EXPECT_EQ(m["config"]["replicates"], 6);
  EXPECT_EQ(m["config"]["perturb"], 0.2);
  const Json summary = Json::parse(slurp(path("run/summary.json")));
  EXPECT_EQ(summary["record_count"], 12);

  // refuses to overwrite, then overwrites with --force and reproduces the bytes
  EXPECT_EQ(run({"experiment", "--config", cfg, "--out", path("run")}), 1);
  EXPECT_NE(err_.str().find("--force"), std::string::npos);
  ASSERT_EQ(run({"experiment", "--config", cfg, "--out", path("run"), "--force", "--workers", "3"}), 0);
  EXPECT_EQ(slurp(path("run/records.csv")), records);
}

TEST_F(CliTest, ManifestAloneReproducesRun) {
  ASSERT_EQ(run({"experiment", "--config", small_config(), "--out", path("a"), "--set", "replicates=4"}), 0);
  const Json m = Json::parse(slurp(path("a/manifest.json")));
  const auto echo = write("echo.json", m["config"].dump());
  ASSERT_EQ(run({"experiment", "--config", echo, "--out", path("b")}), 0) << err_.str();
  EXPECT_EQ(slurp(path("a/records.csv")), slurp(path("b/records.csv")));
  EXPECT_EQ(slurp(path("a/summary.json")), slurp(path("b/summary.json")));
}

TEST_F(CliTest, PositionalNameAndConflicts) {
  const auto cfg = small_config();
  EXPECT_EQ(run({"experiment", "varLn_decay", "--config", cfg, "--out", path("x"), "--set", "experiment=\"varLn_decay\""}), 0)
      << err_.str();
  EXPECT_EQ(run({"experiment", "eigen_trends", "--config", cfg, "--out", path("y")}), 1);
  EXPECT_EQ(run({"experiment", "--config", cfg, "--out", path("z"), "--set", "experiment=bogus"}), 1);
}

TEST_F(CliTest, WorkersFromEnvironment) {
  ::setenv(cli::kWorkersEnv, "3", 1);
  ASSERT_EQ(run({"experiment", "--config", small_config(), "--out", path("env")}), 0) << err_.str();
  EXPECT_EQ(Json::parse(slurp(path("env/manifest.json")))["config"]["workers"], 3);
  ::unsetenv(cli::kWorkersEnv);
}

TEST_F(CliTest, SimulateThenFit) {
  const auto cfg = small_config();
  ASSERT_EQ(run({"simulate", "--config", cfg, "--out", path("sim")}), 0) << err_.str();
  EXPECT_TRUE(fs::exists(path("sim/design_n15.csv")));
  EXPECT_TRUE(fs::exists(path("sim/y_n30.csv")));
  ASSERT_EQ(run({"fit", "--config", cfg, "--design", path("sim/design_n30.csv"), "--y", path("sim/y_n30.csv"), "--out",
                 path("fit")}),
            0)
      << err_.str();
  const Json fit = Json::parse(slurp(path("fit/fit.json")));
  for (const char* k : {"sigma2_hat", "alpha_hat", "criterion", "microergodic_hat", "n_evals", "at_alpha_inf",
                        "at_alpha_sup", "sigma2_clamped", "jitter_used"}) {
    EXPECT_TRUE(fit.contains(k)) << k;
  }
  EXPECT_EQ(fit["n"], 30);
  const Json m = Json::parse(slurp(path("fit/manifest.json")));
  EXPECT_EQ(m["inputs"].size(), 3u);
  // mismatched lengths are a validation error
  EXPECT_EQ(run({"fit", "--design", path("sim/design_n15.csv"), "--y", path("sim/y_n30.csv"), "--out", path("fit2")}), 1);
}

TEST_F(CliTest, RuntimeFailureExitsTwoAndStillWritesManifest) {
  const auto cfg = write("bad.json", R"({"regime": "fixed", "kernel": {"family": "gaussian"},
    "theta0": {"sigma2": 1, "alpha": 0.2}, "n_list": [300], "master_seed": 1, "chol_policy": "strict"})");
  EXPECT_EQ(run({"simulate", "--config", cfg, "--out", path("rt")}), 2);
  const Json m = Json::parse(slurp(path("rt/manifest.json")));
  EXPECT_EQ(m["exit_status"], 2);
  EXPECT_TRUE(m.contains("error"));
}

TEST_F(CliTest, EigensSubcommand) {
  const auto cfg = write("e.json", R"({"kernel": {"family": "exponential"}, "theta0": {"sigma2": 1, "alpha": 1},
    "n_list": [10, 20, 40]})");
  ASSERT_EQ(run({"eigens", "--config", cfg, "--out", path("eig")}), 0) << err_.str();
  const Json s = Json::parse(slurp(path("eig/summary.json")));
  EXPECT_EQ(s["experiment"], "eigen_trends");
  EXPECT_EQ(s["per_n"].size(), 3u);
}

TEST_F(CliTest, BinaryExitCodes) {
  const std::string tool = GPMLE_TOOL;
  EXPECT_EQ(WEXITSTATUS(std::system((tool + " selftest --out " + path("bin") + " > /dev/null").c_str())), 0);
  EXPECT_EQ(WEXITSTATUS(std::system((tool + " nonsense > /dev/null 2>&1").c_str())), 1);
}
