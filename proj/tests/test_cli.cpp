#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "arcnp/checkpoint.hpp"
#include "arcnp_cli/config.hpp"
#include "arcnp_cli/experiment.hpp"

namespace arcnp::cli {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("arcnp_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig resolve_text(const std::string& text) {
  return ExperimentConfig::resolve(parse_settings(text));
}

TEST(Config, ParsesKeyValueWithComments) {
  const auto s = parse_settings("# comment\nexperiment = eq-kl\n\nseed=7  # trailing\n");
  EXPECT_EQ(s.at("experiment").value, "eq-kl");
  EXPECT_EQ(s.at("seed").value, "7");
  EXPECT_EQ(s.at("seed").line, 4u);
}

TEST(Config, MalformedLineReportsLine) {
  try {
    parse_settings("experiment = eq-kl\nthis line is wrong\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Config, DuplicateKeyReportsFieldAndLine) {
  try {
    parse_settings("seed = 1\nexperiment = eq-kl\nseed = 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "seed");
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Config, BadValueReportsFieldAndLine) {
  try {
    resolve_text("experiment = eq-kl\neval_tasks = many\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "eval_tasks");
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Config, UnknownExperimentRejected) {
  EXPECT_THROW(resolve_text("experiment = nope\n"), ConfigError);
  EXPECT_THROW(resolve_text("seed = 1\n"), ConfigError);
}

TEST(Config, UnknownKeyRejected) {
  try {
    resolve_text("experiment = eq-kl\nlearning_rat = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "learning_rat");
  }
}

TEST(Config, MissingCheckpointRejected) {
  EXPECT_THROW(resolve_text("experiment = sawtooth-loglik\nmodel_source = load-checkpoint\n"),
               ConfigError);
  EXPECT_THROW(resolve_text("experiment = sawtooth-loglik\nmodel_source = load-checkpoint\n"
                            "checkpoint = /nonexistent/ck.json\n"),
               ConfigError);
}

TEST(Config, IdealOracleNeedsOracleProcess) {
  EXPECT_THROW(resolve_text("experiment = sawtooth-loglik\nmodel_source = ideal-oracle\n"),
               ConfigError);
  EXPECT_NO_THROW(resolve_text("experiment = eq-kl\nmodel_source = ideal-oracle\n"));
}

TEST(Config, OverridesParse) {
  const auto s = parse_overrides({"--eval-tasks", "8", "--seed=3"});
  EXPECT_EQ(s.at("eval_tasks").value, "8");
  EXPECT_EQ(s.at("seed").value, "3");
  EXPECT_THROW(parse_overrides({"--eval-tasks"}), ConfigError);
  EXPECT_THROW(parse_overrides({"stray"}), ConfigError);
}

TEST(Describe, ShowsDefaultedSeedAndPhases) {
  const std::string text = describe(resolve_text("experiment = eq-kl\n"));
  EXPECT_NE(text.find("seed: 0 (default)"), std::string::npos) << text;
  EXPECT_NE(text.find("phases:"), std::string::npos);
  EXPECT_NE(text.find("1. "), std::string::npos);
  const std::string explicit_seed = describe(resolve_text("experiment = eq-kl\nseed = 5\n"));
  EXPECT_NE(explicit_seed.find("seed: 5\n"), std::string::npos);
}

TEST(Run, EqKlRowsAndReproducibleFromManifest) {
  const fs::path dir = scratch("eqkl");
  Settings s = parse_settings("experiment = eq-kl\neval_tasks = 16\nseed = 3\n");
  s["out"] = {(dir / "a").string(), 0};
  std::ostringstream log;
  ASSERT_EQ(run_experiment(ExperimentConfig::resolve(s), log), 0) << log.str();

  const auto metrics = nlohmann::json::parse(slurp(dir / "a" / "metrics.json"));
  std::map<std::string, double> means;
  for (const auto& r : metrics["reports"]) means[r["model"]] = r["mean"];
  ASSERT_TRUE(means.count("exact") && means.count("diagonal-gp") && means.count("ar-ideal-cnp"));
  EXPECT_NEAR(means["exact"], 0.0, 1e-9);
  EXPECT_NEAR(means["ar-ideal-cnp"], 0.0, 1e-6);
  EXPECT_GT(means["diagonal-gp"], 0.0);

  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest["status"], "ok");
  EXPECT_EQ(manifest["seed"], 3);
  Settings again = load_settings(dir / "a" / "manifest.json");
  again["out"] = {(dir / "b").string(), 0};
  ASSERT_EQ(run_experiment(ExperimentConfig::resolve(again), log), 0);
  for (const char* f : {"metrics.csv", "metrics.json", "samples.jsonl"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  fs::remove_all(dir);
}

TEST(Run, MixtureEmitsDifferenceRow) {
  const fs::path dir = scratch("prop1");
  Settings s = parse_settings("experiment = mixture-prop1\neval_tasks = 2\nmc_samples = 200\n");
  s["out"] = {dir.string(), 0};
  std::ostringstream log;
  ASSERT_EQ(run_experiment(ExperimentConfig::resolve(s), log), 0) << log.str();
  const std::string csv = slurp(dir / "metrics.csv");
  EXPECT_NE(csv.find("ar-ideal-cnp,kl,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("ideal-gnp,kl,"), std::string::npos);
  EXPECT_NE(csv.find("ar-minus-gnp,kl-diff,"), std::string::npos);
  const auto metrics = nlohmann::json::parse(slurp(dir / "metrics.json"));
  for (const auto& r : metrics["reports"]) {
    if (r["model"] == "ar-minus-gnp") EXPECT_TRUE(r.contains("mc_standard_error"));
  }
  fs::remove_all(dir);
}

TEST(Run, FailureStillWritesManifestWithPhase) {
  const fs::path dir = scratch("fail");
  RngStream rng(1);
  const nn::Checkpoint ck{nn::CnpModel::initialized(nn::CnpConfig::tiny(), rng), {}};
  nn::save_checkpoint(ck, dir / "one_channel.json");
  Settings s = parse_settings("experiment = predprey\nmodel_source = load-checkpoint\n"
                              "eval_tasks = 2\n");
  s["checkpoint"] = {(dir / "one_channel.json").string(), 0};
  s["out"] = {(dir / "out").string(), 0};
  std::ostringstream log;
  EXPECT_NE(run_experiment(ExperimentConfig::resolve(s), log), 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["status"], "failed");
  EXPECT_EQ(manifest["phase"], "load-checkpoint");
  EXPECT_FALSE(fs::exists(dir / "out" / "metrics.csv"));
  fs::remove_all(dir);
}

TEST(Binary, UnknownExperimentExitsNonZeroWithUsage) {
  const fs::path dir = scratch("bin");
  std::ofstream(dir / "bad.cfg") << "experiment = not-an-experiment\n";
  const std::string cmd = std::string(ARCNP_TOOL_PATH) + " describe " +
                          (dir / "bad.cfg").string() + " > " + (dir / "out.txt").string() +
                          " 2>&1";
  const int status = std::system(cmd.c_str());
  EXPECT_NE(status, 0);
  const std::string out = slurp(dir / "out.txt");
  EXPECT_NE(out.find("config error"), std::string::npos) << out;
  EXPECT_NE(out.find("experiments:"), std::string::npos) << out;
  fs::remove_all(dir);
}

TEST(Binary, DescribeValidConfig) {
  const fs::path dir = scratch("bin_ok");
  std::ofstream(dir / "ok.cfg") << "experiment = smooth-samples\n";
  const std::string cmd = std::string(ARCNP_TOOL_PATH) + " describe " +
                          (dir / "ok.cfg").string() + " --grid-sizes 8,16 > " +
                          (dir / "out.txt").string();
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_NE(slurp(dir / "out.txt").find("grid_sizes = 8,16"), std::string::npos)
      << slurp(dir / "out.txt");
  fs::remove_all(dir);
}

}  // namespace
}  // namespace arcnp::cli
