#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "commands.hpp"
#include "communityfish/error.hpp"
#include "fixtures.hpp"
#include "run_config.hpp"

using namespace cfish::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kData = COMMUNITYFISH_DATA_DIR;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

json read_json(const fs::path& path) { return json::parse(slurp(path)); }

RunConfig toy_config(const fs::path& out) {
  RunConfig config;
  for (const auto& [key, value] : read_config_file(kData / "toy.cfg")) config.set(key, value);
  config.input = kData / "toy_corpus.jsonl";
  config.out = out;
  config.replicates = 30;
  return config;
}

int run(Command command, const RunConfig& config, std::string* errors = nullptr) {
  std::ostringstream log, err;
  const int code = run_command(command, config, log, err);
  if (errors) *errors = err.str();
  return code;
}

// Runs the executable through the shell; returns its exit status.
int run_process(const std::string& args, const fs::path& stderr_file) {
  const std::string cmd = std::string(COMMUNITYFISH_EXE) + " " + args + " 2> " + stderr_file.string() + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> csv_lines(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST(RunConfig, DefaultsAndOverrides) {
  RunConfig config;
  EXPECT_EQ(config.min_bigram_count, 30u);
  EXPECT_FALSE(config.strict_greater);
  EXPECT_EQ(config.replicates, 200u);
  EXPECT_EQ(config.se, SeMethod::bootstrap);
  config.set("min_bigram_count", "12");
  config.set("clustering", "leiden");
  config.set("dtm_convention", "bigram-match");
  config.set("anchor_low", "doc_a");
  EXPECT_EQ(config.min_bigram_count, 12u);
  EXPECT_EQ(config.clustering, cfish::ClusteringBackend::leiden);
  EXPECT_EQ(config.dtm, cfish::DtmConvention::bigram_match);
  EXPECT_EQ(config.fit_config().anchor_low, "doc_a");
}

TEST(RunConfig, UnknownKeyNamedInError) {
  RunConfig config;
  try {
    config.set("min_bigram", "3");
    FAIL();
  } catch (const cfish::InputError& e) {
    EXPECT_NE(std::string(e.what()).find("min_bigram"), std::string::npos);
  }
  try {
    config.set("tol", "fast");
    FAIL();
  } catch (const cfish::InputError& e) {
    EXPECT_NE(std::string(e.what()).find("tol"), std::string::npos);
  }
  EXPECT_THROW(config.set("clustering", "spectral"), cfish::InputError);
  EXPECT_THROW(config.set("level", "1.5"), cfish::InputError);
}

TEST(RunConfig, FileParsingAndHash) {
  fixtures::TempDir dir("cfg");
  std::ofstream(dir.path() / "a.cfg") << "# comment\nseed = 5\n\nmin_bigram_count=7  # trailing\n";
  const auto entries = read_config_file(dir.path() / "a.cfg");
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[1], (std::pair<std::string, std::string>{"min_bigram_count", "7"}));
  std::ofstream(dir.path() / "bad.cfg") << "just words\n";
  EXPECT_THROW(read_config_file(dir.path() / "bad.cfg"), cfish::InputError);
  try {
    read_config_file(dir.path() / "missing.cfg");
    FAIL();
  } catch (const cfish::InputError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.cfg"), std::string::npos);
  }

  RunConfig a, b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.set("seed", "43");
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Commands, CommunitiesWritesPartitionAndStats) {
  fixtures::TempDir dir("communities");
  const RunConfig config = toy_config(dir.path());
  ASSERT_EQ(run(Command::communities, config), 0);
  const auto lines = csv_lines(dir.path() / "communities.csv");
  ASSERT_GT(lines.size(), 2u);
  EXPECT_EQ(lines[0], "community_id,word");
  const json stats = read_json(dir.path() / "graph_stats.json");
  const int k = stats["K"];
  EXPECT_GT(k, 1);
  for (const auto& c : stats["communities"]) EXPECT_GE(c["size"].get<int>(), 2);
  EXPECT_GT(stats["modularity"].get<double>(), 0.0);
  const json manifest = read_json(dir.path() / "manifest.json");
  EXPECT_EQ(manifest["exit_status"], 0);
  EXPECT_EQ(manifest["K"], k);
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_EQ(manifest["config_hash"], config_hash(config));
}

TEST(Commands, ReproducibleOutputs) {
  fixtures::TempDir a("repro_a"), b("repro_b");
  RunConfig ca = toy_config(a.path()), cb = toy_config(b.path());
  ASSERT_EQ(run(Command::scale, ca), 0);
  ASSERT_EQ(run(Command::scale, cb), 0);
  for (const char* name : {"communities.csv", "positions.csv", "features.csv"}) {
    EXPECT_EQ(slurp(a.path() / name), slurp(b.path() / name)) << name;
  }
  json ma = read_json(a.path() / "manifest.json"), mb = read_json(b.path() / "manifest.json");
  ma["config"].erase("out");
  mb["config"].erase("out");
  EXPECT_EQ(ma["config"], mb["config"]);
}

TEST(Commands, ScaleWritesPositionsWithIntervalsAndMetadata) {
  fixtures::TempDir dir("scale");
  ASSERT_EQ(run(Command::scale, toy_config(dir.path())), 0);
  const auto lines = csv_lines(dir.path() / "positions.csv");
  ASSERT_EQ(lines.size(), 25u);
  EXPECT_EQ(lines[0], "doc_id,theta,se,ci_low,ci_high,alpha,party,year");
  EXPECT_EQ(lines[1].find(",,"), std::string::npos);
  EXPECT_EQ(csv_lines(dir.path() / "features.csv")[0], "feature,beta,psi");
  const json report = read_json(dir.path() / "fit_report.json");
  EXPECT_TRUE(report["converged"].get<bool>());
  EXPECT_TRUE(report.contains("dispersion"));
  EXPECT_TRUE(report.contains("runtime_seconds"));
  EXPECT_EQ(report["uncertainty"]["method"], "bootstrap");
}

TEST(Commands, NoBootstrapLeavesIntervalColumnsEmpty) {
  fixtures::TempDir dir("nobootstrap");
  RunConfig config = toy_config(dir.path());
  config.set("se", "none");
  ASSERT_EQ(run(Command::scale, config), 0);
  const auto lines = csv_lines(dir.path() / "positions.csv");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::istringstream row(lines[i]);
    std::vector<std::string> cells;
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    ASSERT_GE(cells.size(), 6u);
    EXPECT_FALSE(cells[1].empty());
    EXPECT_TRUE(cells[2].empty() && cells[3].empty() && cells[4].empty());
  }
}

TEST(Commands, BaselineUsesUnigramFeatures) {
  fixtures::TempDir dir("baseline");
  RunConfig config = toy_config(dir.path());
  config.set("baseline", "true");
  config.set("se", "analytic");
  ASSERT_EQ(run(Command::scale, config), 0);
  const json report = read_json(dir.path() / "fit_report.json");
  EXPECT_EQ(report["model"], "wordfish-unigram");
  EXPECT_FALSE(fs::exists(dir.path() / "communities.csv"));
  EXPECT_EQ(csv_lines(dir.path() / "features.csv")[1].rfind("com_", 0), std::string::npos);
}

TEST(Commands, CompareWritesTwoThetaColumns) {
  fixtures::TempDir dir("compare");
  ASSERT_EQ(run(Command::compare, toy_config(dir.path())), 0);
  const auto lines = csv_lines(dir.path() / "comparison.csv");
  EXPECT_EQ(lines[0], "doc_id,theta_community,theta_unigram,party,year");
  EXPECT_EQ(lines.size(), 25u);
  const json report = read_json(dir.path() / "report.json");
  EXPECT_LT(report["community"]["features"].get<int>(), report["unigram"]["features"].get<int>());
  EXPECT_TRUE(report["rank_correlation"].is_number());
}

TEST(Commands, SimulateDefaultSpecRecovers) {
  fixtures::TempDir dir("simulate");
  RunConfig config;
  for (const auto& [key, value] : read_config_file(kData / "simulate_default.cfg")) config.set(key, value);
  config.out = dir.path();
  config.replicates = 50;
  ASSERT_EQ(run(Command::simulate, config), 0);
  const json report = read_json(dir.path() / "report.json");
  EXPECT_GE(report["min_pearson"].get<double>(), 0.95);
  EXPECT_EQ(read_json(dir.path() / "manifest.json")["matrix"]["rows"], 25);
}

TEST(Commands, ThresholdAboveMaxBigramIsStageError) {
  fixtures::TempDir dir("empty");
  RunConfig config = toy_config(dir.path());
  config.set("min_bigram_count", "100000");
  std::string err;
  EXPECT_EQ(run(Command::communities, config, &err), 2);
  EXPECT_NE(err.find("no bigrams survive threshold"), std::string::npos);
  EXPECT_EQ(read_json(dir.path() / "manifest.json")["exit_status"], 2);
}

TEST(Commands, MissingInputIsIoError) {
  fixtures::TempDir dir("missing_input");
  RunConfig config = toy_config(dir.path());
  config.input = dir.path() / "nope.jsonl";
  EXPECT_EQ(run(Command::scale, config), 1);
}

TEST(Commands, EqualAnchorsAreAConfigError) {
  fixtures::TempDir dir("anchors");
  RunConfig config = toy_config(dir.path());
  config.set("anchor_low", "labour_1990");
  config.set("anchor_high", "labour_1990");
  EXPECT_EQ(run(Command::scale, config), 1);
}

TEST(Commands, SingleFeatureIsEstimationError) {
  fixtures::TempDir dir("estimation");
  std::ofstream(dir.path() / "tiny.jsonl") << "{\"text\":\"a a a b\"}\n{\"text\":\"a c\"}\n";
  RunConfig config;
  config.input = dir.path() / "tiny.jsonl";
  config.out = dir.path() / "out";
  config.set("baseline", "true");
  config.set("unigram_min_count", "3");
  std::string err;
  EXPECT_EQ(run(Command::scale, config, &err), 3);
  EXPECT_NE(err.find("need >= 2 features"), std::string::npos);
  EXPECT_EQ(read_json(config.out / "manifest.json")["exit_status"], 3);
}

TEST(Process, ExitCodesAndMessages) {
  fixtures::TempDir dir("process");
  const fs::path err = dir.path() / "stderr.txt";
  const std::string toy = "--config " + (kData / "toy.cfg").string() + " --set input=" + (kData / "toy_corpus.jsonl").string();

  EXPECT_EQ(run_process("--config " + (dir.path() / "absent.cfg").string() + " communities", err), 1);
  EXPECT_NE(slurp(err).find("absent.cfg"), std::string::npos);

  EXPECT_EQ(run_process(toy + " --out " + (dir.path() / "a").string() + " --min-bigram-count 99999 communities", err), 2);
  EXPECT_NE(slurp(err).find("no bigrams survive threshold"), std::string::npos);

  EXPECT_EQ(run_process(toy + " --set bogus_key=1 communities", err), 1);
  EXPECT_NE(slurp(err).find("bogus_key"), std::string::npos);

  // Flags win over the config file, which sets seed 7.
  EXPECT_EQ(run_process(toy + " --seed 11 --quiet --out " + (dir.path() / "b").string() + " communities", err), 0);
  EXPECT_EQ(read_json(dir.path() / "b" / "manifest.json")["seed"], 11);

  EXPECT_EQ(run_process(toy + " --out " + (dir.path() / "c").string() + " scale --no-bootstrap --baseline", err), 0);
  EXPECT_EQ(read_json(dir.path() / "c" / "fit_report.json")["uncertainty"]["method"], "none");
  EXPECT_EQ(read_json(dir.path() / "c" / "fit_report.json")["model"], "wordfish-unigram");

  EXPECT_EQ(run_process("frobnicate", err), 1);
}
