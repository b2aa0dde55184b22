#include "lsad/checkpoint.hpp"
#include "lsad/model.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(LSAD_BIN) + " " + args + " > /dev/null 2> cli_err.txt";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lsad_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    fs::current_path(dir_);
  }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateThenReplayWritesExports) {
  ASSERT_EQ(run("simulate --nodes 40 --periods 6 --seed 3 --out sim"), 0);
  ASSERT_TRUE(fs::exists("sim/events.csv"));
  ASSERT_TRUE(fs::exists("sim/roster.txt"));
  ASSERT_EQ(run("replay --events sim/events.csv --roster sim/roster.txt --truth sim/sim.json "
                "--sampling all --threshold -2 --out run --edge-scores"),
            0);
  EXPECT_EQ(first_line("run/alarms.tsv"), "period\tkind\tn1\tn2\tn3\tn4\tlog_score\trank");
  EXPECT_EQ(first_line("run/metrics.tsv"),
            "period\tcorr_all\tcorr_never\tauc_fit\tauc_true\tll_fit\tll_true");
  EXPECT_EQ(first_line("run/edge_scores.tsv"), "period\tsrc\tdst\tlog_score\tprob");
  EXPECT_TRUE(fs::exists("run/periods.tsv"));
}

TEST_F(Cli, ResumeMatchesUninterruptedRun) {
  ASSERT_EQ(run("simulate --nodes 40 --periods 6 --seed 4 --out sim"), 0);
  const std::string common =
      "--events sim/events.csv --roster sim/roster.txt --sampling proportion:0.3 --threshold -2 ";
  ASSERT_EQ(run("replay " + common + "--out full --checkpoint full.ckpt"), 0);
  ASSERT_EQ(run("replay " + common + "--out part --periods 3 --checkpoint part.ckpt"), 0);
  ASSERT_EQ(run("replay " + common + "--out part --resume part.ckpt --checkpoint part.ckpt"), 0);
  EXPECT_EQ(slurp("full/alarms.tsv"), slurp("part/alarms.tsv"));
  EXPECT_EQ(lsad::checkpoint_serialize(lsad::checkpoint_load("full.ckpt")),
            lsad::checkpoint_serialize(lsad::checkpoint_load("part.ckpt")));
}

TEST_F(Cli, FitOnEmptyStreamKeepsPriors) {
  std::ofstream("events.csv") << "time,src,dst\n";
  std::ofstream("roster.txt") << "a\nb\nc\n";
  ASSERT_EQ(run("fit --events events.csv --roster roster.txt --periods 1 --out post.json"), 0);
  const auto j = nlohmann::json::parse(slurp("post.json"));
  const lsad::ParamState s = lsad::param_state_from_json(j.at("state"));
  const lsad::ParamState prior = lsad::init_priors(lsad::ModelConfig{}, 3, 3);
  EXPECT_EQ(s.mu, prior.mu);
  EXPECT_EQ(s.alpha, prior.alpha);
}

TEST_F(Cli, ErrorsAreMachineReadable) {
  EXPECT_EQ(run("replay --out x --bogus-flag"), 2);
  EXPECT_NE(slurp("cli_err.txt").find("\"status\":\"error\""), std::string::npos);
  std::ofstream("bad.csv") << "1,a,b\nxx\nyy\nzz\n";
  EXPECT_EQ(run("replay --events bad.csv --out y"), 3);
  EXPECT_NE(slurp("cli_err.txt").find("\"kind\":\"ingest\""), std::string::npos);
  std::ofstream("junk.ckpt") << "LSADCKPT 1 0000000000000000\n{}";
  std::ofstream("ok.csv") << "1,a,b\n";
  EXPECT_EQ(run("replay --events ok.csv --out z --resume junk.ckpt"), 4);
}

TEST_F(Cli, EvaluateWritesRocAndHistogram) {
  std::ofstream("s.tsv") << "score\tlabel\n0.1\t0\n0.4\t1\n0.35\t0\n0.8\t1\n";
  ASSERT_EQ(run("evaluate --scores s.tsv --out ev --bins 4"), 0);
  EXPECT_EQ(first_line("ev/roc.tsv"), "threshold\tfpr\ttpr");
  EXPECT_EQ(first_line("ev/histogram.tsv"), "bin_lo\tbin_hi\tnegatives\tpositives");
}
