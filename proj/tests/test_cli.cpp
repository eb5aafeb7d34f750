#include "process.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using rtrack::testing::quote;
using rtrack::testing::run_command;
using rtrack::testing::TempDir;

namespace {

const std::string kCli = RTRACK_CLI_PATH;

rtrack::testing::ProcessResult cli(const std::string& args) { return run_command(quote(kCli) + " " + args); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = dir_.path() / "data";
    ASSERT_EQ(cli("--output-dir " + quote(data_.string()) + " synth --frames 60").exit_code, 0);
    seq_ = data_ / "synth";
  }
  std::string p(const fs::path& x) const { return quote(x.string()); }

  TempDir dir_;
  fs::path data_, seq_;
};

}  // namespace

TEST_F(CliTest, TrackThenEvalPerfectOracle) {
  const auto out = dir_.path() / "out";
  const auto t = cli("--output-dir " + p(out) + " track " + p(seq_));
  ASSERT_EQ(t.exit_code, 0);
  EXPECT_TRUE(fs::is_regular_file(out / "synth" / "all-moving-targets.txt"));
  const auto report = dir_.path() / "rep.json";
  const auto e = cli("eval " + p(out) + " " + p(seq_) + " --report " + p(report));
  ASSERT_EQ(e.exit_code, 0);
  EXPECT_NE(e.out.find("100.00"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(report));
  EXPECT_GE(j["metrics"]["HOTA"].get<double>(), 0.9999);
}

TEST_F(CliTest, GroundTruthCopiesScorePerfect) {
  const auto preds = dir_.path() / "gtcopy" / "synth";
  fs::create_directories(preds);
  fs::copy_file(seq_ / "gt.txt", preds / "all-moving-targets.txt");
  const auto e = cli("eval " + p(dir_.path() / "gtcopy") + " " + p(seq_));
  ASSERT_EQ(e.exit_code, 0);
  const auto row = e.out.substr(e.out.find("combined"));
  EXPECT_EQ(row.find("100.00"), row.find_first_of("0123456789"));
  std::istringstream cells(row.substr(8));
  int n = 0;
  for (std::string c; cells >> c; ++n) EXPECT_EQ(c, "100.00");
  EXPECT_EQ(n, 8);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(cli("").exit_code, 1);
  EXPECT_EQ(cli("track").exit_code, 1);
  EXPECT_EQ(cli("bogus-command").exit_code, 1);
  EXPECT_EQ(cli("track " + p(dir_.path() / "missing")).exit_code, 2);
  EXPECT_EQ(cli("track " + p(seq_) + " --backend nope").exit_code, 1);
  EXPECT_EQ(run_command("env -u REFTRACK_ENDPOINT " + quote(kCli) + " --output-dir " +
                        p(dir_.path() / "o") + " track " + p(seq_) + " --backend remote")
                .exit_code,
            1);
  fs::create_directories(dir_.path() / "empty");
  EXPECT_EQ(cli("eval " + p(dir_.path() / "empty") + " " + p(seq_)).exit_code, 2);
  EXPECT_EQ(cli("parse " + p(dir_.path() / "none.txt")).exit_code, 2);
  EXPECT_EQ(cli("--help").exit_code, 0);
}

TEST_F(CliTest, BackendFailureBeyondToleranceIsExit3) {
  const auto cache = dir_.path() / "cache" / "synth" / "all-moving-targets";
  fs::create_directories(cache);
  std::ofstream(cache / "000001.txt") << "<think>t</think><answer>[10,10,50,50]</answer>";
  const std::string base = "--output-dir " + p(dir_.path() / "o") + " track " + p(seq_) +
                           " --backend parser --cache-dir " + p(dir_.path() / "cache");
  EXPECT_EQ(cli(base).exit_code, 3);
  EXPECT_EQ(cli(base + " --max-failed-frames 1").exit_code, 0);
}

TEST_F(CliTest, UnreachableRemoteIsExit3) {
  const auto r = cli("--output-dir " + p(dir_.path() / "o") + " track " + p(seq_) +
                     " --backend remote --endpoint http://127.0.0.1:1 --retries 0 --timeout-ms 200");
  EXPECT_EQ(r.exit_code, 3);
}

TEST_F(CliTest, ConfigFileThenFlagsPrecedence) {
  const auto cfg = dir_.path() / "run.toml";
  std::ofstream(cfg) << "seed = 7\n[synth]\nframes = 7\ntargets = 2\n";
  const auto a = cli("--config " + p(cfg) + " --output-dir " + p(dir_.path() / "a") + " synth");
  ASSERT_EQ(a.exit_code, 0);
  EXPECT_NE(a.out.find("wrote 7 frames, 2 targets"), std::string::npos) << a.out;
  const auto b = cli("--config " + p(cfg) + " --output-dir " + p(dir_.path() / "b") + " synth --frames 9");
  ASSERT_EQ(b.exit_code, 0);
  EXPECT_NE(b.out.find("wrote 9 frames, 2 targets"), std::string::npos) << b.out;

  // The config's seed applies unless overridden on the command line.
  const auto c = cli("--seed 7 --output-dir " + p(dir_.path() / "c") + " synth --frames 7 --targets 2");
  ASSERT_EQ(c.exit_code, 0);
  EXPECT_EQ(slurp(dir_.path() / "a" / "synth" / "gt.txt"), slurp(dir_.path() / "c" / "synth" / "gt.txt"));
}

TEST_F(CliTest, UnknownConfigKeyRejected) {
  const auto cfg = dir_.path() / "bad.toml";
  std::ofstream(cfg) << "[synth]\nframez = 7\n";
  EXPECT_EQ(cli("--config " + p(cfg) + " synth").exit_code, 1);
}

TEST_F(CliTest, SameSeedRunsAreByteIdentical) {
  for (const char* run : {"r1", "r2"}) {
    const auto out = dir_.path() / run;
    ASSERT_EQ(cli("--seed 5 --output-dir " + p(out) + " track " + p(seq_) +
                  " --p-miss 0.2 --jitter 0.05 --fp-rate 0.5")
                  .exit_code,
              0);
  }
  const auto f1 = slurp(dir_.path() / "r1" / "synth" / "all-moving-targets.txt");
  EXPECT_FALSE(f1.empty());
  EXPECT_EQ(f1, slurp(dir_.path() / "r2" / "synth" / "all-moving-targets.txt"));

  const auto d1 = cli("--seed 9 gspo-demo --steps 30");
  const auto d2 = cli("--seed 9 gspo-demo --steps 30");
  EXPECT_EQ(d1.exit_code, 0);
  EXPECT_EQ(d1.out, d2.out);
}

TEST_F(CliTest, GspoDemoNoCasReportsBothBounds) {
  const auto rep = dir_.path() / "demo.json";
  const auto r = cli("gspo-demo --no-cas --steps 20 --report " + p(rep));
  ASSERT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(slurp(rep));
  EXPECT_FALSE(j["cas"].get<bool>());
  EXPECT_GT(j["probe"]["raw_max_abs_advantage"].get<double>(), 1e5);
  EXPECT_TRUE(j["probe"]["cas_within_bound"].get<bool>());
  EXPECT_NE(r.out.find("exceeds 1e5"), std::string::npos);
}

TEST_F(CliTest, RewardJsonLines) {
  const auto recs = dir_.path() / "c.jsonl";
  std::ofstream(recs) << R"({"sequence":"synth","frame":1,"completion":"<think>x</think><answer>[0,0,10,10]</answer>","length":170})"
                      << "\n\n"
                      << R"({"sequence":"synth","frame":2,"completion":"nothing"})" << "\n";
  const auto r = cli("reward " + p(recs) + " " + p(seq_) + " --phase 1");
  ASSERT_EQ(r.exit_code, 0);
  std::istringstream lines(r.out);
  std::string l1, l2;
  std::getline(lines, l1);
  std::getline(lines, l2);
  const auto a = nlohmann::json::parse(l1), b = nlohmann::json::parse(l2);
  EXPECT_EQ(a["r_format"], 1);
  EXPECT_EQ(a["ctr"], "pdr");
  EXPECT_EQ(a["r_len"], 1.0);
  EXPECT_EQ(b["r_format"], 0);

  std::ofstream(recs) << "{not json\n";
  EXPECT_EQ(cli("reward " + p(recs) + " " + p(seq_)).exit_code, 2);
}

TEST_F(CliTest, ParseDiagnostics) {
  const auto f = dir_.path() / "c.txt";
  std::ofstream(f) << "<think>t</think><answer>boxes: [10,10,5,5]</answer>";
  const auto r = cli("parse --json " + p(f));
  ASSERT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["r_format"], 0);
  EXPECT_EQ(j["dropped"], 1);
  EXPECT_FALSE(j["answer_is_pure"].get<bool>());
}
