#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mitra/cli.hpp"
#include "mitra/corpus.hpp"

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int rc;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mitra");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = mitra::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {rc, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mitra-unit-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    ASSERT_EQ(cli({"gen-fixtures", "--out", dir_.string(), "--analyses", "3"}).rc, 0);
    config_ = (dir_ / "config.json").string();
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
  std::string config_;
};

}  // namespace

TEST(CliUsage, NoArgumentsPrintsUsage) {
  const auto r = cli({});
  EXPECT_NE(r.rc, 0);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_NE(r.err.find("build-index"), std::string::npos);
}

TEST(CliUsage, UnknownSubcommandAndMissingArgument) {
  EXPECT_NE(cli({"frobnicate"}).rc, 0);
  const auto r = cli({"ingest"});
  EXPECT_NE(r.rc, 0);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST_F(CliTest, IngestBuildEval) {
  const auto ingest = cli({"--config", config_, "ingest", (dir_ / "ingest.jsonl").string()});
  ASSERT_EQ(ingest.rc, 0) << ingest.err;
  EXPECT_NE(ingest.out.find("3 analyses"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "corpus.jsonl"));

  // A second ingest of the same file is all stale.
  const auto again = cli({"--config", config_, "ingest", (dir_ / "ingest.jsonl").string()});
  EXPECT_EQ(again.rc, 0);
  EXPECT_NE(again.out.find("skipped 6 stale"), std::string::npos) << again.out;

  ASSERT_EQ(cli({"--config", config_, "build-index"}).rc, 0);
  EXPECT_TRUE(fs::exists(dir_ / "index" / "manifest.json"));

  const auto report = (dir_ / "report.json").string();
  const auto eval = cli({"--config", config_, "eval", (dir_ / "gold.jsonl").string(), "--report", report});
  ASSERT_EQ(eval.rc, 0) << eval.err;
  EXPECT_NE(eval.out.find("Retrieval completeness"), std::string::npos);
  EXPECT_NE(eval.out.find("Ranking quality"), std::string::npos);
  std::ifstream in(report);
  EXPECT_EQ(nlohmann::json::parse(in).at("kind"), "metrics_report");
}

TEST_F(CliTest, KOverridesAreValidated) {
  ASSERT_EQ(cli({"--config", config_, "ingest", (dir_ / "ingest.jsonl").string()}).rc, 0);
  const auto bad = cli({"--config", config_, "--k-retrieve", "3", "--k-final", "4", "build-index"});
  EXPECT_NE(bad.rc, 0);
  EXPECT_NE(bad.err.find("invalid_argument"), std::string::npos);
}

TEST_F(CliTest, ConfigFromEnvironment) {
  ::setenv("MITRA_CONFIG", config_.c_str(), 1);
  const auto r = cli({"ingest", (dir_ / "ingest.jsonl").string()});
  ::unsetenv("MITRA_CONFIG");
  EXPECT_EQ(r.rc, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "corpus.jsonl"));
}

TEST_F(CliTest, ServeWithoutIndexFails) {
  ASSERT_EQ(cli({"--config", config_, "ingest", (dir_ / "ingest.jsonl").string()}).rc, 0);
  const auto r = cli({"--config", config_, "serve", "--listen", "127.0.0.1:0"});
  EXPECT_NE(r.rc, 0);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(CliTest, ServeAndThinClient) {
  ASSERT_EQ(cli({"--config", config_, "ingest", (dir_ / "ingest.jsonl").string()}).rc, 0);
  ASSERT_EQ(cli({"--config", config_, "build-index"}).rc, 0);
  const auto port_file = dir_ / "port";
  CliRun served{};
  std::thread server([&] {
    served = cli({"--config", config_, "serve", "--listen", "127.0.0.1:0", "--port-file", port_file.string()});
  });
  int port = 0;
  for (int i = 0; i < 500 && port == 0; ++i) {
    std::ifstream in(port_file);
    if (!(in >> port)) {
      port = 0;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  ASSERT_NE(port, 0);
  const std::string url = "http://127.0.0.1:" + std::to_string(port);
  const auto first = cli({"query", "--server", url, "--session", "new", "--text", "detector calibration"});
  EXPECT_EQ(first.rc, 0) << first.err;
  EXPECT_NE(first.out.find("confirmation_request"), std::string::npos);
  const auto id = first.out.substr(8, 32);
  const auto second = cli({"query", "--server", url, "--session", id, "--accept", "--text", "what was measured"});
  EXPECT_EQ(second.rc, 0) << second.err;
  EXPECT_NE(second.out.find("\"kind\": \"answer\""), std::string::npos);
  const auto bad = cli({"query", "--server", url, "--session", "missing", "--text", "x"});
  EXPECT_NE(bad.rc, 0);
  EXPECT_NE(bad.err.find("unknown_session"), std::string::npos);

  mitra::request_cli_shutdown();
  server.join();
  EXPECT_EQ(served.rc, 0);
}
