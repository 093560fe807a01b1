#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "test_support.hpp"

namespace {

struct CliRun {
  int status = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(CVRR_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string worked_config() {
  const std::string path = ::testing::TempDir() + "/worked.json";
  std::ofstream(path) << R"({"process": {"gamma0": 0.417, "n": 5},
    "measurement_error": {"theta": 0.05, "eta": 0.28}})";
  return path;
}

}  // namespace

TEST(Cli, DesignFromConfig) {
  const CliRun r = run("--config " + worked_config() + " --format json design -d upper");
  ASSERT_EQ(r.status, 0);
  const auto doc = nlohmann::json::parse(r.out);
  ASSERT_EQ(doc.size(), 3u);
  EXPECT_NEAR(doc[0]["limit"].get<double>(), 0.5567, 5e-4);
  EXPECT_NEAR(doc[1]["limit"].get<double>(), 0.3821, 5e-4);
  EXPECT_NEAR(doc[2]["limit"].get<double>(), 0.2972, 5e-4);
}

TEST(Cli, CommandLineOverridesConfig) {
  const CliRun a = run("--config " + worked_config() + " design -d upper --eta 0");
  const CliRun b = run("design -d upper --gamma0 0.417 --theta 0.05");
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, IdentityErrorModelEqualsOmitted) {
  const CliRun a = run("evaluate --gamma0 0.1 -r 3,4 --tau 0.7 1.5");
  const CliRun b = run("evaluate --gamma0 0.1 -r 3,4 --tau 0.7 1.5 --theta 0 --eta 0 -B 1 -m 1");
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, SimulationIsRepeatableForSeed) {
  const std::string args = "simulate --gamma0 0.1 -r 2,3 --tau 0.6 --replications 3000";
  const CliRun a = run("--seed 7 " + args);
  const CliRun b = run("--seed 7 " + args);
  const CliRun c = run("--seed 8 " + args);
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
}

TEST(Cli, ZeroReplicationsIsUsageError) {
  EXPECT_EQ(run("simulate --gamma0 0.1 --replications 0").status, 2);
}

TEST(Cli, EmptyGridGivesHeaderOnly) {
  const CliRun r = run("sweep --tau");
  ASSERT_EQ(r.status, 0);
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 1u);
  EXPECT_EQ(ls[0].rfind("rule,direction,n,gamma0", 0), 0u);
}

TEST(Cli, UnattainableDesignExitsFour) {
  EXPECT_EQ(run("design -d lower --arl0 1e300").status, 4);
}

TEST(Cli, DomainErrorsExitTwo) {
  EXPECT_EQ(run("design --gamma0 0.6").status, 2);
  EXPECT_EQ(run("design --n 1").status, 2);
  EXPECT_EQ(run("design -r 4,3").status, 2);
  EXPECT_EQ(run("bogus").status, 2);
  EXPECT_EQ(run("").status, 2);
  EXPECT_EQ(run("monitor --data /nonexistent.csv").status, 2);
  EXPECT_EQ(run("design --gamma0 0.6 --force").status, 0);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run("--help").status, 0); }

TEST(Cli, SweepPresetShape) {
  const CliRun r = run("sweep --preset constants");
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(lines(r.out).size(), 1u + 36u);
}

TEST(Cli, SweepRecordsFailingRows) {
  const CliRun r = run("sweep -r 2,3 --gamma0 0.1 0.6 0.2 --tau 1.5");
  ASSERT_EQ(r.status, 0);
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[1].back(), ',');
  EXPECT_NE(ls[2].find("domain:"), std::string::npos);
  EXPECT_EQ(ls[3].back(), ',');
}

TEST(Cli, EmptyListsEverywhere) {
  EXPECT_EQ(lines(run("sweep -r").out).size(), 1u);
  EXPECT_EQ(lines(run("sweep --metric earl --range").out).size(), 1u);
  EXPECT_EQ(lines(run("evaluate --tau").out).size(), 1u);
  EXPECT_EQ(lines(run("density --gamma0").out).size(), 1u);
}

TEST(Cli, EarlCommand) {
  const CliRun r = run("--format json earl --gamma0 0.05 -r 3,4 --range decreasing 1:2");
  ASSERT_EQ(r.status, 0);
  const auto doc = nlohmann::json::parse(r.out);
  ASSERT_EQ(doc.size(), 2u);
  EXPECT_EQ(doc[0]["direction"], "lower");
  EXPECT_EQ(doc[1]["direction"], "upper");
}

TEST(Cli, DensityGrid) {
  const CliRun r = run("density --gamma0 0.05 0.1 0.2 --points 50");
  ASSERT_EQ(r.status, 0);
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 1u + 150u);
  EXPECT_EQ(ls[0], "n,gamma0,x,pdf,cdf");
}

TEST(Cli, MonitorWorkedExample) {
  const std::string data = cvrr::testing::data_path("phase2.csv");
  const CliRun r = run("--config " + worked_config() + " --format json monitor --data " + data +
                    " -r 2,3 -r 3,4 -r 4,5 --shewhart");
  ASSERT_EQ(r.status, 0);
  const auto doc = nlohmann::json::parse(r.out);
  const auto& summary = doc["summary"];
  ASSERT_EQ(summary.size(), 4u);
  EXPECT_EQ(summary[0]["first_signal"], 13);
  EXPECT_EQ(summary[0]["window_start"], 12);
  EXPECT_EQ(summary[1]["first_signal"], 13);
  EXPECT_EQ(summary[2]["first_signal"], 14);
  EXPECT_TRUE(summary[3]["first_signal"].is_null());
  EXPECT_EQ(doc["trace"].size(), 80u);
}

TEST(Cli, MalformedDataReportsLine) {
  const std::string path = ::testing::TempDir() + "/bad_phase2.csv";
  std::ofstream(path) << "index,mean,std\n1,900,400\n2,oops,3\n";
  const std::string cmd = std::string(CVRR_CLI) + " monitor --data " + path + " --limit 0.5 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string text;
  std::array<char, 512> buf;
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) text.append(buf.data(), got);
  const int raw = pclose(pipe);
  EXPECT_EQ(WEXITSTATUS(raw), 2);
  EXPECT_NE(text.find("line 3"), std::string::npos) << text;
}

TEST(Cli, OutputFile) {
  const std::string path = ::testing::TempDir() + "/design_out.csv";
  std::remove(path.c_str());
  const CliRun r = run("-o " + path + " design -r 2,3 -d upper");
  ASSERT_EQ(r.status, 0);
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_NE(header.find("limit"), std::string::npos);
}
