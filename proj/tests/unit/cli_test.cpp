#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using causalreach::cli::kExitError;
using causalreach::cli::kExitInconclusive;
using causalreach::cli::kExitOk;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = causalreach::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("causalreach_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    unsetenv("CAUSALREACH_SEED");
  }
  void TearDown() override {
    fs::remove_all(dir_);
    unsetenv("CAUSALREACH_SEED");
  }
  std::string out(const std::string& sub = "a") const { return (dir_ / sub).string(); }
  std::string slurp(const fs::path& p) const {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, RegistryListNamesEveryEntry) {
  const auto r = run({"registry", "list"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["result"]["entries"].size(), 8u);
  EXPECT_TRUE(j.contains("config_digest"));
}

TEST_F(CliTest, TsepReportIsByteIdenticalAcrossRuns) {
  const std::vector<std::string> base = {"-m", "minkowski2", "tsep", "--from", "0,0", "--to", "1,0.6"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", out("a")});
  b.insert(b.end(), {"--out", out("b"), "--threads", "2"});
  const auto ra = run(a), rb = run(b);
  ASSERT_EQ(ra.code, kExitOk) << ra.err;
  ASSERT_EQ(rb.code, kExitOk) << rb.err;
  const json ja = json::parse(ra.out), jb = json::parse(rb.out);
  EXPECT_EQ(ja["result"].dump(), jb["result"].dump());
  EXPECT_NEAR(ja["result"]["estimate"]["value"].get<double>(), 0.8, 0.016);
  EXPECT_TRUE(ja["result"]["estimate"]["reached"].get<bool>());
  EXPECT_EQ(ja["config_digest"].get<std::string>().size(), 16u);
  const auto again = run(a);
  EXPECT_EQ(again.out, ra.out);
  EXPECT_EQ(slurp(fs::path(out("a")) / "tsep_report.json"), ra.out);
  EXPECT_TRUE(fs::exists(fs::path(out("a")) / "tsep_curve.csv"));
}

TEST_F(CliTest, StrictExitsTwoWhenInconclusive) {
  const std::vector<std::string> args = {"-m", "minkowski2", "--out", out(), "tsep",
                                         "--from", "0,0", "--to", "0.5,1"};
  const auto loose = run(args);
  EXPECT_EQ(loose.code, kExitOk) << loose.err;
  EXPECT_TRUE(json::parse(loose.out)["inconclusive"].get<bool>());
  auto strict = args;
  strict.insert(strict.begin(), "--strict");
  EXPECT_EQ(run(strict).code, kExitInconclusive);
}

TEST_F(CliTest, ErrorsExitOne) {
  EXPECT_EQ(run({"nonsense"}).code, kExitError);
  EXPECT_EQ(run({"-m", "nowhere", "--out", out(), "ctc"}).code, kExitError);
  const auto bad_point = run({"-m", "heisenberg", "--out", out(), "tsep", "--from", "0,0", "--to", "1,0,0"});
  EXPECT_EQ(bad_point.code, kExitError);
  EXPECT_NE(bad_point.err.find("error"), std::string::npos);
  EXPECT_EQ(run({"-m", "minkowski2", "--format", "xml", "registry", "list"}).code, kExitError);
}

TEST_F(CliTest, SeedFlagOverridesEnvironment) {
  setenv("CAUSALREACH_SEED", "7", 1);
  const auto env = run({"-m", "heisenberg", "--out", out(), "classify", "--point", "0,0,0",
                        "--vector", "1,0.5"});
  ASSERT_EQ(env.code, kExitOk) << env.err;
  EXPECT_EQ(json::parse(env.out)["run_config"]["seed"].get<std::uint64_t>(), 7u);
  const auto flag = run({"-m", "heisenberg", "--seed", "11", "--out", out(), "classify", "--point",
                         "0,0,0", "--vector", "1,0.5"});
  EXPECT_EQ(json::parse(flag.out)["run_config"]["seed"].get<std::uint64_t>(), 11u);
  EXPECT_NE(json::parse(env.out)["config_digest"], json::parse(flag.out)["config_digest"]);
  setenv("CAUSALREACH_SEED", "x", 1);
  EXPECT_EQ(run({"registry", "list"}).code, kExitError);
}

TEST_F(CliTest, ClassifyReportsTheCharacter) {
  const auto r = run({"-m", "heisenberg", "--out", out(), "classify", "--point", "0,0,0",
                      "--vector", "1,0.5"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(json::parse(r.out)["result"]["character"], "timelike");
  const auto s = run({"-m", "heisenberg", "--out", out(), "classify", "--point", "0,0,0",
                      "--vector", "0.5,1"});
  EXPECT_EQ(json::parse(s.out)["result"]["character"], "spacelike");
}

TEST_F(CliTest, ReachWritesGridFiles) {
  const auto r = run({"-m", "minkowski2", "--samples", "500", "--resolution", "16", "--out", out(),
                      "reach", "--point", "0,0"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const fs::path d(out());
  EXPECT_TRUE(fs::exists(d / "reach_report.json"));
  EXPECT_TRUE(fs::exists(d / "reach.json"));
  EXPECT_TRUE(fs::exists(d / "reach.csv"));
  bool pgm = false;
  for (const auto& f : fs::directory_iterator(d))
    if (f.path().extension() == ".pgm") {
      pgm = true;
      EXPECT_EQ(slurp(f.path()).substr(0, 3), "P2\n");
    }
  EXPECT_TRUE(pgm);
}

TEST_F(CliTest, CsvFormat) {
  const auto r = run({"-m", "minkowski2", "--format", "csv", "--out", out(), "classify", "--point",
                      "0,0", "--vector", "1,0.2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("key,value"), std::string::npos);
  EXPECT_TRUE(fs::exists(fs::path(out()) / "classify_report.csv"));
}

TEST_F(CliTest, ManifoldFile) {
  const auto r = run({"--manifold-file", std::string(CAUSALREACH_TEST_DATA) + "/heisenberg.json",
                      "--out", out(), "classify", "--point", "0,0,0", "--vector", "1,0"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(json::parse(r.out)["result"]["character"], "timelike");
}

TEST_F(CliTest, CtcOnTheBoostQuotient) {
  const auto r = run({"-m", "heisenberg_boost", "--samples", "200", "--out", out(), "ctc"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json j = json::parse(r.out);
  EXPECT_FALSE(j["inconclusive"].get<bool>());
  EXPECT_TRUE(j["result"]["found"].get<bool>());
}
