#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Invocation {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("pepforge_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  Invocation pep(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(PEP_BINARY) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Invocation r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path dir_;
};

std::string gradient_scenario(int N, double h, const std::string& rep, double R = 1.0) {
  json j;
  j["method"] = {{"type", "gradient"}, {"N", N}, {"h", h}, {"R", R}};
  j["family"] = {{"name", "smooth-convex"}, {"L", 1.0}};
  j["representation"] = rep;
  return j.dump();
}

TEST_F(Cli, SolveTenStepsTight) {
  const fs::path rec = dir_ / "rec.json";
  const Invocation r = pep("solve " + write("s.json", gradient_scenario(10, 1.0, "tight")).string() + " --out " + rec.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(slurp(rec));
  EXPECT_EQ(j["schema"], "pep-forge result v1");
  EXPECT_EQ(j["status"], "optimal");
  EXPECT_EQ(j["certification"], "certified-tight");
  EXPECT_NEAR(j["value"].get<double>(), 1.0 / 42.0, 1e-6);
  ASSERT_TRUE(j["instance"].is_string());
  EXPECT_TRUE(fs::exists(j["instance"].get<std::string>()));

  const Invocation v = pep("verify " + rec.string());
  ASSERT_EQ(v.code, 0) << v.err;
  EXPECT_NE(v.out.find("certification: certified-tight"), std::string::npos) << v.out;
}

TEST_F(Cli, RelaxedAboveTightAndNotCertified) {
  const fs::path tight = dir_ / "t.json", relaxed = dir_ / "r.json";
  ASSERT_EQ(pep("solve " + write("a.json", gradient_scenario(10, 1.0, "tight")).string() + " --out " + tight.string()).code, 0);
  ASSERT_EQ(pep("solve " + write("b.json", gradient_scenario(10, 1.0, "relaxed")).string() + " --out " + relaxed.string()).code, 0);
  const double vt = json::parse(slurp(tight))["value"].get<double>();
  const double vr = json::parse(slurp(relaxed))["value"].get<double>();
  EXPECT_GT(vr, vt);
  EXPECT_EQ(json::parse(slurp(relaxed))["certification"], "upper-bound-only");
  const Invocation v = pep("verify " + relaxed.string());
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find("certification: upper-bound-only"), std::string::npos) << v.out;
}

TEST_F(Cli, ZeroStepsIsHalfL) {
  const Invocation r = pep("solve " + write("s.json", gradient_scenario(0, 1.0, "tight")).string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(json::parse(r.out)["value"].get<double>(), 0.5, 1e-7);
}

TEST_F(Cli, RadiusDoublingQuadruplesValue) {
  const Invocation a = pep("solve " + write("a.json", gradient_scenario(3, 1.4, "tight", 1.0)).string());
  const Invocation b = pep("solve " + write("b.json", gradient_scenario(3, 1.4, "tight", 2.0)).string());
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  const double va = json::parse(a.out)["value"].get<double>(), vb = json::parse(b.out)["value"].get<double>();
  EXPECT_NEAR(vb, 4.0 * va, 1e-6 * 4.0 * va);
}

TEST_F(Cli, SolveIsByteDeterministic) {
  const fs::path s = write("s.json", gradient_scenario(5, 1.7, "tight"));
  const Invocation a = pep("solve " + s.string());
  const Invocation b = pep("solve " + s.string());
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST_F(Cli, SweepIndependentOfJobs) {
  json j = json::parse(gradient_scenario(4, 1.0, "both"));
  j["method"].erase("h");
  j["sweep"] = {{"axis", "h"}, {"from", 0.2}, {"to", 1.8}, {"step", 0.4}};
  const fs::path s = write("s.json", j.dump());
  const fs::path c1 = dir_ / "one.csv", c3 = dir_ / "three.csv", c1b = dir_ / "again.csv";
  ASSERT_EQ(pep("sweep " + s.string() + " --jobs 1 --out " + c1.string()).code, 0);
  ASSERT_EQ(pep("sweep " + s.string() + " --jobs 3 --out " + c3.string()).code, 0);
  ASSERT_EQ(pep("sweep " + s.string() + " --jobs 1 --out " + c1b.string()).code, 0);
  const std::string csv = slurp(c1);
  EXPECT_EQ(csv, slurp(c3));
  EXPECT_EQ(csv, slurp(c1b));
  EXPECT_EQ(csv.rfind("# pep-forge schema v1\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2 + 5);

  const json summary = json::parse(slurp(c1.string() + ".summary.json"));
  EXPECT_EQ(summary["axis"], "h");
}

TEST_F(Cli, SweepRowsRespectClassicalBound) {
  json j = json::parse(gradient_scenario(3, 1.0, "tight"));
  j["method"].erase("h");
  j["sweep"] = {{"axis", "h"}, {"from", 0.1}, {"to", 1.9}, {"step", 0.3}};
  const fs::path csv = dir_ / "out.csv";
  ASSERT_EQ(pep("sweep " + write("s.json", j.dump()).string() + " --out " + csv.string()).code, 0);
  std::istringstream in(slurp(csv));
  std::string line, header;
  std::getline(in, line);
  std::getline(in, header);
  std::vector<std::string> cols;
  {
    std::istringstream hs(header);
    for (std::string c; std::getline(hs, c, ',');) cols.push_back(c);
  }
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(cols.begin(), cols.end(), name) - cols.begin());
  };
  const std::size_t ib = col("classical_bound"), it = col("tight_value");
  ASSERT_LT(ib, cols.size());
  ASSERT_LT(it, cols.size());
  int rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) f.push_back(c);
    EXPECT_LE(std::stod(f[it]), std::stod(f[ib]) + 1e-6) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 7);
}

TEST_F(Cli, RegionWitnessCells) {
  json j;
  j["method"] = {{"type", "region"}};
  j["sweep"] = {{"axis", "region"}, {"from", 1.0}, {"to", 1.5}, {"step", 0.5},
                {"f_from", 1.0}, {"f_to", 1.2}, {"f_step", 0.05}};
  const Invocation r = pep("region " + write("r.json", j.dump()).string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("1.5,1.05,1,0"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("1.5,1.2,1,1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("1,1,1,1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("1,1.05,0,0"), std::string::npos) << r.out;
}

TEST_F(Cli, ExportSdp) {
  const Invocation r = pep("export-sdp " + write("s.json", gradient_scenario(1, 1.0, "tight")).string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("= mDIM"), std::string::npos);
  EXPECT_NE(r.out.find("3 -6 -7 = bLOCKsTRUCT"), std::string::npos) << r.out;
}

TEST_F(Cli, UnknownKeyNamesField) {
  json j = json::parse(gradient_scenario(1, 1.0, "tight"));
  j["method"]["steps_size"] = 1.0;
  const Invocation r = pep("solve " + write("s.json", j.dump()).string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("method.steps_size"), std::string::npos) << r.err;
}

TEST_F(Cli, IllTypedValueNamesField) {
  json j = json::parse(gradient_scenario(1, 1.0, "tight"));
  j["family"]["L"] = "one";
  const Invocation r = pep("solve " + write("s.json", j.dump()).string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("family.L"), std::string::npos) << r.err;
}

TEST_F(Cli, SyntaxErrorReportsLine) {
  const Invocation r = pep("solve " + write("s.json", "{\n  \"method\": {\"type\": \"gradient\",\n  oops\n}\n").string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(Cli, VerifyWithoutInstanceFails) {
  const Invocation r = pep("verify " + (dir_ / "missing.json").string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("cannot open"), std::string::npos);
}

TEST_F(Cli, BadFlagRejected) {
  EXPECT_NE(pep("solve x.json --tol-gap -1").code, 0);
  EXPECT_NE(pep("frobnicate x.json").code, 0);
}

TEST_F(Cli, DgdCertificationAttempt) {
  const fs::path rec = dir_ / "dgd.json";
  const Invocation r = pep("solve " + std::string(PEPFORGE_SCENARIO_DIR) + "/dgd_single.json --out " + rec.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(slurp(rec));
  EXPECT_EQ(j["metadata"]["criterion"], "average-function-gap-at-agent-mean");
  ASSERT_TRUE(j.contains("verification"));
  EXPECT_TRUE(j["verification"].contains("network"));
  const Invocation v = pep("verify " + rec.string());
  EXPECT_EQ(v.code, 0) << v.err;
  EXPECT_NE(v.out.find("network matrix:"), std::string::npos) << v.out;
  if (j["certification"] == "certified-tight")
    EXPECT_NE(v.out.find("spectral bound exact at lambda = 0.5"), std::string::npos);
}

}  // namespace
