#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tlreg/commands.hpp"
#include "tlreg/config.hpp"
#include "tlreg/errors.hpp"

namespace tlreg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tlreg-cli-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path path = dir / "config.json";
  std::ofstream(path) << j.dump(2);
  return path;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TLREG_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json minimal_config() {
  return {{"operator", {{"kind", "poisson"}, {"d", 1}, {"n", 32}}},
          {"admissible", {{"b", 1.0}, {"psi", 0.1}}},
          {"data", {{"kind", "given"}, {"y_d", 0.0}}}};
}

TEST(Config, PresetsRoundTrip) {
  for (const char* name : {"interior-attainable-poisson-1d", "clipped-fredholm-1d", "binding-state-poisson-2d"}) {
    const RunConfig c = testing::preset(name);
    EXPECT_EQ(parse_config(to_json(c)), c) << name;
    EXPECT_EQ(to_json(parse_config(to_json(c))), to_json(c)) << name;
  }
}

TEST(Config, ErrorsNameTheField) {
  const auto expect_field = [](const json& j, const std::string& field) {
    try {
      parse_config(j);
      FAIL() << field;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kConfigError);
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  json j = minimal_config();
  j["admissible"]["psi"] = {{"file", "/nonexistent/psi.json"}};
  expect_field(j, "admissible.psi.file");
  j = minimal_config();
  j["data"]["y_d"] = {1.0, 2.0};
  expect_field(j, "data.y_d");
  j = minimal_config();
  j["admissible"]["lambda"] = -1.0;
  expect_field(j, "admissible.lambda");
  j = minimal_config();
  j["admissible"]["bogus"] = 1;
  expect_field(j, "admissible.bogus");
  j = minimal_config();
  j["experiment"] = {{"kind", "sweep-alpha"}, {"alphas", {1e-1, 0.0}}};
  expect_field(j, "experiment.alphas[1]");
  j = minimal_config();
  j["operator"]["kernel"] = {{"type", "wavelet"}};
  expect_field(j, "operator.kernel.type");
}

TEST(Config, FileBackedFunctions) {
  const fs::path dir = scratch("files");
  std::ofstream(dir / "b.json") << json(std::vector<double>(8, 0.5)).dump();
  json j = minimal_config();
  j["operator"]["n"] = 8;
  j["admissible"]["b"] = {{"file", "b.json"}};
  const RunConfig c = parse_config(j, dir);
  const BuiltSetting s = build_setting(c);
  EXPECT_EQ(s.set.box().upper().values(), Eigen::VectorXd::Constant(8, 0.5));
  EXPECT_EQ(parse_config(to_json(c)), c);
}

TEST(Commands, MinimalSolveGivesZero) {
  RunConfig c = parse_config(minimal_config());
  c.out_dir = scratch("solve-minimal");
  const RunReport r = cmd_solve(c);
  ASSERT_EQ(r.exit_code, kExitOk) << r.error;
  for (const auto& v : r.summary.at("u")) EXPECT_EQ(v.get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(c.out_dir / "report.json"));
  EXPECT_EQ(r.manifest, std::vector<std::string>{"report.json"});
}

TEST(Commands, LambdaBeyondSlaterCapIsInfeasible) {
  json j = minimal_config();
  j["admissible"]["slater_point"] = 0.5;
  j["admissible"]["psi"] = 0.1;
  j["admissible"]["lambda"] = 1.0;
  RunConfig c = parse_config(j);
  c.out_dir = scratch("solve-cap");
  EXPECT_EQ(cmd_solve(c).exit_code, kExitInfeasible);
}

TEST(Commands, ContinuityWithEqualPair) {
  json j = minimal_config();
  j["experiment"] = {{"kind", "continuity"}, {"pairs", {{1e-2, 1e-2}}}};
  RunConfig c = parse_config(j);
  c.out_dir = scratch("verify-continuity");
  const RunReport r = cmd_verify(c);
  EXPECT_EQ(r.exit_code, kExitOk) << r.error;
  ASSERT_EQ(r.checks.size(), 1u);
  EXPECT_TRUE(r.checks[0].passed);
}

TEST(Commands, ManufactureReportsOptimalAlpha) {
  // A constant source with ||w|| = 2 exactly and a residual of 0.01.
  json j = minimal_config();
  const int n = 32;
  j["admissible"]["psi"] = "inf";
  j["data"] = {{"kind", "manufactured"},
               {"w", 2.0 / std::sqrt(n / (n + 1.0))},
               {"attainable", false},
               {"residual", 0.01}};
  RunConfig c = parse_config(j);
  c.out_dir = scratch("manufacture-alpha");
  const RunReport r = cmd_manufacture(c);
  ASSERT_EQ(r.exit_code, kExitOk) << r.error;
  EXPECT_NEAR(r.summary.at("alpha_star").get<double>(), 0.005, 1e-12);
  EXPECT_TRUE(fs::exists(c.out_dir / "instance.json"));

  json zero = minimal_config();
  zero["data"] = {{"kind", "manufactured"}, {"w", 0.0}};
  RunConfig cz = parse_config(zero);
  cz.out_dir = scratch("manufacture-zero");
  const RunReport rz = cmd_manufacture(cz);
  ASSERT_EQ(rz.exit_code, kExitOk) << rz.error;
  EXPECT_TRUE(rz.summary.at("alpha_star").is_null());
  const json inst = json::parse(slurp(cz.out_dir / "instance.json"));
  for (const auto& v : inst.at("u_bar")) EXPECT_EQ(v.get<double>(), 0.0);
}

TEST(Commands, InteriorPresetManufacture) {
  RunConfig c = testing::preset("interior-attainable-poisson-1d");
  c.out_dir = scratch("manufacture-interior");
  const RunReport r = cmd_manufacture(c);
  ASSERT_EQ(r.exit_code, kExitOk);
  EXPECT_EQ(r.summary.at("alpha_star").get<double>(), 0.0);
  EXPECT_TRUE(r.summary.at("attainable").get<bool>());
  EXPECT_GT(r.summary.at("tau").get<double>(), 0.0);
}

TEST(Commands, EmptyAdmissibleSetExitsThree) {
  json j = minimal_config();
  j["admissible"]["psi"] = -1.0;
  j["data"] = {{"kind", "manufactured"}, {"w", 1.0}};
  RunConfig c = parse_config(j);
  c.out_dir = scratch("manufacture-empty");
  EXPECT_EQ(cmd_manufacture(c).exit_code, kExitInfeasible);
}

TEST(Commands, ExitCodeMapping) {
  EXPECT_EQ(exit_code_for(ErrorKind::kConfigError), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kInvalidRule), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kInfeasibleProblem), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kLambdaExceedsSlaterCap), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kNonConvergence), 4);
  EXPECT_EQ(exit_code_for(ErrorKind::kNoTransition), 5);
}

TEST(Tool, ExitCodes) {
  const fs::path dir = scratch("tool");
  EXPECT_EQ(run_cli("solve --config " + write_config(dir, minimal_config()).string() + " --out " +
                    (dir / "ok").string()),
            0);
  json missing = minimal_config();
  missing["data"]["y_d"] = {{"file", "nowhere.json"}};
  EXPECT_EQ(run_cli("solve --config " + write_config(dir, missing).string()), 2);
  EXPECT_EQ(run_cli("solve --config " + (dir / "absent.json").string()), 2);
  EXPECT_EQ(run_cli("solve"), 2);
  std::ofstream(dir / "occupied") << "x";
  EXPECT_EQ(run_cli("solve --config " + write_config(dir, minimal_config()).string() + " --out " +
                    (dir / "occupied").string()),
            2);
  EXPECT_EQ(run_cli("verify --config " + testing::preset_path("clipped-fredholm-1d") + " --out " +
                    (dir / "clipped").string()),
            5);
  const json report = json::parse(slurp(dir / "clipped" / "report.json"));
  EXPECT_NE(report.at("error").get<std::string>().find("NoTransition"), std::string::npos);
}

TEST(Tool, VerifyIsByteDeterministic) {
  const fs::path dir = scratch("determinism");
  const std::string base = "verify --config " + testing::preset_path("interior-attainable-poisson-1d") + " --seed 7 --out ";
  ASSERT_EQ(run_cli(base + (dir / "a").string()), 0);
  ASSERT_EQ(run_cli(base + (dir / "b").string()), 0);
  const std::string a = slurp(dir / "a" / "sweep.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b" / "sweep.csv"));
  const json report = json::parse(slurp(dir / "a" / "report.json"));
  for (const auto& f : report.at("manifest")) EXPECT_TRUE(fs::exists(dir / "a" / f.get<std::string>()));
  EXPECT_EQ(parse_config(report.at("config")), [&] {
    RunConfig c = testing::preset("interior-attainable-poisson-1d");
    c.out_dir = dir / "a";
    c.seed = 7;
    return c;
  }());
}

}  // namespace
}  // namespace tlreg
