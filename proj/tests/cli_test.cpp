#include "trustctl/experiment.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

namespace fs = std::filesystem;

const fs::path kRecipes{TRUSTCTL_RECIPE_DIR};

fs::path scratch_dir() {
  const fs::path dir = fs::path(TRUSTCTL_TEST_TMP) / "cli";
  fs::create_directories(dir);
  return dir;
}

struct Result {
  int code = -1;
  std::string out;
};

Result trustctl(const std::string& args) {
  const auto capture = scratch_dir() / "stdout.txt";
  const std::string cmd = std::string("\"") + TRUSTCTL_CLI + "\" " + args + " > \"" + capture.string() + "\" 2>/dev/null";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(capture);
  std::stringstream s;
  s << in.rdbuf();
  r.out = s.str();
  return r;
}

fs::path write(const std::string& name, const std::string& body) {
  const auto p = scratch_dir() / name;
  std::ofstream(p) << body;
  return p;
}

TEST(Cli, ValidatePrintsResolvedSpec) {
  const auto r = trustctl("validate \"" + (kRecipes / "fig3.json").string() + "\"");
  EXPECT_EQ(r.code, 0);
  const auto j = trustctl::Json::parse(r.out);
  EXPECT_EQ(j["kind"], "trace");
  EXPECT_EQ(j["sim"]["attacker"]["target"], 1);
}

TEST(Cli, InvalidSpecExitsOne) {
  const auto bad = write("bad.json", R"({"kind": "trace", "sim": {"attacker": {"frequency": 1.5}}})");
  EXPECT_EQ(trustctl("validate \"" + bad.string() + "\"").code, 1);
  EXPECT_EQ(trustctl("run \"" + bad.string() + "\"").code, 1);
  EXPECT_EQ(trustctl("run \"" + (scratch_dir() / "missing.json").string() + "\"").code, 1);
  EXPECT_EQ(trustctl("frobnicate").code, 1);
  EXPECT_EQ(trustctl("run \"" + (kRecipes / "fig3.json").string() + "\" --realizations 0").code, 1);
}

TEST(Cli, RunWritesOutputs) {
  const auto out = scratch_dir() / "run.csv";
  fs::remove(out);
  const auto r = trustctl("run \"" + (kRecipes / "fig3.json").string() + "\" --seed 5 --output \"" + out.string() + "\"");
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(out));
  std::ifstream meta(out.string() + ".meta.json");
  const auto j = trustctl::Json::parse(meta);
  EXPECT_EQ(j["seed"], 5);
  EXPECT_EQ(j["rows"], 200);
}

TEST(Cli, RuntimeFailureExitsTwo) {
  const auto blocker = write("blocker", "x");
  const auto r = trustctl("run \"" + (kRecipes / "fig3.json").string() + "\" --output \"" +
                          (blocker / "out.csv").string() + "\"");
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, ShowModelPrintsMatrices) {
  const auto r = trustctl("show-model");
  EXPECT_EQ(r.code, 0);
  for (const char* name : {"M (7x7)", "K (7x7)", "A (7x7)", "B (7x7)", "C (7x7)", "W (7x7)", "V (7x7)", "residual"}) {
    EXPECT_NE(r.out.find(name), std::string::npos) << name;
  }
  EXPECT_EQ(trustctl("show-model --dt -1").code, 1);
}

}  // namespace
