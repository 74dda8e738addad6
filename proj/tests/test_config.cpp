#include "bladectl/run.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bladectl;
namespace fs = std::filesystem;

namespace {

const std::string kSource = BLADECTL_SOURCE_DIR;
const std::string kShipped = kSource + "/configs/blade_default.ini";

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bladectl_test_" + name);
  fs::remove_all(p);
  return p;
}

const char* kLight = R"(
[scenario]
mode = state-feedback
disturbance = off
[plant]
model = general
[general]
c1 = 0.3
c2 = 0.2
[grid]
dx = 0.05
dt = 1e-3
t_final = 0.2
[control]
c1_acute = 10
[kernels]
Nk = 101
N = 6
[output]
snapshot_stride = 50
norm_stride = 10
)";

}  // namespace

TEST(Config, ShippedFileLoads) {
  const RunConfig c = load_config(kShipped);
  EXPECT_EQ(c.scenario, Scenario::OutputFeedback);
  EXPECT_DOUBLE_EQ(c.c1_acute, 10.0);
  EXPECT_DOUBLE_EQ(c.grid.dt, 1e-3);
  EXPECT_NEAR(c.grid.dx(), 0.05, 1e-15);
  EXPECT_DOUBLE_EQ(c.grid.t_final, 5.0);
  EXPECT_TRUE(c.physical);
  EXPECT_TRUE(c.disturbance);
}

TEST(Config, EmptyFileListsRequiredFields) {
  try {
    parse_config("", "empty.ini");
    FAIL() << "empty config accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.exit_code(), 2);
    const std::string msg = e.what();
    for (const auto& k : required_config_keys()) EXPECT_NE(msg.find(k), std::string::npos) << k;
  }
}

TEST(Config, CoarseTimeStepFailsCfl) {
  try {
    load_config(kShipped, {{"grid.dt", "1"}});
    FAIL() << "CFL violation accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find("grid.dt"), std::string::npos);
  }
}

TEST(Config, ParseErrorCarriesLine) {
  try {
    parse_config("[grid]\ndx = 0.05\nthis line is broken\n", "bad.ini");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("bad.ini:3"), std::string::npos) << e.what();
  }
}

TEST(Config, UnknownFieldNamed) {
  try {
    parse_config(std::string(kLight) + "[observer]\nbogus = 1\n", "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("observer.bogus"), std::string::npos) << e.what();
  }
}

TEST(Config, OverridesWin) {
  const RunConfig c = load_config(kShipped, {{"scenario.mode", "open-loop"}, {"grid.t_final", "2"},
                                             {"scenario.disturbance", "off"}, {"output.dir", "elsewhere"}});
  EXPECT_EQ(c.scenario, Scenario::OpenLoop);
  EXPECT_DOUBLE_EQ(c.grid.t_final, 2.0);
  EXPECT_FALSE(c.disturbance);
  EXPECT_EQ(c.out_dir, "elsewhere");
}

TEST(Profile, Grammar) {
  const Profile p = Profile::parse("0.5 + 2*sin(2*pi*x) - sin(pi*x)");
  const Vec x = unit_grid(11);
  const Vec v = p.sample(x);
  for (int i = 0; i < 11; ++i)
    EXPECT_NEAR(v(i), 0.5 + 2 * std::sin(2 * M_PI * x(i)) - std::sin(M_PI * x(i)), 1e-14);
  EXPECT_TRUE(Profile::parse("compatible").compatible);
  EXPECT_THROW(Profile::parse("exp(x)"), Error);
}

TEST(Run, DeterministicOutputsAndCompleteManifest) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  std::ostringstream log;
  RunConfig c = parse_config(kLight, "light", {{"output.dir", a.string()}});
  ASSERT_EQ(cmd_simulate(c, log), 0) << log.str();
  c.out_dir = b.string();
  ASSERT_EQ(cmd_simulate(c, log), 0) << log.str();
  std::istringstream man(read_file(a / "MANIFEST"));
  std::string line;
  std::getline(man, line);
  EXPECT_EQ(line, "# status: ok");
  std::getline(man, line);
  int listed = 0;
  while (std::getline(man, line)) {
    std::istringstream ls(line);
    std::string name, sha;
    long rows = 0;
    ls >> name >> sha >> rows;
    EXPECT_EQ(sha, sha256_file((a / name).string())) << name;
    EXPECT_EQ(read_file(a / name), read_file(b / name)) << name;
    ++listed;
  }
  int files = 0;
  for (const auto& e : fs::directory_iterator(a))
    if (e.path().filename() != "MANIFEST") ++files;
  EXPECT_EQ(listed, files);
  EXPECT_TRUE(fs::exists(a / "summary.csv"));
  EXPECT_TRUE(fs::exists(a / "norms.csv"));
}

TEST(Run, KernelsModeWritesKernelsAndResiduals) {
  const auto dir = scratch("kernels");
  std::ostringstream log;
  const RunConfig c = parse_config(kLight, "light", {{"output.dir", dir.string()}});
  ASSERT_EQ(cmd_kernels(c, log), 0) << log.str();
  for (const char* f : {"kernel_k.csv", "kernel_l.csv", "kernel_p.csv", "kernel_functions.csv",
                        "kernel_residuals.csv", "observer_kernel_psi.csv", "MANIFEST"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_NE(read_file(dir / "kernel_residuals.csv").find("l_diagonal"), std::string::npos);
}

TEST(Run, ExportGains) {
  const auto dir = scratch("gains");
  std::ostringstream log;
  const RunConfig c = parse_config(kLight, "light", {{"output.dir", dir.string()}});
  ASSERT_EQ(cmd_export_gains(c, log), 0) << log.str();
  EXPECT_TRUE(fs::exists(dir / "gains_scalar.csv"));
  EXPECT_TRUE(fs::exists(dir / "observer_gains_scalar.csv"));
}

TEST(Cli, CorruptConfigExitsTwo) {
  const auto dir = scratch("corrupt");
  fs::create_directories(dir);
  const fs::path cfg = dir / "corrupt.ini";
  std::ofstream(cfg) << "[grid\ndx = = 0.05\n";
  const std::string cmd = std::string(BLADECTL_CLI) + " simulate -c " + cfg.string() + " --out " +
                          (dir / "out").string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
}

TEST(Cli, OverrideFlagsReachTheRun) {
  const auto dir = scratch("cli_open");
  const std::string cmd = std::string(BLADECTL_CLI) + " simulate -c " + kShipped +
                          " --scenario open-loop --t-final 0.1 --disturbance off --out " + dir.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  ASSERT_EQ(WEXITSTATUS(status), 0);
  const std::string s = read_file(dir / "summary.csv");
  EXPECT_NE(s.find("scenario,open-loop"), std::string::npos);
  EXPECT_NE(s.find("t_reached,0.1"), std::string::npos);
  EXPECT_NE(s.find("disturbance,off"), std::string::npos);
}
