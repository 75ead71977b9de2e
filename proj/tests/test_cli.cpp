#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "blowup_lab/cli.hpp"
#include "blowup_lab/config.hpp"
#include "blowup_lab/errors.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace blowup_lab;
namespace fs = std::filesystem;

namespace {

const char* minimal = R"([problem]
N = 3
p = 2
domain_kind = ball
extent = 1
)";

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
    return e.what();
  }
  FAIL("config accepted: " << text);
  return {};
}

fs::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const fs::path d = fs::temp_directory_path() /
                     ("blowup_lab_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "blowup-lab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("minimal config takes every default") {
  const Config c = parse_config(minimal);
  CHECK(c.problem.N == 3);
  CHECK(c.problem.p == 2.0);
  CHECK(c.problem.domain == DomainKind::Ball);
  CHECK(c.problem.potential == FunctionSpec::constant(1.0));
  CHECK(c.problem.profile == FunctionSpec::cosine_cap(1.0));
  CHECK(c.M == 50.0);
  CHECK(c.solver == SolverConfig{});
  CHECK(c.sweep == SweepConfig{});
  CHECK(c.selfsim == SelfsimConfig{});
  CHECK(c.output == OutputConfig{});
}

TEST_CASE("mistyped value is reported at its line") {
  const std::string msg = config_error("[problem]\nN = 3\np = \"two\"\ndomain_kind = ball\nextent = 1\n");
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(config_error("[problem]\nN = 3.5\np = 2\ndomain_kind = ball\nextent = 1\n").find("line 2") !=
        std::string::npos);
  CHECK(config_error(std::string(minimal) + "[solver]\nm = lots\n").find("line 7") != std::string::npos);
}

TEST_CASE("duplicate key names the key") {
  const std::string msg = config_error(std::string(minimal) + "extent = 2\n");
  CHECK(msg.find("extent") != std::string::npos);
  CHECK(msg.find("line 6") != std::string::npos);
}

TEST_CASE("unknown keys, sections and missing problem data are rejected") {
  CHECK(config_error(std::string(minimal) + "colour = blue\n").find("colour") != std::string::npos);
  CHECK(config_error(std::string(minimal) + "[extras]\n").find("extras") != std::string::npos);
  config_error("[solver]\nm = 128\n");
  config_error("[problem]\nN = 3\np = 2\ndomain_kind = ball\n");
  config_error("[problem]\nN = 3\np = 2\ndomain_kind = cube\nextent = 1\n");
  config_error(std::string(minimal) + "[selfsim]\nk_list = 0, 4\n");
  config_error(std::string(minimal) + "[output]\nformats = csv, xml\n");
  config_error(std::string(minimal) + "[solver]\nu_stop = 10\n");
}

TEST_CASE("config round-trips through its text form") {
  Config c = parse_config(std::string(minimal) + R"(
M = 12.5
V.kind = gaussian_bump
V.base = 1
V.amp = 1
V.center = 0.3
V.width = 0.01
phi.kind = table
phi.nodes = [0, 0.5, 1]
phi.values = [1, 0.75, 0]

[solver]
m = 777
u_stop = 1e7
series_resolution = 2e-3

[sweep]
Ms = 4, 8.5, 16
workers = 3

[selfsim]
k_list = [0, 2]
s_start = 4.5
s_end = 9.25
cutoff_R = 2, 4.5

[output]
dir = "some dir/out"
formats = json
)");
  CHECK(c.problem.potential == FunctionSpec::gaussian_bump(1.0, 1.0, 0.3, 0.01));
  CHECK(c.sweep.Ms == std::vector<double>{4.0, 8.5, 16.0});
  CHECK(c.selfsim.s_start == 4.5);
  CHECK(c.output.dir == "some dir/out");
  CHECK(parse_config(serialize_config(c)) == c);
  const Config d = parse_config(minimal);
  CHECK(parse_config(serialize_config(d)) == d);
}

TEST_CASE("exit codes") {
  CHECK(run_cli({"selftest"}).code == 0);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"run"}).code == 2);
  CHECK(run_cli({"run", "--config", "/nonexistent/blowup.ini"}).code == 2);
  const fs::path d = scratch_dir("bad");
  CHECK(run_cli({"run", "--config", write_file(d / "bad.ini", "[problem]\np = 2\n").string()}).code == 2);
  fs::remove_all(d);
}

TEST_CASE("selftest reports every oracle") {
  const Result r = run_cli({"selftest"});
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("quadrature") != std::string::npos);
}

TEST_CASE("sweep with an impossible tolerance exits 1 and prints margins") {
  const fs::path d = scratch_dir("sweep");
  const fs::path cfg = write_file(d / "sweep.ini", std::string(minimal) +
                                                       "[solver]\nm = 128\n[sweep]\nMs = 16, 32, 64\n"
                                                       "theorem2_tolerance = 1e-6\n");
  const Result r = run_cli({"sweep", "--config", cfg.string(), "--out", (d / "out").string(), "--workers", "2"});
  CHECK(r.code == 1);
  CHECK(r.out.find("margins2:") != std::string::npos);
  CHECK(first_line(d / "out" / "sweep.csv") == "M,T_est,T_ci,TMp1,a,phiV_at_a,rate_exponent");
  std::ifstream js(d / "out" / "sweep_summary.json");
  const auto j = nlohmann::json::parse(js);
  for (const char* key : {"A", "target", "margins2", "margins3", "fitted_decay_exponent", "checks"})
    CHECK_MESSAGE(j.contains(key), key);
  fs::remove_all(d);
}

TEST_CASE("run then energy produces one row per frame") {
  const fs::path d = scratch_dir("pipeline");
  const fs::path cfg = write_file(d / "run.ini", std::string(minimal) +
                                                     "[solver]\nm = 256\n[selfsim]\nm_y = 256\nframe_count = 7\n");
  const std::string out = (d / "out").string();
  const Result run = run_cli({"run", "--config", cfg.string(), "--out", out});
  REQUIRE(run.code == 0);
  CHECK(first_line(d / "out" / "trajectory.csv") == "t,u_max,argmax");
  std::ifstream rec(d / "out" / "blowup_record.json");
  const auto j = nlohmann::json::parse(rec);
  for (const char* key : {"T_est", "T_ci", "a", "rate_exponent", "typeI_sup", "fit_window"})
    CHECK_MESSAGE(j.contains(key), key);

  const Result energy = run_cli({"energy", "--config", cfg.string(), "--out", out});
  CHECK(energy.code != 2);
  const fs::path csv = d / "out" / "energy.csv";
  REQUIRE(fs::exists(csv));
  CHECK(first_line(csv) == "s,E,E2,E4,E6,tildeE2,res_var,res_wvar1,res_dissipation,res_pohozaev,dev_core");
  CHECK(line_count(csv) >= 1 + 7);

  CHECK(run_cli({"report", "--config", cfg.string(), "--out", out}).code == 0);
  CHECK(fs::exists(d / "out" / "trajectory.dat"));
  CHECK(fs::exists(d / "out" / "energy.dat"));
  fs::remove_all(d);
}

TEST_CASE("environment variable redirects output unless --out is given") {
  const fs::path d = scratch_dir("env");
  const fs::path cfg = write_file(d / "run.ini", std::string(minimal) + "[solver]\nm = 64\n[output]\ndir = \"" +
                                                     (d / "from_config").string() + "\"\n");
  ::setenv("BLOWUP_LAB_OUT", (d / "from_env").string().c_str(), 1);
  CHECK(run_cli({"run", "--config", cfg.string()}).code == 0);
  CHECK(fs::exists(d / "from_env" / "blowup_record.json"));
  CHECK_FALSE(fs::exists(d / "from_config"));
  CHECK(run_cli({"run", "--config", cfg.string(), "--out", (d / "from_flag").string()}).code == 0);
  CHECK(fs::exists(d / "from_flag" / "blowup_record.json"));
  ::unsetenv("BLOWUP_LAB_OUT");
  CHECK(run_cli({"run", "--config", cfg.string()}).code == 0);
  CHECK(fs::exists(d / "from_config" / "blowup_record.json"));
  fs::remove_all(d);
}

}  // TEST_SUITE
