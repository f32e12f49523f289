#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <pulsefield/experiment.hpp>

using namespace pulsefield;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("pulsefield_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* small_config = R"(
[model]
model = lif
S = 2.1
gamma = 2
[coupling]
K = -0.1
[solver]
ntheta = 128
tmax = 1
log_stride = 20
[output]
snapshot_times = 0, 0.5
)";

std::string error_key(const std::string& text) {
  try {
    (void)parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.key_path();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("bundled configs parse", "[config]") {
  for (const char* name : {"inhibitory.cfg", "excitatory.cfg", "homoclinic.cfg", "neutral_k0.cfg"}) {
    INFO(name);
    const auto c = load_config(fs::path(PULSEFIELD_CONFIG_DIR) / name);
    CHECK_NOTHROW(c.build_model());
  }
  const auto excit = load_config(fs::path(PULSEFIELD_CONFIG_DIR) / "excitatory.cfg");
  CHECK(excit.expect_blowup);
  CHECK(excit.K == 0.1);
  const auto neutral = load_config(fs::path(PULSEFIELD_CONFIG_DIR) / "neutral_k0.cfg");
  CHECK(neutral.scheme_enum() == Scheme::SemiLagrangian);
}

TEST_CASE("defaults and overrides", "[config]") {
  const auto c = parse_config_text(small_config);
  CHECK(c.ntheta == 128);
  CHECK(c.cfl == 0.5);
  CHECK(c.snapshot_times == std::vector<double>{0.0, 0.5});
  CHECK(c.initial.type == "uniform");
  CHECK(c.certify);
}

TEST_CASE("bad configs report the key path", "[config]") {
  CHECK(error_key("[model]\nmodle = lif\n") == "model.modle");
  CHECK(error_key("[modell]\nmodel = lif\n") == "modell.model");
  CHECK(error_key("[solver]\ncfl = fast\n") == "solver.cfl");
  CHECK(error_key("[solver]\nntheta = 2.5\n") == "solver.ntheta");
  CHECK(error_key("[solver]\nscheme = lax\n") == "solver.scheme");
  CHECK(error_key("[coupling]\nK = 1\nK = 2\n") == "coupling.K");
  CHECK(error_key("[solver]\ncfl = -1\n") == "solver.cfl");
  CHECK(error_key("K = 1\n") == "K");
  CHECK(error_key("[model]\nmodel = tabulated\n") == "model.csv");
  CHECK(error_key("[output]\nquantiles = maybe\n") == "output.quantiles");
}

TEST_CASE("resolved config round-trips through JSON", "[config]") {
  const auto c = parse_config_text(small_config);
  const auto j = config_to_json(c);
  const auto back = config_from_json(j);
  CHECK(config_to_json(back) == j);
  auto bad = j;
  bad["solver"]["cfl"] = "x";
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
}

TEST_CASE("scenario artifacts and determinism", "[config][experiment]") {
  const auto c = parse_config_text(small_config);
  const auto a = scratch("run_a"), b = scratch("run_b");
  const auto ra = run_scenario(c, a);
  const auto rb = run_scenario(c, b);
  CHECK(ra.exit_code == ExitOk);
  CHECK(ra.status == "ok");
  for (const char* f : {"resolved_config.json", "stationary.json", "rho_star.csv", "trajectory.csv", "summary.json",
                        "certification.json", "density_t0.csv", "density_t0.5.csv"}) {
    INFO(f);
    CHECK(fs::exists(a / f));
  }
  for (const char* f : {"trajectory.csv", "density_t0.5.csv", "rho_star.csv", "summary.json"}) {
    INFO(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  // The trajectory reads back.
  const auto rows = io::read_trajectory_csv(a / "trajectory.csv");
  CHECK(rows.size() >= 2);
  CHECK(rows.front().event == "init");
  // Rerunning from the resolved config reproduces the trajectory.
  const auto c2 = load_config(a / "resolved_config.json");
  const auto r2 = scratch("run_c");
  (void)run_scenario(c2, r2);
  CHECK(slurp(a / "trajectory.csv") == slurp(r2 / "trajectory.csv"));
}

TEST_CASE("unexpected blow-up and missing blow-up map to exit 2", "[config][experiment]") {
  auto c = parse_config_text(small_config);
  c.K = 0.5;
  c.tmax = 10;
  CHECK(run_scenario(c, scratch("blow")).exit_code == ExitUnexpectedBlowup);
  c.expect_blowup = true;
  CHECK(run_scenario(c, scratch("blow2")).exit_code == ExitOk);
  c.K = -0.1;
  c.tmax = 0.5;
  CHECK(run_scenario(c, scratch("blow3")).exit_code == ExitUnexpectedBlowup);
}

TEST_CASE("sweeps", "[config][experiment]") {
  const auto c = parse_config_text(small_config);
  const auto out = scratch("sweep");
  const auto rows = sweep(c, "K", {0.9, 0.99, 1.01, 1.1}, out, true, 2);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].exists);
  CHECK(rows[1].exists);
  CHECK_FALSE(rows[2].exists);
  CHECK_FALSE(rows[3].exists);
  CHECK(fs::exists(out / "row_3" / "stationary.json"));
  const auto text = slurp(out / "sweep.csv");
  CHECK(text.rfind("value,exists,J_star,decay_rate,t_fin,status\n", 0) == 0);
  const auto empty = sweep(c, "K", {}, scratch("sweep_empty"), true);
  CHECK(empty.empty());
  CHECK_THROWS_AS(sweep(c, "gamma", {1.0}, scratch("sweep_bad"), true), ConfigError);
}

#ifdef PULSEFIELD_CLI
TEST_CASE("command-line exit codes", "[config][cli]") {
  const auto dir = scratch("cli");
  const auto bad = dir / "bad.cfg";
  std::ofstream(bad) << "[solver]\ncfl = fast\n";
  const std::string cli = PULSEFIELD_CLI;
  const auto run = [&](const std::string& args) {
    const int status = std::system((cli + " " + args + " > " + (dir / "log.txt").string() + " 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run("run " + bad.string()) == 4);
  CHECK(slurp(dir / "log.txt").find("solver.cfl") != std::string::npos);
  CHECK(run("sweep --param K --values --out " + (dir / "empty").string()) == 0);
  CHECK(fs::exists(dir / "empty" / "sweep.csv"));
  CHECK(run("stationary --model lif --S 2.1 --gamma 2 --K -0.1") == 0);
  CHECK(slurp(dir / "log.txt").find("\"J_star\"") != std::string::npos);
  CHECK(run("simulate --K 0.5 --ntheta 128 --tmax 10 --out " + (dir / "sim").string()) == 2);
  CHECK(run("simulate --K -0.1 --ntheta 128 --tmax 2 --log-stride 10 --out " + (dir / "sim2").string()) == 0);
  CHECK(run("certify --K -0.1 --ntheta 128 --trajectory " + (dir / "sim2" / "trajectory.csv").string() + " --out " +
            (dir / "cert").string()) == 0);
  CHECK(fs::exists(dir / "cert" / "certification.json"));
  CHECK(run("finite --N 20 --K 0.1 --nfirings 50 --out " + (dir / "fin").string()) == 0);
  CHECK(fs::exists(dir / "fin" / "firings.csv"));
  CHECK(run("stationary --model lif --S 1.5 --gamma 2") == 4);
}
#endif
