#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dynreg/harness.hpp"

using namespace dynreg;
namespace fs = std::filesystem;

namespace {

// first k with s(k / ramp) >= target, by bisection on the cubic
long crossing_frame(double target, long ramp) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (m + m * m - m * m * m < target ? lo : hi) = m;
  }
  return static_cast<long>(std::ceil(hi * static_cast<double>(ramp) - 1e-9));
}

RunConfig small_linear() {
  RunConfig c = RunConfig::linear_default();
  c.linear.grid = 12;
  c.frames = 16;
  c.scenario = ScenarioSpec::two_inclusions(17, 10);
  c.deltas = {0.1, 0.05, 0.01};
  c.run_batch = false;
  c.seed = 4;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("inclusion schedule at full scale") {
  const ScenarioSpec s = ScenarioSpec::two_inclusions(10001, 7000);
  long gone1 = -1, gone2 = -1, back = -1;
  for (long k = 1; k <= 10000; ++k) {
    const auto a = scenario_state(s, k - 1), b = scenario_state(s, k);
    if (a[0].present && !b[0].present) gone1 = k;
    if (a[1].present && !b[1].present) gone2 = k;
    if (!a[0].present && b[0].present) back = k;
  }
  CHECK(gone1 == crossing_frame(0.25, 7000));
  CHECK(gone2 == crossing_frame(0.5, 7000));
  CHECK(back == crossing_frame(0.75, 7000));
  CHECK(std::abs(gone1 - 1500) <= 50);
  CHECK(std::abs(gone2 - 2800) <= 50);
  CHECK(std::abs(back - 4200) <= 50);
}

TEST_CASE("scenario frames") {
  const ScenarioSpec s = ScenarioSpec::two_inclusions(60, 40);
  const GridGeometry geo(24);
  const ScenarioBuild b = build_scenario(s, geo.unknown_positions(), 59);
  REQUIRE(b.truth.size() == 60);
  for (long k = 41; k < 60; ++k) CHECK(b.truth[static_cast<std::size_t>(k)] == b.truth[40]);
  const auto st = scenario_state(s, 0);
  CHECK(st[0].present);
  CHECK(st[1].present);
  CHECK(b.truth[0].maxCoeff() == 2.0);
  CHECK(b.truth[0].minCoeff() == 1.0);
  CHECK(motion_parameter(s, 40) == 1.0);
  CHECK(motion_parameter(s, 59) == 1.0);
}

TEST_CASE("config parsing") {
  const RunConfig c = parse_config(R"({"frames": 50, "noise": [0.1, 0.01], "step": {"tau": 0.01}})", RunConfig{});
  CHECK(c.frames == 50);
  CHECK(c.deltas.size() == 2);
  CHECK(c.step.tau == 0.01);
  CHECK(c.step.s == 256.0);
  const RunConfig e = parse_config(R"({"mode": "eit"})", RunConfig{});
  CHECK(e.mode == Mode::eit);
  CHECK(e.eit.precision == 80.0);
  CHECK_THROWS_AS(parse_config(R"({"frame": 3})", RunConfig{}), PreconditionError);
  CHECK_THROWS_AS(parse_config(R"({"noise": [-0.1]})", RunConfig{}), PreconditionError);
  CHECK_THROWS_AS(parse_config(R"({"frames": 500})", RunConfig{}), PreconditionError);
  CHECK_THROWS_AS(parse_config("{", RunConfig{}), PreconditionError);
  CHECK_THROWS_AS(parse_config(R"({"predictor": {"primal": "magic"}})", RunConfig{}), PreconditionError);
}

TEST_CASE("small linear experiment") {
  RunConfig c = small_linear();
  const fs::path dir = fs::temp_directory_path() / "dynreg_harness_a";
  fs::remove_all(dir);
  c.out_dir = dir.string();
  const ExperimentResult r = run_experiment(c, true);
  REQUIRE(r.levels.size() == 3);
  for (const auto& L : r.levels) {
    CHECK(L.alpha == alpha_schedule(L.delta));
    CHECK(L.online.x.size() == 17);
    CHECK(L.cum_err.size() == 17);
    CHECK(L.noise.pass);
  }
  for (const char* f : {"level_0.1.csv", "level_0.05.csv", "level_0.01.csv", "verdicts.csv", "fig2.svg", "limits.csv"})
    CHECK(fs::exists(dir / f));

  std::ifstream csv(dir / "level_0.05.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "frame,delta,alpha,cum_avg_sq_error,bregman,data_fit,reg_value,e_increment,thm_lhs,thm_rhs,holds");
  long rows = 0;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string frame, delta, alpha;
    std::getline(ss, frame, ',');
    std::getline(ss, delta, ',');
    std::getline(ss, alpha, ',');
    CHECK(std::stod(alpha) == alpha_schedule(0.05));
    ++rows;
  }
  CHECK(rows == 17);

  // same seed: byte-identical artifacts
  const fs::path dir2 = fs::temp_directory_path() / "dynreg_harness_b";
  fs::remove_all(dir2);
  c.out_dir = dir2.string();
  run_experiment(c, true);
  for (const char* f : {"level_0.1.csv", "level_0.05.csv", "level_0.01.csv", "verdicts.csv", "limits.csv", "fig2.svg"})
    CHECK(slurp(dir / f) == slurp(dir2 / f));
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("zero-noise error is nonincreasing after the motion stops") {
  RunConfig c = small_linear();
  c.frames = 40;
  c.scenario = ScenarioSpec::two_inclusions(41, 10);
  c.deltas = {1e-9};
  const Setup s = make_setup(c);
  const LevelResult L = run_level(s, nullptr, 1e-9);
  // per-frame error falls once the truth is static, so the running mean falls too
  for (std::size_t k = 20; k < L.cum_err.size(); ++k) CHECK(L.cum_err[k] <= L.cum_err[k - 1]);
}

TEST_CASE("delta tags") {
  CHECK(delta_tag(0.1) == "0.1");
  CHECK(delta_tag(0.005) == "0.005");
}
