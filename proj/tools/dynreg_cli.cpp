// Command-line front end: simulate, solve, diagnose and reproduce the noise sweep.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dynreg/config.hpp"
#include "dynreg/errors.hpp"
#include "dynreg/harness.hpp"
#include "dynreg/lemma_suites.hpp"

using namespace dynreg;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string mode;
  long frames = -1;
  std::vector<double> noise;
  long long seed = -1;
  std::string out;
  std::string config;

  void add_to(CLI::App* app) {
    app->add_option("--mode", mode, "linear or eit")->check(CLI::IsMember({"linear", "eit"}));
    app->add_option("--frames", frames, "horizon N (frames 0..N)");
    app->add_option("--noise", noise, "noise level delta (repeatable)")->take_all()->allow_extra_args(false);
    app->add_option("--seed", seed, "RNG seed");
    app->add_option("--out", out, "output directory");
    app->add_option("--config", config, "JSON configuration file");
  }

  RunConfig resolve() const {
    Mode m = mode.empty() ? Mode::linear : mode_from_string(mode);
    RunConfig base = m == Mode::eit ? RunConfig::eit_default() : RunConfig::linear_default();
    RunConfig cfg = config.empty() ? base : load_config(config, base);
    if (!mode.empty()) cfg.mode = m;  // the flag wins over the file
    if (frames >= 0) {
      cfg.frames = frames;
      if (cfg.scenario.total_frames < frames + 1) cfg.scenario.total_frames = frames + 1;
    }
    if (!noise.empty()) cfg.deltas = noise;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (!out.empty()) cfg.out_dir = out;
    cfg.validate();
    return cfg;
  }
};

void write_frames(const fs::path& path, const std::vector<Vec>& frames) {
  std::ofstream f(path);
  char buf[40];
  for (std::size_t k = 0; k < frames.size(); ++k) {
    f << k;
    for (long i = 0; i < frames[k].size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", frames[k][i]);
      f << ',' << buf;
    }
    f << '\n';
  }
}

void print_verdicts(const std::vector<VerdictLine>& v) { write_verdicts(v, std::cout); }

int cmd_simulate(const RunConfig& cfg) {
  const Setup s = make_setup(cfg);
  fs::create_directories(cfg.out_dir);
  write_frames(fs::path(cfg.out_dir) / "truth.csv", s.scenario.truth.frames);
  write_frames(fs::path(cfg.out_dir) / "exact.csv", s.exact.exact);
  for (double d : cfg.deltas) {
    NoiseSpec ns = cfg.noise;
    ns.delta = d;
    ns.seed = cfg.seed;
    const MeasurementStream st = generate_noise(s.exact, ns);
    write_frames(fs::path(cfg.out_dir) / ("data_" + delta_tag(d) + ".csv"), st.corrupted);
    const NoiseCheck nc = check_noise_levels(st, ns);
    std::printf("delta=%g  noise check %s (%.4g <= %.4g, %.4g <= %.4g)\n", d, nc.pass ? "ok" : "FAILED", nc.first,
                nc.first_bound, nc.second, nc.second_bound);
  }
  return 0;
}

int cmd_solve_online(const RunConfig& cfg) {
  const Setup s = make_setup(cfg);
  fs::create_directories(cfg.out_dir);
  for (double d : cfg.deltas) {
    const LevelResult L = run_level(s, nullptr, d);
    std::ofstream f(fs::path(cfg.out_dir) / ("level_" + delta_tag(d) + ".csv"));
    write_level_csv(L, f);
    write_frames(fs::path(cfg.out_dir) / ("online_" + delta_tag(d) + ".csv"), L.online.x.frames);
    std::printf("delta=%g alpha=%.5f terminal cumulative error %.6g (solves per frame %ld/%ld)\n", d, L.alpha,
                L.cum_err.back(), L.max_forward_solves, L.max_adjoint_solves);
  }
  return 0;
}

int cmd_solve_batch(const RunConfig& cfg) {
  if (cfg.mode != Mode::linear) {
    std::fprintf(stderr, "solve-batch is available in linear mode only\n");
    return 2;
  }
  const Setup s = make_setup(cfg);
  fs::create_directories(cfg.out_dir);
  for (double d : cfg.deltas) {
    NoiseSpec ns = cfg.noise;
    ns.delta = d;
    ns.seed = cfg.seed;
    const MeasurementStream st = generate_noise(s.exact, ns);
    BatchProblem bp;
    bp.models = {s.model};
    bp.data = st.corrupted;
    bp.precision_sq = st.precision_sq();
    bp.K = s.K;
    bp.box = s.box;
    bp.alpha = cfg.schedule(d);
    bp.horizon = cfg.frames;
    bp.options.require_convergence = false;
    const BatchResult r = solve_batch(bp);
    write_frames(fs::path(cfg.out_dir) / ("batch_" + delta_tag(d) + ".csv"), r.x.frames);
    std::printf("delta=%g Q^N=%.10g max residual %.3g iterations %ld %s\n", d, r.objective, r.max_gap,
                r.total_iterations, r.converged ? "converged" : "NOT converged");
  }
  return 0;
}

int cmd_diagnose(const RunConfig& cfg) {
  const ExperimentResult r = run_experiment(cfg, true);
  print_verdicts(r.verdicts);
  std::printf("%s; outputs in %s\n", r.pass ? "all checks passed" : "some checks FAILED", cfg.out_dir.c_str());
  return r.pass ? 0 : 1;
}

int cmd_verify_lemmas(long long seed, int instances, bool inject) {
  const LemmaReport rep = verify_lemmas(seed < 0 ? 7 : static_cast<std::uint64_t>(seed), instances, inject);
  write_lemma_report(rep, std::cout);
  return rep.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online dynamic regularisation experiments"};
  app.require_subcommand(1);
  Common common;
  int instances = 100;
  bool inject = false;

  auto* sim = app.add_subcommand("simulate", "ground truth, exact and noisy data");
  auto* online = app.add_subcommand("solve-online", "predictor-corrector run per noise level");
  auto* batch = app.add_subcommand("solve-batch", "per-frame batch minimisers (linear mode)");
  auto* diag = app.add_subcommand("diagnose", "full experiment with inequality checks");
  auto* lem = app.add_subcommand("verify-lemmas", "brute-force convex-analysis suites");
  auto* fig = app.add_subcommand("reproduce-fig2", "lemmas, experiment, semi-strong check and plot");
  for (auto* c : {sim, online, batch, diag, fig}) common.add_to(c);
  lem->add_option("--seed", common.seed, "RNG seed");
  lem->add_option("--instances", instances, "random instances per suite");
  lem->add_flag("--inject-nonconvex", inject, "replace G by a nonconvex function in the conjugate-sum suite");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*lem) return cmd_verify_lemmas(common.seed, instances, inject);
    const RunConfig cfg = common.resolve();
    if (*sim) return cmd_simulate(cfg);
    if (*online) return cmd_solve_online(cfg);
    if (*batch) return cmd_solve_batch(cfg);
    if (*diag) return cmd_diagnose(cfg);
    if (*fig) {
      int rc = cmd_verify_lemmas(static_cast<long long>(cfg.seed), instances, false);
      rc |= cmd_diagnose(cfg);
      if (cfg.mode == Mode::linear) {
        const SemiStrongReport ss = semistrong_check(cfg.deltas, 100, cfg.seed);
        std::printf("semi-strong instance: %ld violations over %zu frames, worst margin %.4g, gamma %.4g\n",
                    ss.violations, ss.lhs.size(), ss.worst_margin, ss.gamma);
        if (ss.violations > 0) rc |= 1;
      }
      return rc;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
