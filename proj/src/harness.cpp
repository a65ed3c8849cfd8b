#include "dynreg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>

#include "dynreg/errors.hpp"
#include "dynreg/forward_linear.hpp"
#include "dynreg/mesh.hpp"

namespace dynreg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string delta_tag(double delta) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", delta);
  return buf;
}

ScenarioBuild build_scenario(const ScenarioSpec& spec, const Eigen::Matrix2Xd& positions, long horizon) {
  spec.validate();
  if (horizon < 0 || horizon + 1 > spec.total_frames) throw PreconditionError("horizon exceeds the scenario");
  ScenarioBuild out;
  out.hints.emplace_back();
  for (long k = 0; k <= horizon; ++k) {
    out.truth.push_back(sample_phantom(spec, k, positions));
    if (k > 0) out.hints.push_back(motion_between(spec, k - 1, k));
  }
  return out;
}

Setup make_setup(const RunConfig& cfg) {
  cfg.validate();
  Setup s;
  s.cfg = cfg;
  if (cfg.mode == Mode::linear) {
    const long n = cfg.linear.grid;
    s.geometry = std::make_shared<GridGeometry>(n);
    s.K = std::make_shared<GridGradient>(GridGradient::square(n));
    s.model = std::make_shared<LinearFrameOperator>(
        LinearFrameOperator::gaussian_blur(n, n, cfg.linear.blur_sigma, cfg.linear.blur_size));
    s.spacing = 2.0 / static_cast<double>(n);
    s.exact.precision = Vec::Constant(static_cast<long>(s.model->output_dim()), cfg.linear.precision);
  } else {
    const Mesh mesh = make_disk_mesh(cfg.eit.rings, cfg.eit.electrodes, cfg.eit.coverage);
    s.cem = std::make_shared<CemSystem>(mesh, cfg.eit.zeta);
    s.geometry = std::make_shared<MeshGeometry>(mesh);
    s.K = std::make_shared<MeshGradient>(mesh);
    s.model = std::make_shared<EitFrameModel>(s.cem);
    s.exact.precision = Vec::Constant(s.cem->measurement_dim(), cfg.eit.precision);
  }
  s.scenario = build_scenario(cfg.scenario, s.geometry->unknown_positions(), cfg.frames);
  for (std::size_t k = 0; k < s.scenario.truth.size(); ++k) {
    if (k > 0 && s.scenario.truth[k] == s.scenario.truth[k - 1])
      s.exact.exact.push_back(s.exact.exact.back());
    else
      s.exact.exact.push_back(s.model->apply(s.scenario.truth[k]));
  }
  s.x_init = Vec::Constant(s.K->input_dim(), cfg.scenario.background);
  s.box = BoxConstraint(cfg.box_lower, cfg.box_upper);
  return s;
}

Reference linear_reference(const Setup& setup) {
  if (!setup.model->is_linear()) throw UnsupportedError("reference solutions need a linear model");
  Reference ref;
  MinROptions opt;
  opt.iters_per_level = 150;
  ref.minr = min_r_solution({setup.model}, setup.exact.exact, setup.exact.precision_sq(), *setup.K, setup.cfg.frames, opt);
  const WitnessFitter fitter(*setup.model);
  const auto& lin = static_cast<const LinearFrameOperator&>(*setup.model);
  for (std::size_t k = 0; k < ref.minr.x.size(); ++k) {
    if (k > 0 && ref.minr.x[k] == ref.minr.x[k - 1]) {
      ref.v.push_back(ref.v.back());
      ref.w_norm_sq.push_back(ref.w_norm_sq.back());
      continue;
    }
    const Field y = select_subgradient(*setup.K, ref.minr.x[k], ref.minr.y_unit[k]);
    const Vec vhat = setup.K->adjoint_apply(y);
    const SourceWitness sw = fitter.fit(vhat);
    ref.v.push_back(lin.adjoint_apply(sw.w));
    ref.w_norm_sq.push_back(sw.w_norm_sq);
    ref.max_witness_residual = std::max(ref.max_witness_residual, sw.residual);
    ref.ridge_used = ref.ridge_used || sw.ridge_used;
  }
  return ref;
}

LevelResult run_level(const Setup& setup, const Reference* ref, double delta) {
  const RunConfig& cfg = setup.cfg;
  LevelResult L;
  L.delta = delta;
  L.alpha = cfg.schedule(delta);
  NoiseSpec ns = cfg.noise;
  ns.delta = delta;
  ns.seed = cfg.seed;
  L.stream = generate_noise(setup.exact, ns);
  L.noise = check_noise_levels(L.stream, ns);

  // EIT models count solves, so every level gets its own instance
  std::shared_ptr<const FrameModel> model = setup.model;
  if (setup.cem) model = std::make_shared<EitFrameModel>(setup.cem);

  OnlineProblem p;
  p.models = {model};
  p.data = L.stream.corrupted;
  p.precision_sq = L.stream.precision_sq();
  p.K = setup.K;
  p.geometry = setup.geometry;
  p.hints = setup.scenario.hints;
  p.box = setup.box;
  p.alpha = L.alpha;
  p.step = cfg.step;
  p.predictor = cfg.predictor;
  p.x_init = setup.x_init;
  L.online = run_online(p, cfg.frames);

  L.cum_err = averaged_sq_error(L.online.x, setup.scenario.truth);
  std::vector<Vec> pred;
  for (std::size_t k = 0; k < L.online.x.size(); ++k) {
    const Vec& x = L.online.x[k];
    pred.push_back(model->apply(x));
    L.data_fit.push_back(data_fit(pred.back(), L.stream.corrupted[k], p.precision_sq));
    L.reg_value.push_back(tv_value(*setup.K, x));
  }
  L.min_forward_solves = L.min_adjoint_solves = std::numeric_limits<long>::max();
  for (const auto& f : L.online.log) {
    L.max_forward_solves = std::max(L.max_forward_solves, f.forward_solves);
    L.max_adjoint_solves = std::max(L.max_adjoint_solves, f.adjoint_solves);
    L.min_forward_solves = std::min(L.min_forward_solves, f.forward_solves);
    L.min_adjoint_solves = std::min(L.min_adjoint_solves, f.adjoint_solves);
  }

  if (!ref) return L;
  if (!model->is_linear()) throw UnsupportedError("theory checks need a linear model");
  L.has_theory = true;
  RunRecord& r = L.record;
  r.delta = delta;
  r.alpha = L.alpha;
  r.c_prime = ns.c_prime;
  r.q = ns.q;
  r.x = L.online.x;
  r.xhat = ref->minr.x;
  r.pred = pred;
  r.exact = L.stream.exact;
  r.corrupted = L.stream.corrupted;
  r.precision_sq = p.precision_sq;
  r.v = ref->v;
  r.w_norm_sq = ref->w_norm_sq;
  for (std::size_t k = 0; k < r.x.size(); ++k) {
    r.pred_hat.push_back(model->apply(r.xhat[k]));
    r.lin.push_back(pred[k] - r.pred_hat.back());
    r.r_x.push_back(L.reg_value[k]);
    r.r_hat.push_back(tv_value(*setup.K, r.xhat[k]));
  }

  BatchProblem bp;
  bp.models = {model};
  bp.data = L.stream.corrupted;
  bp.precision_sq = p.precision_sq;
  bp.K = setup.K;
  bp.box = setup.box;
  bp.alpha = L.alpha;
  bp.horizon = cfg.frames;
  r.e = compute_e(r.x, r.xhat, bp);

  L.quad = check_quadratic_bound(r);
  L.lin = check_linearisation(r, cfg.eta);
  L.bregman = bregman_per_frame(r, *setup.K);
  L.theorem = theorem_bregman_check(r, cfg.eta);
  L.dconst = boundconst_d(r, L.quad->C);

  L.gamma = estimate_growth_factor(L.alpha, cfg.linear.precision * cfg.linear.precision, setup.spacing, L.gamma_radius);
  double eps = 0.0;
  for (double s : growth_slack(r, L.gamma)) L.epsilon.push_back(eps += s);
  if (cfg.run_batch) {
    bp.options.require_convergence = false;
    bp.options.max_iter = 1500;
    bp.options.tol = 1e-6;
    L.batch = solve_batch(bp, &r.x);
  }
  return L;
}

void write_level_csv(const LevelResult& L, std::ostream& os) {
  os << "frame,delta,alpha,cum_avg_sq_error,bregman,data_fit,reg_value,e_increment,thm_lhs,thm_rhs,holds\n";
  for (std::size_t k = 0; k < L.cum_err.size(); ++k) {
    const bool t = L.has_theory;
    os << k << ',' << fmt(L.delta) << ',' << fmt(L.alpha) << ',' << fmt(L.cum_err[k]) << ','
       << fmt(t ? L.bregman[k] : kNaN) << ',' << fmt(L.data_fit[k]) << ',' << fmt(L.reg_value[k]) << ','
       << fmt(t ? L.record.e.increments[k] : kNaN) << ',' << fmt(t ? L.theorem.lhs[k] : kNaN) << ','
       << fmt(t ? L.theorem.rhs[k] : kNaN) << ',' << (t ? (L.theorem.holds[k] ? "1" : "0") : "nan") << '\n';
  }
}

void write_svg(const std::vector<LevelResult>& levels, std::ostream& os) {
  const double W = 640, H = 420, ml = 70, mr = 120, mt = 20, mb = 50;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::size_t n = 1;
  for (const auto& L : levels) {
    n = std::max(n, L.cum_err.size());
    for (double v : L.cum_err)
      if (v > 0.0) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  }
  if (!(hi > 0.0)) lo = 1e-3, hi = 1.0;
  const double e0 = std::floor(std::log10(lo)), e1 = std::max(e0 + 1.0, std::ceil(std::log10(hi)));
  auto X = [&](double k) { return ml + (W - ml - mr) * k / std::max<double>(1.0, static_cast<double>(n - 1)); };
  auto Y = [&](double v) {
    const double t = (std::log10(std::max(v, std::pow(10.0, e0))) - e0) / (e1 - e0);
    return H - mb - (H - mt - mb) * t;
  };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double e = e0; e <= e1; e += 1.0) {
    const double y = Y(std::pow(10.0, e));
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\"" << y << "\" stroke=\"black\"/>";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4 << "\" font-size=\"11\" text-anchor=\"end\">1e" << e
       << "</text>\n";
  }
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 15 << "\" font-size=\"12\" text-anchor=\"middle\">frame N ("
     << n - 1 << " max)</text>\n";
  os << "<text x=\"15\" y=\"" << (mt + H - mb) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 15 "
     << (mt + H - mb) / 2 << ")\" text-anchor=\"middle\">cumulative averaged squared error</text>\n";
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const char* c = colors[i % 6];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < levels[i].cum_err.size(); ++k)
      os << X(static_cast<double>(k)) << ',' << Y(levels[i].cum_err[k]) << ' ';
    os << "\"/>\n";
    const double ly = mt + 20 + 18 * static_cast<double>(i);
    os << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - mr + 30 << "\" y2=\"" << ly
       << "\" stroke=\"" << c << "\" stroke-width=\"2\"/><text x=\"" << W - mr + 35 << "\" y=\"" << ly + 4
       << "\" font-size=\"11\">delta=" << delta_tag(levels[i].delta) << "</text>\n";
  }
  os << "</svg>\n";
}

bool terminal_error_decreasing(const std::vector<LevelResult>& levels) {
  std::vector<std::pair<double, double>> t;
  for (const auto& L : levels) t.emplace_back(L.delta, L.cum_err.back());
  std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i].second < t[i - 1].second)) return false;
  return true;
}

namespace {

VerdictLine series_verdict(const std::string& name, const PrefixSeries& s) {
  return {name, static_cast<long>(s.holds.size()), s.violations(), s.worst_margin(), false};
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& cfg, bool write) {
  const Setup setup = make_setup(cfg);
  std::optional<Reference> ref;
  if (cfg.mode == Mode::linear) ref = linear_reference(setup);

  ExperimentResult out;
  {
    std::vector<std::future<LevelResult>> jobs;
    for (double d : cfg.deltas)
      jobs.push_back(std::async(std::launch::async, [&setup, &ref, d] { return run_level(setup, ref ? &*ref : nullptr, d); }));
    for (auto& j : jobs) out.levels.push_back(j.get());
  }

  auto& V = out.verdicts;
  const long frames = cfg.frames + 1;
  for (const auto& L : out.levels) {
    const std::string tag = "[delta=" + delta_tag(L.delta) + "]";
    V.push_back({"noise_levels" + tag, frames, L.noise.pass ? 0 : 1,
                 std::min(L.noise.first_bound - L.noise.first, L.noise.second_bound - L.noise.second), false});
    if (cfg.mode == Mode::eit) {
      const bool one = L.max_forward_solves == 1 && L.min_forward_solves == 1 && L.max_adjoint_solves == 1 &&
                       L.min_adjoint_solves == 1;
      V.push_back({"one_solve_pair_per_frame" + tag, frames, one ? 0 : 1, 0.0, false});
      continue;
    }
    if (!L.has_theory) continue;
    V.push_back({"quadratic_bound_C" + tag, frames, L.quad->C <= 1.05 ? 0 : 1, 1.05 - L.quad->C, false});
    V.push_back({"linearisation" + tag, frames, L.lin.negative, L.lin.worst, false});
    V.push_back(series_verdict("theorem_bregman" + tag, L.theorem));
    V.push_back(series_verdict("boundconst_data" + tag, L.dconst->data));
    V.push_back(series_verdict("boundconst_reg" + tag, L.dconst->reg));
    if (L.batch)
      V.push_back({"batch_gap" + tag, frames, L.batch->converged ? 0 : 1, -L.batch->max_gap, true});
  }
  if (ref) {
    V.push_back({"witness_residual", frames, 0, -ref->max_witness_residual, true});
    V.push_back({"minr_residual", frames, ref->minr.certified ? 0 : 1, -ref->minr.residual_max, true});
  }
  V.push_back({"terminal_error_decreasing", static_cast<long>(out.levels.size()),
               terminal_error_decreasing(out.levels) ? 0 : 1, 0.0, false});

  if (ref && out.levels.size() >= 3) {
    // one growth factor for the whole grid: the smallest certified one is valid at every level
    double gamma = std::numeric_limits<double>::infinity();
    for (const auto& L : out.levels) gamma = std::min(gamma, L.gamma);
    std::vector<LimitInput> in;
    for (auto& L : out.levels) {
      L.epsilon.clear();
      double eps = 0.0;
      for (double s : growth_slack(L.record, gamma)) L.epsilon.push_back(eps += s);
      in.push_back({L.delta, L.alpha, gamma, L.gamma_radius, L.record.e.e, L.epsilon, L.record.w_norm_sq});
    }
    out.limits = limit_quantities(in);
    const long nl = static_cast<long>(out.limits->levels.size());
    V.push_back({"limit_E1_decreasing", nl, out.limits->e1_decreasing ? 0 : 1, 0.0, false});
    V.push_back({"limit_E2_decreasing", nl, out.limits->e2_decreasing ? 0 : 1, 0.0, false});
    V.push_back({"limit_E3_decreasing", nl, out.limits->e3_decreasing ? 0 : 1, 0.0, false});
  }
  for (const auto& v : V)
    if (!v.informational && v.violations > 0) out.pass = false;

  if (write) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    for (const auto& L : out.levels) {
      std::ofstream f(fs::path(cfg.out_dir) / ("level_" + delta_tag(L.delta) + ".csv"));
      write_level_csv(L, f);
    }
    {
      std::ofstream f(fs::path(cfg.out_dir) / "verdicts.csv");
      write_verdicts(V, f);
    }
    if (out.limits) {
      std::ofstream f(fs::path(cfg.out_dir) / "limits.csv");
      f << "delta,alpha,gamma,gamma_level,radius,E1,E2,E3\n";
      for (const auto& l : out.limits->levels) {
        double own = kNaN;
        for (const auto& L : out.levels)
          if (L.delta == l.delta) own = L.gamma;
        f << fmt(l.delta) << ',' << fmt(l.alpha) << ',' << fmt(l.gamma) << ',' << fmt(own) << ',' << fmt(l.radius)
          << ',' << fmt(l.e1) << ',' << fmt(l.e2) << ',' << fmt(l.e3) << '\n';
      }
    }
    std::ofstream f(fs::path(cfg.out_dir) / "fig2.svg");
    write_svg(out.levels, f);
  }
  return out;
}

}  // namespace dynreg
