#include "dynreg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>

#include "dynreg/convex_oracle.hpp"
#include "dynreg/errors.hpp"
#include "dynreg/forward_linear.hpp"
#include "dynreg/online_solver.hpp"

namespace dynreg {

namespace {

void require_frames(const RunRecord& run) {
  const std::size_t n = run.frames();
  if (run.xhat.size() != n || run.pred.size() != n || run.pred_hat.size() != n || run.exact.size() < n ||
      run.corrupted.size() < n || run.v.size() != n || run.w_norm_sq.size() != n || run.r_x.size() != n ||
      run.r_hat.size() != n || run.e.e.size() != n)
    throw DimensionError("run record fields have inconsistent frame counts");
}

double wnorm_sq(const Vec& r, const Vec& w2) { return r.dot(w2.cwiseProduct(r)); }

}  // namespace

double bregman_r(const std::function<double(const Vec&)>& R, const Vec& x, const Vec& xhat, const Vec& v) {
  if (x.size() != xhat.size() || v.size() != x.size()) throw DimensionError("bregman_r: size mismatch");
  return R(x) - R(xhat) + v.dot(x - xhat);
}

double bregman_r(const GradientOperator& K, const Vec& x, const Vec& xhat, const Vec& v) {
  return tv_value(K, x) - tv_value(K, xhat) + v.dot(x - xhat);
}

Field select_subgradient(const GradientOperator& K, const Vec& xhat, const Field& hint, double rel_tol) {
  const Field g = K.apply(xhat);
  const Vec n = site_norms(g);
  const double scale = std::max(n.maxCoeff(), std::numeric_limits<double>::min());
  Field y = hint.cols() == g.cols() ? project_dual_ball(DualBall(1.0), hint) : Field(Field::Zero(2, g.cols()));
  for (long s = 0; s < g.cols(); ++s)
    if (n[s] > rel_tol * scale) y.col(s) = g.col(s) / n[s];
  return y;
}

WitnessFitter::WitnessFitter(const FrameModel& model) {
  if (!model.is_linear()) throw UnsupportedError("source witness fitting needs a linear model");
  const long n = static_cast<long>(model.input_dim()), m = static_cast<long>(model.output_dim());
  a_.resize(m, n);
  Vec e = Vec::Zero(n);
  for (long j = 0; j < n; ++j) {
    e[j] = 1.0;
    a_.col(j) = model.apply(e);
    e[j] = 0.0;
  }
  const Eigen::MatrixXd g = a_ * a_.transpose();
  f_.compute(g);
  const double tiny = 1e-12 * std::max(1.0, g.diagonal().maxCoeff());
  if (f_.info() != Eigen::Success || (f_.vectorD().array().abs() <= tiny).any()) {
    f_.compute(g + 1e-10 * Eigen::MatrixXd::Identity(m, m));
    ridge_ = true;
  }
}

SourceWitness WitnessFitter::fit(const Vec& vhat) const {
  if (vhat.size() != a_.cols()) throw DimensionError("vhat has the wrong size");
  SourceWitness out;
  if (vhat.isZero(0.0)) {
    out.w = Vec::Zero(a_.rows());
    return out;
  }
  out.w = f_.solve(-(a_ * vhat));
  out.ridge_used = ridge_;
  out.residual = (a_.transpose() * out.w + vhat).norm();
  out.w_norm_sq = out.w.squaredNorm();
  return out;
}

SourceWitness fit_source_witness(const FrameModel& model, const Vec& vhat) { return WitnessFitter(model).fit(vhat); }

NoiseCheck check_noise_levels(const MeasurementStream& stream, const NoiseSpec& spec) {
  stream.validate();
  NoiseCheck out;
  out.first_bound = spec.delta;
  out.second_bound = spec.c_prime * std::pow(spec.delta, spec.q);
  const Vec w2 = stream.precision_sq();
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < stream.frames(); ++k) {
    const Vec n = stream.corrupted[k] - stream.exact[k];
    s1 += w2.cwiseProduct(n).squaredNorm();
    s2 += 0.5 * wnorm_sq(n, w2);
    const double a1 = s1 / static_cast<double>(k + 1), a2 = s2 / static_cast<double>(k + 1);
    out.first = std::max(out.first, a1);
    out.second = std::max(out.second, a2);
  }
  out.pass = out.first <= out.first_bound && out.second <= out.second_bound;
  return out;
}

long PrefixSeries::violations() const { return static_cast<long>(std::count(holds.begin(), holds.end(), false)); }

double PrefixSeries::worst_margin() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lhs.size(); ++i) m = std::min(m, rhs[i] - lhs[i]);
  return m;
}

QuadraticBound check_quadratic_bound(const RunRecord& run) {
  require_frames(run);
  QuadraticBound out;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < run.frames(); ++k) {
    num += 0.5 * wnorm_sq(run.pred[k] - run.exact[k], run.precision_sq);
    den += 0.5 * wnorm_sq(run.pred[k] - run.corrupted[k], run.precision_sq) +
           run.precision_sq.cwiseProduct(run.corrupted[k] - run.exact[k]).squaredNorm();
    const double c = den > 0.0 ? num / den : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    out.per_prefix.push_back(c);
    out.C = std::max(out.C, c);
  }
  return out;
}

LinearisationStats check_linearisation(const RunRecord& run, double eta) {
  require_frames(run);
  if (run.lin.size() != run.frames()) throw DimensionError("linearisation needs A'(xhat)(x - xhat) per frame");
  LinearisationStats out;
  out.worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < run.frames(); ++k) {
    const Vec dpred = run.pred[k] - run.pred_hat[k];
    const Vec lhs_noise = run.precision_sq.cwiseProduct(run.exact[k] - run.corrupted[k]);
    const double lhs = lhs_noise.dot(dpred - run.lin[k]) + 0.5 * wnorm_sq(dpred, run.precision_sq);
    const double m = lhs - eta * run.lin[k].squaredNorm();
    out.margin.push_back(m);
    if (m < 0.0) ++out.negative;
    out.worst = std::min(out.worst, m);
  }
  return out;
}

std::vector<double> bregman_per_frame(const RunRecord& run, const GradientOperator&) {
  require_frames(run);
  std::vector<double> b;
  for (std::size_t k = 0; k < run.frames(); ++k) b.push_back(run.r_x[k] - run.r_hat[k] + run.v[k].dot(run.x[k] - run.xhat[k]));
  return b;
}

PrefixSeries theorem_bregman_check(const RunRecord& run, double eta) {
  require_frames(run);
  if (!(eta > 0.0) || !(run.alpha > 0.0)) throw PreconditionError("eta and alpha must be positive");
  PrefixSeries out;
  double breg = 0.0, wsq = 0.0;
  for (std::size_t k = 0; k < run.frames(); ++k) {
    breg += run.r_x[k] - run.r_hat[k] + run.v[k].dot(run.x[k] - run.xhat[k]);
    wsq += run.w_norm_sq[k];
    const double n1 = static_cast<double>(k + 1);
    const double lhs = breg / n1;
    const double rhs = run.delta / (2.0 * eta * run.alpha) + run.e.e[k] / (run.alpha * n1) +
                       run.alpha * wsq / (2.0 * eta * n1);
    out.lhs.push_back(lhs);
    out.rhs.push_back(rhs);
    out.holds.push_back(lhs <= rhs);
  }
  return out;
}

BoundConstReport boundconst_d(const RunRecord& run, double C) {
  require_frames(run);
  BoundConstReport out;
  double rhat = 0.0, rx = 0.0, lsum = 0.0;
  const double base = (run.c_prime * std::pow(run.delta, run.q) + run.delta) / run.alpha;
  for (std::size_t k = 0; k < run.frames(); ++k) {
    const double n1 = static_cast<double>(k + 1);
    rhat += run.r_hat[k];
    rx += run.r_x[k];
    lsum += 0.5 * wnorm_sq(run.pred[k] - run.pred_hat[k], run.precision_sq);
    const double D = base + run.e.e[k] / (run.alpha * n1) + rhat / n1;
    out.D.push_back(D);
    out.data.lhs.push_back(lsum / n1);
    out.data.rhs.push_back(run.alpha * C * D);
    out.data.holds.push_back(lsum / n1 <= run.alpha * C * D);
    out.reg.lhs.push_back(rx / n1);
    out.reg.rhs.push_back(D);
    out.reg.holds.push_back(rx / n1 <= D);
  }
  return out;
}

std::vector<double> averaged_sq_error(const Trajectory& x, const Trajectory& truth) {
  if (x.size() > truth.size()) throw DimensionError("truth shorter than trajectory");
  std::vector<double> out;
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k].size() != truth[k].size()) throw DimensionError("frame size mismatch");
    s += (x[k] - truth[k]).squaredNorm();
    out.push_back(s / static_cast<double>(k + 1));
  }
  return out;
}

std::vector<double> growth_slack(const RunRecord& run, double gamma) {
  require_frames(run);
  std::vector<double> out;
  for (std::size_t k = 0; k < run.frames(); ++k) {
    // Q(x) - Q(xhat) - <J'(xhat) - alpha A^* w, h> = B_l + alpha * Bregman for quadratic l
    const Vec dpred = run.pred[k] - run.pred_hat[k];
    const double bl = 0.5 * wnorm_sq(dpred, run.precision_sq) +
                      run.precision_sq.cwiseProduct(run.pred_hat[k] - run.corrupted[k]).dot(dpred - run.lin[k]);
    const double br = run.r_x[k] - run.r_hat[k] + run.v[k].dot(run.x[k] - run.xhat[k]);
    const Vec h = run.x[k] - run.xhat[k];
    const double norm_sq = run.lin[k].squaredNorm() + h.squaredNorm();
    out.push_back(std::max(0.0, gamma * norm_sq - (bl + run.alpha * br)));
  }
  return out;
}

double estimate_growth_factor(double alpha, double precision_sq, double spacing, double& radius) {
  using namespace oracle;
  const Eigen::Matrix3d A = (Eigen::Matrix3d() << 0.5, 0.25, 0.0, 0.25, 0.5, 0.25, 0.0, 0.25, 0.5).finished();
  const Eigen::Vector3d xhat(1.0, 1.0, 2.0);
  radius = 0.5;
  auto tv = [spacing](const Point& x) { return spacing * (std::abs(x[1] - x[0]) + std::abs(x[2] - x[1])); };
  const Lattice lat({xhat[0] - radius, xhat[1] - radius, xhat[2] - radius},
                    {xhat[0] + radius, xhat[1] + radius, xhat[2] + radius}, {21, 21, 21});
  const GridFunction f = GridFunction::sample(lat, [&](const Point& x) {
    const Eigen::Vector3d r = A * (x - xhat);
    return 0.5 * precision_sq * r.squaredNorm() + alpha * tv(x);
  });
  // unit dual field y = (0, 1): vhat = spacing * D^T y = spacing * (0, -1, 1); xstar = alpha * vhat
  SubdiffCertificate cert;
  cert.point = xhat;
  cert.slope = alpha * spacing * Eigen::Vector3d(0.0, -1.0, 1.0);
  cert.radius = radius * std::sqrt(3.0) + 1e-9;
  cert.mode = CertMode::strong;
  cert.seminorm = [A](const Point& h) { return std::sqrt((A * h).squaredNorm() + h.squaredNorm()); };
  return largest_valid_gamma(f, cert, 0.5 * precision_sq, 50);
}

LimitTable limit_quantities(const std::vector<LimitInput>& runs, double tail_fraction) {
  if (runs.size() < 3) throw PreconditionError("limit quantities need at least three noise levels");
  LimitTable t;
  for (const auto& r : runs) {
    if (r.e.empty() || r.e.size() != r.epsilon.size() || r.e.size() != r.w_norm_sq.size())
      throw DimensionError("limit input series must share the horizon");
    if (!(r.gamma > 0.0)) throw PreconditionError("growth factor must be positive");
    LimitLevel lv;
    lv.delta = r.delta;
    lv.alpha = r.alpha;
    lv.gamma = r.gamma;
    lv.radius = r.radius;
    const std::size_t n = r.e.size();
    const std::size_t start = n - std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(tail_fraction * n)));
    double wsq = 0.0;
    long cnt = 0;
    for (std::size_t k = 0; k < n; ++k) {
      wsq += r.w_norm_sq[k];
      if (k < start) continue;
      const double n1 = static_cast<double>(k + 1);
      lv.e1 += (r.e[k] + r.epsilon[k]) / (n1 * r.gamma);
      lv.e3 += r.alpha * r.alpha * wsq / (n1 * r.gamma * r.gamma);
      ++cnt;
    }
    lv.e1 /= cnt;
    lv.e3 /= cnt;
    lv.e2 = r.delta / (r.gamma * r.gamma);
    t.levels.push_back(lv);
  }
  std::sort(t.levels.begin(), t.levels.end(), [](const LimitLevel& a, const LimitLevel& b) { return a.delta > b.delta; });
  auto decreasing = [&](auto get) {
    for (std::size_t i = 1; i < t.levels.size(); ++i)
      if (!(get(t.levels[i]) < get(t.levels[i - 1]))) return false;
    return true;
  };
  t.e1_decreasing = decreasing([](const LimitLevel& l) { return l.e1; });
  t.e2_decreasing = decreasing([](const LimitLevel& l) { return l.e2; });
  t.e3_decreasing = decreasing([](const LimitLevel& l) { return l.e3; });
  return t;
}

void write_verdicts(const std::vector<VerdictLine>& lines, std::ostream& os) {
  os << "name,frames_checked,violations,worst_margin,kind\n";
  for (const auto& l : lines) {
    os << l.name << "," << l.checked << "," << l.violations << "," << std::setprecision(10) << l.worst_margin << ","
       << (l.informational ? "report" : "check") << "\n";
  }
}

double semistrong_dist_sq(const Vec& x) {
  if (x.size() != 4) throw DimensionError("degenerate instance frames have four pixels");
  double a = x[1], b = x[2];
  if (a > b) a = b = 0.5 * (a + b);  // isotonic projection
  a = std::clamp(a, 1.0, 2.0);
  b = std::clamp(b, 1.0, 2.0);
  return (x[0] - 1.0) * (x[0] - 1.0) + (x[1] - a) * (x[1] - a) + (x[2] - b) * (x[2] - b) + (x[3] - 2.0) * (x[3] - 2.0);
}

SemiStrongReport semistrong_check(const std::vector<double>& deltas, long horizon, std::uint64_t seed) {
  if (deltas.empty() || horizon < 0) throw PreconditionError("semi-strong check needs noise levels and a horizon");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 4);
  a(0, 0) = 1.0;
  a(1, 3) = 1.0;
  auto model = std::make_shared<LinearFrameOperator>(LinearFrameOperator::from_matrix(a));
  auto K = std::make_shared<GridGradient>(4, 1, 1.0);
  const Vec xhat = (Vec(4) << 1.0, 1.5, 1.5, 2.0).finished();
  const Vec bhat = a * xhat;
  const Vec w = (Vec(2) << 1.0, -1.0).finished();
  const Vec v = a.transpose() * w;  // (1, 0, 0, -1); -v = K^T y for y = (1, 1, 1) in dTV(xhat)
  const double w_sq = w.squaredNorm();

  // brute-forced solution set: (a, b) lattice points with minimal TV under the pinned ends
  std::vector<Eigen::Vector2d> solset;
  {
    const double lo = 0.5, step = 0.01;
    const int n = 201;
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, Eigen::Vector2d>> all;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Vec x = (Vec(4) << 1.0, lo + i * step, lo + j * step, 2.0).finished();
        const double tv = tv_value(*K, x);
        best = std::min(best, tv);
        all.emplace_back(tv, Eigen::Vector2d(x[1], x[2]));
      }
    for (const auto& [tv, p] : all)
      if (tv <= best + 1e-12) solset.push_back(p);
  }
  auto dist_sq = [&](const Vec& x) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& p : solset) m = std::min(m, (x[1] - p[0]) * (x[1] - p[0]) + (x[2] - p[1]) * (x[2] - p[1]));
    return m + (x[0] - 1.0) * (x[0] - 1.0) + (x[3] - 2.0) * (x[3] - 2.0);
  };

  SemiStrongReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (double delta : deltas) {
    const double alpha = alpha_schedule(delta);
    MeasurementStream stream;
    stream.exact.assign(static_cast<std::size_t>(horizon + 1), bhat);
    stream.precision = Vec::Ones(2);
    NoiseSpec ns;
    ns.delta = delta;
    ns.seed = seed;
    stream = generate_noise(stream, ns);

    OnlineProblem p;
    p.models = {model};
    p.data = stream.corrupted;
    p.precision_sq = stream.precision_sq();
    p.K = K;
    p.box = BoxConstraint(0.0, 3.0);
    p.alpha = alpha;
    p.step = StepParams{0.3, 0.5};
    p.predictor.primal = PrimalPredictor::zero_motion;
    p.predictor.dual = DualPredictor::identity;
    p.x_init = Vec::Constant(4, 1.5);
    const OnlineResult run = run_online(p, horizon);

    // growth factor of Q at xhat for xstar = J'(xhat) - alpha A^T w, with respect to the solution set:
    // Q(x) - Q(xhat) - <xstar, h> = 0.5 ||A h||^2 + alpha * Bregman, independent of the data
    auto growth = [&](const Vec& x) {
      const Vec h = x - xhat;
      return 0.5 * (a * h).squaredNorm() + alpha * (tv_value(*K, x) - tv_value(*K, xhat) + v.dot(h));
    };
    std::mt19937_64 rng(seed ^ 0x5e31u);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    std::vector<Vec> samples(run.x.frames);
    for (int i = 0; i < 20000; ++i) {
      Vec u(4);
      for (int c = 0; c < 4; ++c) u[c] = gauss(rng);
      samples.push_back(xhat + u.normalized() * std::pow(unif(rng), 0.25));
    }
    double gamma = std::numeric_limits<double>::infinity();
    for (const auto& x : samples) {
      const double den = (a * (x - xhat)).squaredNorm() + semistrong_dist_sq(x);
      if (den > 1e-14) gamma = std::min(gamma, growth(x) / den);
    }
    rep.gamma = rep.gamma == 0.0 ? gamma : std::min(rep.gamma, gamma);

    double dsum = 0.0, cum = 0.0;
    for (long k = 0; k <= horizon; ++k) {
      const Vec& x = run.x[static_cast<std::size_t>(k)];
      dsum += dist_sq(x);
      const Vec& b = stream.corrupted[static_cast<std::size_t>(k)];
      cum += frame_objective(*model, x, b, p.precision_sq, *K, alpha) -
             frame_objective(*model, xhat, b, p.precision_sq, *K, alpha);
      const double e = std::max(0.0, cum);
      const double n1 = static_cast<double>(k + 1);
      const double lhs = dsum / n1;
      const double rhs = e / (n1 * gamma) + delta / (2.0 * gamma * gamma) + alpha * alpha * w_sq * n1 / (2.0 * n1 * gamma * gamma);
      rep.lhs.push_back(lhs);
      rep.rhs.push_back(rhs);
      rep.delta_levels.push_back(delta);
      if (!(lhs <= rhs)) ++rep.violations;
      rep.worst_margin = std::min(rep.worst_margin, rhs - lhs);
    }
  }
  return rep;
}

}  // namespace dynreg
