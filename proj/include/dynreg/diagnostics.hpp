#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "dynreg/batch_oracle.hpp"
#include "dynreg/core.hpp"
#include "dynreg/forward_model.hpp"
#include "dynreg/regularisers.hpp"

namespace dynreg {

/// R(x) - R(xhat) + <v, x - xhat>.
double bregman_r(const std::function<double(const Vec&)>& R, const Vec& x, const Vec& xhat, const Vec& v);
/// Same with R = TV under K.
double bregman_r(const GradientOperator& K, const Vec& x, const Vec& xhat, const Vec& v);

/// Unit dual field y with K^T y in dTV(xhat): y = Kxhat/|Kxhat| where the gradient is
/// nonzero, the hint projected into the unit ball elsewhere.
Field select_subgradient(const GradientOperator& K, const Vec& xhat, const Field& hint, double rel_tol = 1e-9);

struct SourceWitness {
  Vec w;
  double residual = 0.0;  // ||A^T w + vhat||
  double w_norm_sq = 0.0;
  bool ridge_used = false;
};

/// Least-squares w minimising ||A^T w + vhat|| for a linear model.
SourceWitness fit_source_witness(const FrameModel& model, const Vec& vhat);

/// Same, with the normal equations of one operator factorised once.
class WitnessFitter {
 public:
  explicit WitnessFitter(const FrameModel& model);
  SourceWitness fit(const Vec& vhat) const;

 private:
  Eigen::MatrixXd a_;
  Eigen::LDLT<Eigen::MatrixXd> f_;
  bool ridge_ = false;
};

struct NoiseCheck {
  bool pass = true;
  double first = 0.0;   // (1/(N+1)) sum ||W^2 (b - bhat)||^2
  double second = 0.0;  // (1/(N+1)) sum 0.5 ||W (b - bhat)||^2
  double first_bound = 0.0;
  double second_bound = 0.0;
};

/// Both noise-level inequalities over every prefix; pass iff they hold for all of them.
NoiseCheck check_noise_levels(const MeasurementStream& stream, const NoiseSpec& spec);

/// Everything the inequality checks need from one run, one entry per frame.
struct RunRecord {
  double delta = 0.0;
  double alpha = 0.0;
  double c_prime = 1.0;
  double q = 1.0;
  Trajectory x;     // computed (online) trajectory
  Trajectory xhat;  // minimum-R reference
  std::vector<Vec> pred;        // A_k x_k
  std::vector<Vec> pred_hat;    // A_k xhat_k
  std::vector<Vec> lin;         // A_k'(xhat_k)(x_k - xhat_k)
  std::vector<Vec> exact;
  std::vector<Vec> corrupted;
  Vec precision_sq;
  std::vector<Vec> v;           // A_k'(xhat_k)^* w_k, the Bregman shift
  std::vector<double> w_norm_sq;
  std::vector<double> r_x;      // R(x_k)
  std::vector<double> r_hat;    // R(xhat_k)
  EResult e;

  std::size_t frames() const { return x.size(); }
};

struct PrefixSeries {
  std::vector<double> lhs, rhs;
  std::vector<bool> holds;
  long violations() const;
  double worst_margin() const;  // min of rhs - lhs
};

/// Smallest C with l(Ax - bhat) <= C (l(Ax - b) + ||W^2 (b - bhat)||^2) over every prefix.
struct QuadraticBound {
  double C = 0.0;
  std::vector<double> per_prefix;
};
QuadraticBound check_quadratic_bound(const RunRecord& run);

struct LinearisationStats {
  std::vector<double> margin;  // per frame, LHS - eta * RHS
  long negative = 0;
  double worst = 0.0;
};
LinearisationStats check_linearisation(const RunRecord& run, double eta);

/// (1/(N+1)) Bregman <= delta/(2 eta alpha) + e/(alpha (N+1)) + alpha ||w||^2 / (2 eta (N+1)).
PrefixSeries theorem_bregman_check(const RunRecord& run, double eta);
std::vector<double> bregman_per_frame(const RunRecord& run, const GradientOperator& K);

struct BoundConstReport {
  std::vector<double> D;
  PrefixSeries data;  // (1/(N+1)) l(A x - A xhat) <= alpha C D
  PrefixSeries reg;   // (1/(N+1)) R(x) <= D
};
BoundConstReport boundconst_d(const RunRecord& run, double C);

/// Cumulative (1/(N+1)) sum_t ||x_t - truth_t||^2 for every prefix N.
std::vector<double> averaged_sq_error(const Trajectory& x, const Trajectory& truth);

/// Growth slack of Q at xhat for xstar = J'(xhat) - alpha A^* w on the trajectory:
/// per frame max{0, gamma ||h||_{A,o}^2 - (Q(x) - Q(xhat) - <xstar, h>)}.
std::vector<double> growth_slack(const RunRecord& run, double gamma);

/// gamma from bisection of the strong certificate on a three-pixel blur instance with the
/// same weights and regulariser scaling; the neighbourhood radius is returned in `radius`.
double estimate_growth_factor(double alpha, double precision_sq, double spacing, double& radius);

struct LimitLevel {
  double delta = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double radius = 0.0;
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;  // tail averages
};

struct LimitTable {
  std::vector<LimitLevel> levels;  // sorted by decreasing delta
  bool e1_decreasing = false, e2_decreasing = false, e3_decreasing = false;
};

struct LimitInput {
  double delta = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double radius = 0.0;
  std::vector<double> e;          // e^N per prefix
  std::vector<double> epsilon;    // epsilon^N per prefix
  std::vector<double> w_norm_sq;  // per frame
};

/// Tail-averaged (last quarter of the prefixes) E1..E3 and strict-decrease verdicts.
LimitTable limit_quantities(const std::vector<LimitInput>& runs, double tail_fraction = 0.25);

struct VerdictLine {
  std::string name;
  long checked = 0;
  long violations = 0;
  double worst_margin = 0.0;
  bool informational = false;  // reported, not pass/fail
};

void write_verdicts(const std::vector<VerdictLine>& lines, std::ostream& os);

/// Constructed degenerate instance: frames (x0, a, b, x3), A observes x0 and x3, TV regulariser,
/// solution set {x0 = 1, x3 = 2, 1 <= a <= b <= 2}.
struct SemiStrongReport {
  std::vector<double> lhs, rhs;  // per prefix
  long violations = 0;
  double gamma = 0.0;
  double worst_margin = 0.0;
  std::vector<double> delta_levels;
};
SemiStrongReport semistrong_check(const std::vector<double>& deltas, long horizon, std::uint64_t seed);

/// Squared distance from a 4-pixel frame to the degenerate solution set: pool (a, b) when out of
/// order, then clamp to [1, 2].
double semistrong_dist_sq(const Vec& x);

}  // namespace dynreg
