#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dynreg/errors.hpp"

namespace dynreg::oracle {

using Point = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Axis-aligned uniform lattice in R^d, d <= 3, at most 201 points per axis.
struct Lattice {
  std::vector<double> lo, hi;
  std::vector<int> count;

  Lattice() = default;
  Lattice(std::vector<double> lo_, std::vector<double> hi_, std::vector<int> count_);
  static Lattice uniform(int dim, double lo, double hi, int count);

  int dim() const { return static_cast<int>(count.size()); }
  std::size_t size() const;
  double step(int axis) const;
  std::vector<int> multi_index(std::size_t idx) const;
  std::size_t flat_index(const std::vector<int>& mi) const;
  Point point(std::size_t idx) const;
  /// Nearest lattice point; nullopt when p lies more than half a step outside the box.
  std::optional<std::size_t> nearest(const Point& p, double* snap = nullptr) const;
  bool contains_exact(const Point& p, std::size_t* idx = nullptr, double tol = 1e-9) const;
  /// Lattice of the Minkowski sum; both lattices must share per-axis steps.
  Lattice minkowski_sum(const Lattice& other) const;
};

/// Extended-real function sampled on a lattice; +infinity marks points outside the domain.
struct GridFunction {
  Lattice lattice;
  std::vector<double> values;
  double snap_bias = 0.0;  // largest off-lattice rounding distance used while building it

  GridFunction() = default;
  GridFunction(Lattice l, std::vector<double> v);
  static GridFunction sample(const Lattice& l, const std::function<double(const Point&)>& f);

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double at(const Point& p) const;  // +inf off the lattice box
  bool has_finite() const;
  std::string to_csv() const;
};

/// Sentinel-aware addition: inf + finite = inf.
double ext_add(double a, double b);

double conjugate_at(const GridFunction& f, const Point& xstar);
GridFunction conjugate(const GridFunction& f, const Lattice& dual);

/// Exact infimal convolution on the Minkowski-sum lattice.
GridFunction infconv(const GridFunction& g, const GridFunction& h);
/// Infimal convolution evaluated on an arbitrary output lattice, snapping x - x~ to h's lattice.
GridFunction infconv_on(const GridFunction& g, const GridFunction& h, const Lattice& out);
/// Index into g's lattice of the lowest-index minimising split for output point x.
std::optional<std::size_t> infconv_argmin(const GridFunction& g, const GridFunction& h, const Point& x);

/// Throws PreconditionError naming the first violated seminorm axiom.
void check_seminorm(const GridFunction& g, const std::string& name, double tol = 1e-9);
/// F = sqrt(g^2 box h^2) on g's lattice.
GridFunction sqrt_infconv_seminorm(const GridFunction& g, const GridFunction& h);

/// Discrete midpoint convexity along axes and diagonals.
bool is_midpoint_convex(const GridFunction& f, double tol = 1e-10, std::size_t* witness = nullptr);

bool subdiff_contains(const GridFunction& f, const Point& x, const Point& xstar, double tol = 1e-10);

enum class CertMode { strong, semi_strong, plain };

struct SubdiffCertificate {
  Point point;
  Point slope;
  double gamma = 0.0;
  double epsilon = 0.0;
  double radius = 1.0;
  CertMode mode = CertMode::strong;
  /// Optional replacement for the Euclidean norm in the growth term (must return the norm, not its square).
  std::function<double(const Point&)> seminorm;
};

struct CertifyResult {
  bool valid = true;
  double worst_violation = 0.0;  // max of rhs - lhs over the neighbourhood
  Point worst_point;
  std::size_t checked = 0;
  std::size_t solution_set_size = 0;
};

CertifyResult certify_subdiff(const GridFunction& f, const SubdiffCertificate& cert, double tol = 1e-10);
/// Largest gamma in [0, gamma_hi] (bisection) for which certify_subdiff passes.
double largest_valid_gamma(const GridFunction& f, SubdiffCertificate cert, double gamma_hi, int iterations = 40);

struct SetInfconvCheck {
  GridFunction lhs;  // (g* + indicator_U)_* by brute force
  GridFunction rhs;  // [g box support(conv U)]** via lattice conjugates
  double max_gap = 0.0;
};

/// pre: U nonempty (PreconditionError otherwise).
SetInfconvCheck set_infconv_formula_check(const GridFunction& g, const std::vector<Point>& u_set,
                                          const Lattice& dual);

/// (g* + indicator_P)_* evaluated on g's lattice, for a finite point set P.
GridFunction set_preconjugate(const GridFunction& g, const std::vector<Point>& p_set);
/// Dual-lattice points inside conv U, plus U itself (d = 1 or 2).
std::vector<Point> hull_samples(const std::vector<Point>& u_set, const Lattice& dual);
bool in_convex_hull(const std::vector<Point>& u_set, const Point& p, double tol = 1e-12);

}  // namespace dynreg::oracle
