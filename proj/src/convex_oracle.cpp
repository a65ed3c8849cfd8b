#include "dynreg/convex_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dynreg::oracle {

namespace {

constexpr int kMaxDim = 3;
constexpr int kMaxPerAxis = 201;

std::string fmt_point(const Point& p) {
  std::ostringstream os;
  os << "(";
  for (long i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

// Nonzero direction vectors in {-1,0,1}^d, one per +/- pair.
std::vector<std::vector<int>> midpoint_directions(int d) {
  std::vector<std::vector<int>> dirs;
  int total = 1;
  for (int i = 0; i < d; ++i) total *= 3;
  for (int code = 0; code < total; ++code) {
    std::vector<int> e(d);
    int c = code;
    for (int i = 0; i < d; ++i) {
      e[i] = c % 3 - 1;
      c /= 3;
    }
    int first = 0;
    for (int v : e)
      if (v != 0) {
        first = v;
        break;
      }
    if (first == 1) dirs.push_back(e);
  }
  return dirs;
}

}  // namespace

double ext_add(double a, double b) {
  if (a == kInf || b == kInf) return kInf;
  return a + b;
}

Lattice::Lattice(std::vector<double> lo_, std::vector<double> hi_, std::vector<int> count_)
    : lo(std::move(lo_)), hi(std::move(hi_)), count(std::move(count_)) {
  if (lo.size() != hi.size() || lo.size() != count.size()) throw DimensionError("lattice bounds differ in dimension");
  if (count.empty() || static_cast<int>(count.size()) > kMaxDim)
    throw PreconditionError("lattice dimension must be between 1 and 3");
  for (std::size_t a = 0; a < count.size(); ++a) {
    if (count[a] < 1 || count[a] > kMaxPerAxis) throw PreconditionError("lattice axis needs 1..201 points");
    if (count[a] == 1 && lo[a] != hi[a]) throw PreconditionError("single-point axis needs lo == hi");
    if (count[a] > 1 && !(hi[a] > lo[a])) throw PreconditionError("lattice axis must be strictly increasing");
  }
}

Lattice Lattice::uniform(int dim, double lo, double hi, int count) {
  return Lattice(std::vector<double>(dim, lo), std::vector<double>(dim, hi), std::vector<int>(dim, count));
}

std::size_t Lattice::size() const {
  std::size_t n = 1;
  for (int c : count) n *= static_cast<std::size_t>(c);
  return n;
}

double Lattice::step(int axis) const {
  return count[axis] > 1 ? (hi[axis] - lo[axis]) / (count[axis] - 1) : 0.0;
}

std::vector<int> Lattice::multi_index(std::size_t idx) const {
  std::vector<int> mi(count.size());
  for (int a = dim() - 1; a >= 0; --a) {
    mi[a] = static_cast<int>(idx % static_cast<std::size_t>(count[a]));
    idx /= static_cast<std::size_t>(count[a]);
  }
  return mi;
}

std::size_t Lattice::flat_index(const std::vector<int>& mi) const {
  std::size_t idx = 0;
  for (int a = 0; a < dim(); ++a) idx = idx * static_cast<std::size_t>(count[a]) + static_cast<std::size_t>(mi[a]);
  return idx;
}

Point Lattice::point(std::size_t idx) const {
  const auto mi = multi_index(idx);
  Point p(dim());
  for (int a = 0; a < dim(); ++a) p[a] = count[a] > 1 ? lo[a] + mi[a] * step(a) : lo[a];
  return p;
}

std::optional<std::size_t> Lattice::nearest(const Point& p, double* snap) const {
  if (p.size() != dim()) throw DimensionError("point dimension does not match lattice");
  std::vector<int> mi(count.size());
  double s2 = 0.0;
  for (int a = 0; a < dim(); ++a) {
    double v = p[a];
    if (count[a] == 1) {
      if (std::abs(v - lo[a]) > 1e-9 * (1.0 + std::abs(lo[a]))) return std::nullopt;
      mi[a] = 0;
      continue;
    }
    const double h = step(a);
    const double r = std::round((v - lo[a]) / h);
    if (r < 0 || r > count[a] - 1) return std::nullopt;
    mi[a] = static_cast<int>(r);
    const double d = v - (lo[a] + r * h);
    s2 += d * d;
  }
  if (snap) *snap = std::sqrt(s2);
  return flat_index(mi);
}

bool Lattice::contains_exact(const Point& p, std::size_t* idx, double tol) const {
  double snap = 0.0;
  auto i = nearest(p, &snap);
  if (!i) return false;
  double scale = 1.0;
  for (int a = 0; a < dim(); ++a) scale = std::max(scale, step(a));
  if (snap > tol * scale) return false;
  if (idx) *idx = *i;
  return true;
}

Lattice Lattice::minkowski_sum(const Lattice& other) const {
  if (other.dim() != dim()) throw DimensionError("Minkowski sum of lattices of different dimension");
  std::vector<double> l(dim()), h(dim());
  std::vector<int> c(dim());
  for (int a = 0; a < dim(); ++a) {
    const double s1 = step(a), s2 = other.step(a);
    if (count[a] > 1 && other.count[a] > 1 && std::abs(s1 - s2) > 1e-9 * std::max(s1, s2))
      throw PreconditionError("lattices must share per-axis steps");
    l[a] = lo[a] + other.lo[a];
    h[a] = hi[a] + other.hi[a];
    c[a] = count[a] + other.count[a] - 1;
  }
  return Lattice(l, h, c);
}

GridFunction::GridFunction(Lattice l, std::vector<double> v) : lattice(std::move(l)), values(std::move(v)) {
  if (values.size() != lattice.size()) throw DimensionError("grid function size does not match its lattice");
  bool any = false;
  for (double x : values) {
    if (std::isnan(x)) throw PropernessError("grid function contains NaN");
    if (x == -kInf) throw PropernessError("grid function takes the value -inf");
    if (x == std::numeric_limits<double>::max() || x == -std::numeric_limits<double>::max())
      throw PropernessError("largest finite double is reserved; use +inf for points outside the domain");
    if (x != kInf) any = true;
  }
  if (!any) throw PropernessError("grid function is identically +inf");
}

GridFunction GridFunction::sample(const Lattice& l, const std::function<double(const Point&)>& f) {
  std::vector<double> v(l.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(l.point(i));
  return GridFunction(l, std::move(v));
}

double GridFunction::at(const Point& p) const {
  std::size_t i = 0;
  if (!lattice.contains_exact(p, &i)) return kInf;
  return values[i];
}

bool GridFunction::has_finite() const {
  return std::any_of(values.begin(), values.end(), [](double x) { return x != kInf; });
}

std::string GridFunction::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  for (int a = 0; a < lattice.dim(); ++a) os << "x" << a << ",";
  os << "value\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto p = lattice.point(i);
    for (int a = 0; a < lattice.dim(); ++a) os << p[a] << ",";
    if (values[i] == kInf)
      os << "inf\n";
    else
      os << values[i] << "\n";
  }
  return os.str();
}

double conjugate_at(const GridFunction& f, const Point& xstar) {
  if (xstar.size() != f.lattice.dim()) throw DimensionError("dual point dimension mismatch");
  double best = -kInf;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == kInf) continue;
    best = std::max(best, xstar.dot(f.lattice.point(i)) - f[i]);
  }
  if (best == -kInf) throw PropernessError("conjugate of an improper grid function");
  return best;
}

GridFunction conjugate(const GridFunction& f, const Lattice& dual) {
  if (!f.has_finite()) throw PropernessError("conjugate of an identically +inf function");
  if (dual.dim() != f.lattice.dim()) throw DimensionError("dual lattice dimension mismatch");
  const int d = f.lattice.dim();
  std::vector<std::size_t> fin;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] != kInf) fin.push_back(i);
  Eigen::MatrixXd P(d, static_cast<long>(fin.size()));
  Eigen::VectorXd fv(static_cast<long>(fin.size()));
  for (std::size_t j = 0; j < fin.size(); ++j) {
    P.col(static_cast<long>(j)) = f.lattice.point(fin[j]);
    fv[static_cast<long>(j)] = f[fin[j]];
  }
  std::vector<double> out(dual.size());
  for (std::size_t i = 0; i < dual.size(); ++i) {
    const Point xs = dual.point(i);
    out[i] = ((xs.transpose() * P).transpose() - fv).maxCoeff();
  }
  return GridFunction(dual, std::move(out));
}

GridFunction infconv(const GridFunction& g, const GridFunction& h) {
  const Lattice out = g.lattice.minkowski_sum(h.lattice);
  const int d = out.dim();
  std::vector<double> vals(out.size(), kInf);
  std::vector<std::vector<int>> gmi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) gmi[i] = g.lattice.multi_index(i);
  std::vector<int> mh(d);
  for (std::size_t o = 0; o < out.size(); ++o) {
    const auto mo = out.multi_index(o);
    double best = kInf;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] == kInf) continue;
      bool ok = true;
      for (int a = 0; a < d; ++a) {
        mh[a] = mo[a] - gmi[i][a];
        if (mh[a] < 0 || mh[a] >= h.lattice.count[a]) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      const double v = ext_add(g[i], h[h.lattice.flat_index(mh)]);
      if (v < best) best = v;
    }
    vals[o] = best;
  }
  return GridFunction(out, std::move(vals));
}

GridFunction infconv_on(const GridFunction& g, const GridFunction& h, const Lattice& out) {
  std::vector<double> vals(out.size(), kInf);
  double bias = 0.0;
  for (std::size_t o = 0; o < out.size(); ++o) {
    const Point x = out.point(o);
    double best = kInf, best_snap = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] == kInf) continue;
      double snap = 0.0;
      auto j = h.lattice.nearest(x - g.lattice.point(i), &snap);
      if (!j) continue;
      const double v = ext_add(g[i], h[*j]);
      if (v < best) {
        best = v;
        best_snap = snap;
      }
    }
    vals[o] = best;
    if (best != kInf) bias = std::max(bias, best_snap);
  }
  GridFunction f(out, std::move(vals));
  f.snap_bias = bias;
  return f;
}

std::optional<std::size_t> infconv_argmin(const GridFunction& g, const GridFunction& h, const Point& x) {
  double best = kInf;
  std::optional<std::size_t> arg;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == kInf) continue;
    auto j = h.lattice.nearest(x - g.lattice.point(i));
    if (!j) continue;
    const double v = ext_add(g[i], h[*j]);
    if (v < best) {
      best = v;
      arg = i;
    }
  }
  return arg;
}

void check_seminorm(const GridFunction& g, const std::string& name, double tol) {
  const Lattice& L = g.lattice;
  std::size_t zero = 0;
  if (!L.contains_exact(Point::Zero(L.dim()), &zero))
    throw PreconditionError(name + ": lattice must contain the origin to test seminorm axioms");
  if (std::abs(g[zero]) > tol) throw PreconditionError(name + " violates zero at origin");
  double scale = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == kInf || g[i] < -tol)
      throw PreconditionError(name + " violates nonnegativity at " + fmt_point(L.point(i)));
    scale = std::max(scale, g[i]);
  }
  const double atol = tol * (1.0 + scale);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = L.point(i);
    for (double lam : {-1.0, 2.0, 0.5, 3.0}) {
      std::size_t j = 0;
      if (!L.contains_exact(lam * x, &j)) continue;
      if (std::abs(g[j] - std::abs(lam) * g[i]) > atol)
        throw PreconditionError(name + " violates positive homogeneity at " + fmt_point(x));
    }
  }
  // triangle inequality on a deterministic subsample of pairs
  const std::size_t n = g.size();
  const std::size_t stride = std::max<std::size_t>(1, n / 300);
  for (std::size_t i = 0; i < n; i += stride) {
    const Point x = L.point(i);
    for (std::size_t k = 0; k < n; k += stride) {
      std::size_t j = 0;
      if (!L.contains_exact(x + L.point(k), &j)) continue;
      if (g[j] > g[i] + g[k] + atol)
        throw PreconditionError(name + " violates the triangle inequality at " + fmt_point(x) + " + " +
                                fmt_point(L.point(k)));
    }
  }
}

GridFunction sqrt_infconv_seminorm(const GridFunction& g, const GridFunction& h) {
  check_seminorm(g, "g");
  check_seminorm(h, "h");
  std::vector<double> g2(g.size()), h2(h.size());
  for (std::size_t i = 0; i < g.size(); ++i) g2[i] = g[i] * g[i];
  for (std::size_t i = 0; i < h.size(); ++i) h2[i] = h[i] * h[i];
  GridFunction ic = infconv_on(GridFunction(g.lattice, g2), GridFunction(h.lattice, h2), g.lattice);
  for (auto& v : ic.values) v = std::sqrt(std::max(0.0, v));
  return ic;
}

bool is_midpoint_convex(const GridFunction& f, double tol, std::size_t* witness) {
  const Lattice& L = f.lattice;
  const int d = L.dim();
  const auto dirs = midpoint_directions(d);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto mi = L.multi_index(i);
    for (const auto& e : dirs) {
      std::vector<int> a(mi), b(mi);
      bool ok = true;
      for (int k = 0; k < d; ++k) {
        a[k] -= e[k];
        b[k] += e[k];
        if (a[k] < 0 || a[k] >= L.count[k] || b[k] < 0 || b[k] >= L.count[k]) ok = false;
      }
      if (!ok) continue;
      const double fa = f[L.flat_index(a)], fb = f[L.flat_index(b)];
      if (fa == kInf || fb == kInf) continue;
      const double fp = f[i];
      if (fp == kInf || fp > 0.5 * (fa + fb) + tol * (1.0 + std::abs(fa) + std::abs(fb))) {
        if (witness) *witness = i;
        return false;
      }
    }
  }
  return true;
}

bool subdiff_contains(const GridFunction& f, const Point& x, const Point& xstar, double tol) {
  std::size_t w = 0;
  if (!is_midpoint_convex(f, 1e-10, &w))
    throw UnsupportedError("subdiff_contains needs a convex function; midpoint test fails at " +
                           fmt_point(f.lattice.point(w)));
  std::size_t ix = 0;
  if (!f.lattice.contains_exact(x, &ix)) throw PreconditionError("subdiff_contains: x is not a lattice point");
  if (xstar.size() != x.size()) throw DimensionError("slope dimension mismatch");
  const double fx = f[ix];
  if (fx == kInf) return false;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == kInf) continue;
    const Point y = f.lattice.point(i);
    const double rhs = fx + xstar.dot(y - x);
    if (f[i] < rhs - tol * (1.0 + std::abs(fx) + std::abs(rhs))) return false;
  }
  return true;
}

CertifyResult certify_subdiff(const GridFunction& f, const SubdiffCertificate& cert, double tol) {
  const Lattice& L = f.lattice;
  if (!(cert.radius >= 0.0)) throw PreconditionError("certify_subdiff: empty neighbourhood (negative radius)");
  std::size_t ih = 0;
  if (!L.contains_exact(cert.point, &ih))
    throw PreconditionError("certify_subdiff: empty neighbourhood (centre is not a lattice point)");
  const double fh = f[ih];
  if (fh == kInf) throw PreconditionError("certify_subdiff: centre lies outside the domain of f");
  if (cert.slope.size() != cert.point.size()) throw DimensionError("slope dimension mismatch");
  auto norm = [&](const Point& v) { return cert.seminorm ? cert.seminorm(v) : v.norm(); };

  std::vector<Point> solset;
  if (cert.mode == CertMode::semi_strong) {
    double m = kInf;
    std::vector<double> tilt(f.size(), kInf);
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f[i] == kInf) continue;
      tilt[i] = f[i] - cert.slope.dot(L.point(i));
      m = std::min(m, tilt[i]);
    }
    const double stol = 1e-10 * (1.0 + std::abs(m));
    for (std::size_t i = 0; i < f.size(); ++i)
      if (tilt[i] <= m + stol) solset.push_back(L.point(i));
  }

  CertifyResult res;
  res.worst_violation = -kInf;
  res.solution_set_size = solset.size();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Point x = L.point(i);
    if ((x - cert.point).norm() > cert.radius * (1.0 + 1e-12) + 1e-14) continue;
    ++res.checked;
    if (f[i] == kInf) continue;
    double growth = 0.0;
    if (cert.mode == CertMode::strong) {
      const double r = norm(x - cert.point);
      growth = r * r;
    } else if (cert.mode == CertMode::semi_strong) {
      growth = kInf;
      for (const auto& s : solset) {
        const double r = norm(x - s);
        growth = std::min(growth, r * r);
      }
    }
    const double rhs = fh + cert.slope.dot(x - cert.point) + cert.gamma * growth - cert.epsilon;
    const double viol = rhs - f[i];
    if (viol > res.worst_violation) {
      res.worst_violation = viol;
      res.worst_point = x;
    }
  }
  if (res.checked == 0) throw PreconditionError("certify_subdiff: empty neighbourhood");
  res.valid = res.worst_violation <= tol * (1.0 + std::abs(fh));
  return res;
}

double largest_valid_gamma(const GridFunction& f, SubdiffCertificate cert, double gamma_hi, int iterations) {
  cert.gamma = 0.0;
  if (!certify_subdiff(f, cert).valid) return 0.0;
  cert.gamma = gamma_hi;
  if (certify_subdiff(f, cert).valid) return gamma_hi;
  double lo = 0.0, hi = gamma_hi;
  for (int it = 0; it < iterations; ++it) {
    cert.gamma = 0.5 * (lo + hi);
    if (certify_subdiff(f, cert).valid)
      lo = cert.gamma;
    else
      hi = cert.gamma;
  }
  return lo;
}

bool in_convex_hull(const std::vector<Point>& u_set, const Point& p, double tol) {
  if (u_set.empty()) return false;
  const long d = p.size();
  if (d == 1) {
    double lo = kInf, hi = -kInf;
    for (const auto& u : u_set) {
      lo = std::min(lo, u[0]);
      hi = std::max(hi, u[0]);
    }
    return p[0] >= lo - tol && p[0] <= hi + tol;
  }
  if (d != 2) throw UnsupportedError("convex hull membership implemented for d <= 2");
  // Andrew's monotone chain
  std::vector<Eigen::Vector2d> pts;
  for (const auto& u : u_set) pts.emplace_back(u[0], u[1]);
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return (a - b).norm() == 0.0; }),
            pts.end());
  const Eigen::Vector2d q(p[0], p[1]);
  if (pts.size() == 1) return (q - pts[0]).norm() <= tol;
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  if (hull.size() <= 2) {
    // collinear set: segment between the extreme points
    const Eigen::Vector2d a = pts.front(), b = pts.back();
    const Eigen::Vector2d ab = b - a;
    if (std::abs(cross(a, b, q)) > tol * (1.0 + ab.norm())) return false;
    const double t = (q - a).dot(ab) / ab.squaredNorm();
    return t >= -tol && t <= 1.0 + tol;
  }
  for (std::size_t i = 0; i < hull.size(); ++i)
    if (cross(hull[i], hull[(i + 1) % hull.size()], q) < -tol) return false;
  return true;
}

std::vector<Point> hull_samples(const std::vector<Point>& u_set, const Lattice& dual) {
  std::vector<Point> out = u_set;
  for (std::size_t i = 0; i < dual.size(); ++i) {
    const Point p = dual.point(i);
    if (in_convex_hull(u_set, p, 1e-12)) out.push_back(p);
  }
  return out;
}

GridFunction set_preconjugate(const GridFunction& g, const std::vector<Point>& p_set) {
  if (p_set.empty()) throw PreconditionError("set-inverse formula needs a nonempty U");
  std::vector<double> gs(p_set.size());
  for (std::size_t j = 0; j < p_set.size(); ++j) gs[j] = conjugate_at(g, p_set[j]);
  std::vector<double> vals(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.lattice.point(i);
    double best = -kInf;
    for (std::size_t j = 0; j < p_set.size(); ++j) best = std::max(best, p_set[j].dot(x) - gs[j]);
    vals[i] = best;
  }
  return GridFunction(g.lattice, std::move(vals));
}

SetInfconvCheck set_infconv_formula_check(const GridFunction& g, const std::vector<Point>& u_set,
                                          const Lattice& dual) {
  if (u_set.empty()) throw PreconditionError("set-inverse formula needs a nonempty U");
  std::size_t w = 0;
  if (!is_midpoint_convex(g, 1e-10, &w))
    throw PreconditionError("set-inverse formula needs convex g; midpoint test fails at " +
                            fmt_point(g.lattice.point(w)));
  SetInfconvCheck out;
  out.lhs = set_preconjugate(g, u_set);

  auto support = [&](const Point& x) {
    double s = -kInf;
    for (const auto& u : u_set) s = std::max(s, u.dot(x));
    return s;
  };
  std::vector<double> ic(g.size(), kInf);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.lattice.point(i);
    double best = kInf;
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (g[j] == kInf) continue;
      best = std::min(best, g[j] + support(x - g.lattice.point(j)));
    }
    ic[i] = best;
  }
  const GridFunction icf(g.lattice, std::move(ic));
  out.rhs = conjugate(conjugate(icf, dual), g.lattice);

  out.max_gap = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = out.lhs[i], b = out.rhs[i];
    if (a == kInf && b == kInf) continue;
    const double gap = (a == kInf || b == kInf) ? kInf : std::abs(a - b);
    out.max_gap = std::max(out.max_gap, gap);
  }
  return out;
}

}  // namespace dynreg::oracle
