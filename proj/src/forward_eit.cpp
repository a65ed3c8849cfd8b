#include "dynreg/forward_eit.hpp"

#include <string>

#include <Eigen/SparseCholesky>

#include "dynreg/errors.hpp"

namespace dynreg {

namespace {

using Factor = Eigen::SimplicialLDLT<SpMat>;

void factorise(Factor& f, const SpMat& s) {
  f.compute(s);
  if (f.info() != Eigen::Success) throw SolverError("CEM factorisation failed");
}

Eigen::MatrixXd solve(const Factor& f, const Eigen::MatrixXd& rhs) {
  Eigen::MatrixXd u = f.solve(rhs);
  if (f.info() != Eigen::Success || !u.allFinite()) throw SolverError("CEM solve failed");
  return u;
}

// sum_j sum_T (area_T / 3) grad(lam^j)_T . grad(u^j)_T, scattered to the nodes of T
Vec gradient_pairing(const CemSystem& sys, const Eigen::MatrixXd& lam, const Eigen::MatrixXd& u) {
  Vec g = Vec::Zero(sys.n_nodes());
  const auto& tris = sys.mesh().triangles;
  for (long t = 0; t < static_cast<long>(tris.size()); ++t) {
    const auto& tri = tris[static_cast<std::size_t>(t)];
    const auto& G = sys.hat_gradients(t);
    double acc = 0.0;
    for (long j = 0; j < u.cols(); ++j) {
      Eigen::Vector2d gu = Eigen::Vector2d::Zero(), gl = Eigen::Vector2d::Zero();
      for (int a = 0; a < 3; ++a) {
        gu += u(tri[a], j) * G.col(a);
        gl += lam(tri[a], j) * G.col(a);
      }
      acc += gl.dot(gu);
    }
    const double c = sys.area(t) / 3.0 * acc;
    for (int a = 0; a < 3; ++a) g[tri[a]] += c;
  }
  return g;
}

Eigen::MatrixXd adjoint_rhs(const CemSystem& sys, const Vec& residual_weights) {
  const Eigen::MatrixXd R = unpack_measurements(residual_weights, sys.n_electrodes(), sys.n_patterns());
  Eigen::MatrixXd w = sys.electrode_weights();
  for (long i = 0; i < sys.n_electrodes(); ++i) w.col(i) /= sys.zeta()[i];
  return w * R;
}

}  // namespace

CemSystem::CemSystem(Mesh mesh, double zeta) : CemSystem(mesh, Vec::Constant(mesh.n_electrodes(), zeta)) {}

CemSystem::CemSystem(Mesh mesh, Vec zeta) : mesh_(std::move(mesh)), zeta_(std::move(zeta)) {
  if (zeta_.size() != mesh_.n_electrodes()) throw DimensionError("one contact impedance per electrode required");
  if (!(zeta_.array() > 0.0).all()) throw PreconditionError("contact impedances must be positive");
  precompute();
}

void CemSystem::precompute() {
  const long nt = mesh_.n_triangles();
  area_.resize(static_cast<std::size_t>(nt));
  grads_.resize(static_cast<std::size_t>(nt));
  for (long t = 0; t < nt; ++t) {
    const double a = mesh_.signed_area(t);
    if (!(a > 1e-14)) throw AssemblyError("degenerate triangle " + std::to_string(t));
    const auto& tri = mesh_.triangles[static_cast<std::size_t>(t)];
    Eigen::Matrix<double, 2, 3> G;
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector2d p1 = mesh_.nodes.col(tri[(k + 1) % 3]);
      const Eigen::Vector2d p2 = mesh_.nodes.col(tri[(k + 2) % 3]);
      // gradient of the hat at vertex k: rotated opposite edge over 2*area
      G.col(k) = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / (2.0 * a);
    }
    area_[static_cast<std::size_t>(t)] = a;
    grads_[static_cast<std::size_t>(t)] = G;
  }
  const long n = mesh_.n_nodes(), ne = mesh_.n_electrodes();
  std::vector<Eigen::Triplet<double>> trip;
  weights_ = Eigen::MatrixXd::Zero(n, ne);
  lengths_ = Vec::Zero(ne);
  for (long e = 0; e < ne; ++e) {
    const auto& chain = mesh_.electrodes[static_cast<std::size_t>(e)];
    const double z = zeta_[e];
    for (std::size_t q = 0; q + 1 < chain.size(); ++q) {
      const int a = chain[q], b = chain[q + 1];
      const double len = (mesh_.nodes.col(a) - mesh_.nodes.col(b)).norm();
      trip.emplace_back(a, a, len / (3.0 * z));
      trip.emplace_back(b, b, len / (3.0 * z));
      trip.emplace_back(a, b, len / (6.0 * z));
      trip.emplace_back(b, a, len / (6.0 * z));
      weights_(a, e) += 0.5 * len;
      weights_(b, e) += 0.5 * len;
      lengths_[e] += len;
    }
  }
  electrode_.resize(n, n);
  electrode_.setFromTriplets(trip.begin(), trip.end());
}

SpMat CemSystem::stiffness(const Vec& sigma) const {
  if (sigma.size() != n_nodes()) throw DimensionError("conductivity must be nodal");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * area_.size());
  for (long t = 0; t < mesh_.n_triangles(); ++t) {
    const auto& tri = mesh_.triangles[static_cast<std::size_t>(t)];
    const double smean = (sigma[tri[0]] + sigma[tri[1]] + sigma[tri[2]]) / 3.0;
    const auto& G = grads_[static_cast<std::size_t>(t)];
    const double w = smean * area_[static_cast<std::size_t>(t)];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trip.emplace_back(tri[a], tri[b], w * G.col(a).dot(G.col(b)));
  }
  SpMat k(n_nodes(), n_nodes());
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

Eigen::MatrixXd CemSystem::pattern_rhs() const {
  Eigen::MatrixXd f = weights_;
  for (long i = 0; i < n_electrodes(); ++i) f.col(i) /= zeta_[i];
  return f;
}

SpMat assemble(const CemSystem& system, const Vec& sigma) {
  if (sigma.size() != system.n_nodes()) throw DimensionError("conductivity must be nodal");
  for (long i = 0; i < sigma.size(); ++i)
    if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i]))
      throw AssemblyError("non-positive conductivity at node " + std::to_string(i));
  SpMat s = system.stiffness(sigma) + system.electrode_block();
  s.makeCompressed();
  return s;
}

Eigen::MatrixXd currents_from_potentials(const CemSystem& system, const Eigen::MatrixXd& potentials) {
  Eigen::MatrixXd I = system.electrode_weights().transpose() * potentials;
  for (long i = 0; i < system.n_electrodes(); ++i) {
    if (i < I.cols()) I(i, i) -= system.electrode_lengths()[i];
    I.row(i) /= system.zeta()[i];
  }
  return I;
}

ForwardSolution solve_forward_full(const CemSystem& system, const Vec& sigma) {
  Factor f;
  factorise(f, assemble(system, sigma));
  ForwardSolution out;
  out.potentials = solve(f, system.pattern_rhs());
  out.currents = currents_from_potentials(system, out.potentials);
  return out;
}

Eigen::MatrixXd solve_forward(const CemSystem& system, const Vec& sigma) {
  return solve_forward_full(system, sigma).currents;
}

Vec measurement_vector(const Eigen::MatrixXd& currents) {
  const long ne = currents.rows(), np = currents.cols();
  if (ne < 2 || np > ne) throw DimensionError("currents must be N_elec x N_pat with N_pat <= N_elec");
  Vec m(np * (ne - 1));
  long idx = 0;
  for (long j = 0; j < np; ++j)
    for (long i = 0; i < ne; ++i)
      if (i != j) m[idx++] = currents(i, j);
  return m;
}

Eigen::MatrixXd unpack_measurements(const Vec& m, long n_electrodes, long n_patterns) {
  if (m.size() != n_patterns * (n_electrodes - 1)) throw DimensionError("measurement vector has the wrong length");
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n_electrodes, n_patterns);
  long idx = 0;
  for (long j = 0; j < n_patterns; ++j)
    for (long i = 0; i < n_electrodes; ++i)
      if (i != j) R(i, j) = m[idx++];
  return R;
}

Vec jacobian_adjoint_apply(const CemSystem& system, const Vec& sigma, const Vec& residual_weights) {
  Factor f;
  factorise(f, assemble(system, sigma));
  const Eigen::MatrixXd u = solve(f, system.pattern_rhs());
  const Eigen::MatrixXd lam = solve(f, adjoint_rhs(system, residual_weights));
  return -gradient_pairing(system, lam, u);
}

Vec jacobian_apply(const CemSystem& system, const Vec& sigma, const Vec& h) {
  if (h.size() != system.n_nodes()) throw DimensionError("direction must be nodal");
  Factor f;
  factorise(f, assemble(system, sigma));
  const Eigen::MatrixXd u = solve(f, system.pattern_rhs());
  const Eigen::MatrixXd du = solve(f, -(system.stiffness(h) * u));
  Eigen::MatrixXd dI = system.electrode_weights().transpose() * du;
  for (long i = 0; i < system.n_electrodes(); ++i) dI.row(i) /= system.zeta()[i];
  return measurement_vector(dI);
}

Vec EitFrameModel::apply(const Vec& x) const {
  Factor f;
  factorise(f, assemble(*system_, x));
  ++factorisations_;
  const Eigen::MatrixXd u = solve(f, system_->pattern_rhs());
  ++forward_solves_;
  return measurement_vector(currents_from_potentials(*system_, u));
}

Vec EitFrameModel::jacobian_apply(const Vec& x, const Vec& h) const { return dynreg::jacobian_apply(*system_, x, h); }

Vec EitFrameModel::jacobian_adjoint_apply(const Vec& x, const Vec& r) const {
  return dynreg::jacobian_adjoint_apply(*system_, x, r);
}

DataEval EitFrameModel::data_gradient(const Vec& x, const Vec& b, const Vec& precision_sq) const {
  if (b.size() != system_->measurement_dim() || precision_sq.size() != b.size())
    throw DimensionError("data and precision must match the measurement dimension");
  Factor f;
  factorise(f, assemble(*system_, x));
  ++factorisations_;
  const Eigen::MatrixXd u = solve(f, system_->pattern_rhs());
  ++forward_solves_;
  DataEval out;
  out.prediction = measurement_vector(currents_from_potentials(*system_, u));
  const Vec r = out.prediction - b;
  out.residual = precision_sq.cwiseProduct(r);
  out.value = 0.5 * r.dot(out.residual);
  const Eigen::MatrixXd lam = solve(f, adjoint_rhs(*system_, out.residual));
  ++adjoint_solves_;
  out.gradient = -gradient_pairing(*system_, lam, u);
  return out;
}

}  // namespace dynreg
