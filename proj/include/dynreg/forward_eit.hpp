#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dynreg/forward_model.hpp"
#include "dynreg/mesh.hpp"

namespace dynreg {

using SpMat = Eigen::SparseMatrix<double>;

/// Potential-driven CEM on a P1 mesh.  Pattern j drives electrode j at unit potential
/// with all other electrodes grounded.
class CemSystem {
 public:
  CemSystem(Mesh mesh, double zeta = 0.01);
  CemSystem(Mesh mesh, Vec zeta);

  const Mesh& mesh() const { return mesh_; }
  const Vec& zeta() const { return zeta_; }
  long n_nodes() const { return mesh_.n_nodes(); }
  long n_electrodes() const { return mesh_.n_electrodes(); }
  long n_patterns() const { return mesh_.n_electrodes(); }
  long measurement_dim() const { return (n_electrodes() - 1) * n_patterns(); }

  double area(long t) const { return area_[static_cast<std::size_t>(t)]; }
  /// Gradients of the three P1 hat functions on triangle t (columns).
  const Eigen::Matrix<double, 2, 3>& hat_gradients(long t) const { return grads_[static_cast<std::size_t>(t)]; }

  /// sigma-weighted stiffness only.
  SpMat stiffness(const Vec& sigma) const;
  /// Electrode/impedance block, independent of sigma.
  const SpMat& electrode_block() const { return electrode_; }
  /// Column i: integral of the hat functions over electrode i (c_i).
  const Eigen::MatrixXd& electrode_weights() const { return weights_; }
  const Vec& electrode_lengths() const { return lengths_; }
  /// Right-hand sides of all patterns.
  Eigen::MatrixXd pattern_rhs() const;

 private:
  void precompute();

  Mesh mesh_;
  Vec zeta_;
  std::vector<double> area_;
  std::vector<Eigen::Matrix<double, 2, 3>> grads_;
  SpMat electrode_;
  Eigen::MatrixXd weights_;
  Vec lengths_;
};

/// Full CEM matrix K(sigma) + M_Z.  Throws AssemblyError for non-positive sigma.
SpMat assemble(const CemSystem& system, const Vec& sigma);

struct ForwardSolution {
  Eigen::MatrixXd potentials;  // n_nodes x N_pat
  Eigen::MatrixXd currents;    // N_elec x N_pat
};

ForwardSolution solve_forward_full(const CemSystem& system, const Vec& sigma);
Eigen::MatrixXd solve_forward(const CemSystem& system, const Vec& sigma);
Eigen::MatrixXd currents_from_potentials(const CemSystem& system, const Eigen::MatrixXd& potentials);

/// Drops the excited electrode of each pattern; pattern-major ordering.
Vec measurement_vector(const Eigen::MatrixXd& currents);
/// Inverse of measurement_vector with zeros on the diagonal.
Eigen::MatrixXd unpack_measurements(const Vec& m, long n_electrodes, long n_patterns);

/// Gradient of sigma -> <residual_weights, measurement_vector(I(sigma))> by the adjoint state.
Vec jacobian_adjoint_apply(const CemSystem& system, const Vec& sigma, const Vec& residual_weights);
Vec jacobian_apply(const CemSystem& system, const Vec& sigma, const Vec& h);

/// FrameModel wrapper that counts factorised forward and adjoint solves
/// (one multi-right-hand-side solve per pattern block counts once).
class EitFrameModel : public FrameModel {
 public:
  explicit EitFrameModel(std::shared_ptr<const CemSystem> system) : system_(std::move(system)) {}

  std::size_t input_dim() const override { return static_cast<std::size_t>(system_->n_nodes()); }
  std::size_t output_dim() const override { return static_cast<std::size_t>(system_->measurement_dim()); }
  bool is_linear() const override { return false; }
  Vec apply(const Vec& x) const override;
  Vec jacobian_apply(const Vec& x, const Vec& h) const override;
  Vec jacobian_adjoint_apply(const Vec& x, const Vec& r) const override;
  DataEval data_gradient(const Vec& x, const Vec& b, const Vec& precision_sq) const override;

  const CemSystem& system() const { return *system_; }
  long forward_solves() const { return forward_solves_; }
  long adjoint_solves() const { return adjoint_solves_; }
  long factorisations() const { return factorisations_; }
  void reset_counters() const { forward_solves_ = adjoint_solves_ = factorisations_ = 0; }

 private:
  std::shared_ptr<const CemSystem> system_;
  mutable long forward_solves_ = 0;
  mutable long adjoint_solves_ = 0;
  mutable long factorisations_ = 0;
};

}  // namespace dynreg
