#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dynreg/forward_model.hpp"

namespace dynreg {

/// Linear frame operator: either a dense matrix, or a zero-padded stencil blur on an
/// nx-by-ny pixel grid followed by an optional subsampling mask.
class LinearFrameOperator : public FrameModel {
 public:
  static LinearFrameOperator identity(long n);
  static LinearFrameOperator from_matrix(Eigen::MatrixXd m);
  static LinearFrameOperator stencil(long nx, long ny, Eigen::MatrixXd kernel, std::vector<long> mask = {});
  /// Truncated Gaussian, renormalised to sum 1.
  static LinearFrameOperator gaussian_blur(long nx, long ny, double sigma = 1.0, long size = 5,
                                           std::vector<long> mask = {});
  static Eigen::MatrixXd gaussian_kernel(double sigma, long size);

  std::size_t input_dim() const override { return static_cast<std::size_t>(n_in_); }
  std::size_t output_dim() const override { return static_cast<std::size_t>(n_out_); }
  bool is_linear() const override { return true; }
  Vec apply(const Vec& x) const override;
  Vec adjoint_apply(const Vec& y) const;
  Vec jacobian_apply(const Vec&, const Vec& h) const override { return apply(h); }
  Vec jacobian_adjoint_apply(const Vec&, const Vec& r) const override { return adjoint_apply(r); }

  Eigen::MatrixXd to_dense() const;
  bool is_stencil() const { return !dense_; }
  const std::vector<long>& mask() const { return mask_; }

 private:
  LinearFrameOperator() = default;
  Vec blur(const Vec& x, bool flip) const;

  bool dense_ = true;
  Eigen::MatrixXd matrix_;
  long nx_ = 0, ny_ = 0;
  Eigen::MatrixXd kernel_;
  std::vector<long> mask_;
  long n_in_ = 0, n_out_ = 0;
};

/// Largest singular value via power iteration on the normal operator.
/// Throws ConvergenceError (with the final eigen-residual) when the cap is hit.
double power_iteration_norm(const std::function<Vec(const Vec&)>& normal_op, long n, int max_iter = 20000,
                            double tol = 1e-10);
double operator_norm(const LinearFrameOperator& op, int max_iter = 20000, double tol = 1e-10);

}  // namespace dynreg
