#include "dynreg/forward_linear.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace dynreg {

DataEval FrameModel::data_gradient(const Vec& x, const Vec& b, const Vec& precision_sq) const {
  DataEval ev;
  ev.prediction = apply(x);
  if (ev.prediction.size() != b.size()) throw DimensionError("data vector has wrong dimension");
  const Vec r = ev.prediction - b;
  ev.residual = precision_sq.cwiseProduct(r);
  ev.value = 0.5 * r.dot(ev.residual);
  ev.gradient = jacobian_adjoint_apply(x, ev.residual);
  return ev;
}

double data_fit(const Vec& prediction, const Vec& b, const Vec& precision_sq) {
  const Vec r = prediction - b;
  return 0.5 * r.dot(precision_sq.cwiseProduct(r));
}

LinearFrameOperator LinearFrameOperator::identity(long n) {
  return from_matrix(Eigen::MatrixXd::Identity(n, n));
}

LinearFrameOperator LinearFrameOperator::from_matrix(Eigen::MatrixXd m) {
  LinearFrameOperator op;
  op.dense_ = true;
  op.n_out_ = m.rows();
  op.n_in_ = m.cols();
  op.matrix_ = std::move(m);
  return op;
}

LinearFrameOperator LinearFrameOperator::stencil(long nx, long ny, Eigen::MatrixXd kernel, std::vector<long> mask) {
  if (kernel.rows() % 2 == 0 || kernel.cols() % 2 == 0) throw PreconditionError("stencil needs odd size");
  LinearFrameOperator op;
  op.dense_ = false;
  op.nx_ = nx;
  op.ny_ = ny;
  op.kernel_ = std::move(kernel);
  op.n_in_ = nx * ny;
  for (long m : mask)
    if (m < 0 || m >= op.n_in_) throw DimensionError("mask index outside the pixel grid");
  op.mask_ = std::move(mask);
  op.n_out_ = op.mask_.empty() ? op.n_in_ : static_cast<long>(op.mask_.size());
  return op;
}

Eigen::MatrixXd LinearFrameOperator::gaussian_kernel(double sigma, long size) {
  const long r = size / 2;
  Eigen::MatrixXd k(size, size);
  for (long a = -r; a <= r; ++a)
    for (long b = -r; b <= r; ++b) k(a + r, b + r) = std::exp(-(a * a + b * b) / (2.0 * sigma * sigma));
  return k / k.sum();
}

LinearFrameOperator LinearFrameOperator::gaussian_blur(long nx, long ny, double sigma, long size,
                                                       std::vector<long> mask) {
  return stencil(nx, ny, gaussian_kernel(sigma, size), std::move(mask));
}

// Pixel (i, j) has flat index j * nx + i.  kernel(a + r, b + r) weights the pixel offset (a, b) in (x, y).
Vec LinearFrameOperator::blur(const Vec& x, bool flip) const {
  const long r = kernel_.rows() / 2;
  Vec out = Vec::Zero(n_in_);
  for (long j = 0; j < ny_; ++j) {
    for (long i = 0; i < nx_; ++i) {
      double acc = 0.0;
      for (long b = -r; b <= r; ++b) {
        const long jj = flip ? j - b : j + b;
        if (jj < 0 || jj >= ny_) continue;
        for (long a = -r; a <= r; ++a) {
          const long ii = flip ? i - a : i + a;
          if (ii < 0 || ii >= nx_) continue;
          acc += kernel_(a + r, b + r) * x[jj * nx_ + ii];
        }
      }
      out[j * nx_ + i] = acc;
    }
  }
  return out;
}

Vec LinearFrameOperator::apply(const Vec& x) const {
  if (x.size() != n_in_) throw DimensionError("operator input has wrong dimension");
  if (dense_) return matrix_ * x;
  Vec full = blur(x, false);
  if (mask_.empty()) return full;
  Vec out(n_out_);
  for (long k = 0; k < n_out_; ++k) out[k] = full[mask_[k]];
  return out;
}

Vec LinearFrameOperator::adjoint_apply(const Vec& y) const {
  if (y.size() != n_out_) throw DimensionError("adjoint input has wrong dimension");
  if (dense_) return matrix_.transpose() * y;
  if (mask_.empty()) return blur(y, true);
  Vec full = Vec::Zero(n_in_);
  for (long k = 0; k < n_out_; ++k) full[mask_[k]] += y[k];
  return blur(full, true);
}

Eigen::MatrixXd LinearFrameOperator::to_dense() const {
  if (dense_) return matrix_;
  Eigen::MatrixXd m(n_out_, n_in_);
  Vec e = Vec::Zero(n_in_);
  for (long c = 0; c < n_in_; ++c) {
    e[c] = 1.0;
    m.col(c) = apply(e);
    e[c] = 0.0;
  }
  return m;
}

double power_iteration_norm(const std::function<Vec(const Vec&)>& normal_op, long n, int max_iter, double tol) {
  if (n == 0) return 0.0;
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  Vec v(n);
  for (long i = 0; i < n; ++i) v[i] = u(rng);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vec w = normal_op(v);
    const double next = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    const bool done = it > 2 && std::abs(next - lam) <= tol * std::abs(next);
    lam = next;
    v = w / wn;
    if (done) return std::sqrt(std::max(lam, 0.0));
  }
  const double res = (normal_op(v) - lam * v).norm();
  std::ostringstream os;
  os << "power iteration did not converge in " << max_iter << " iterations (eigen-residual " << res << ")";
  throw ConvergenceError(os.str());
}

double operator_norm(const LinearFrameOperator& op, int max_iter, double tol) {
  return power_iteration_norm([&](const Vec& v) { return op.adjoint_apply(op.apply(v)); },
                              static_cast<long>(op.input_dim()), max_iter, tol);
}

}  // namespace dynreg
