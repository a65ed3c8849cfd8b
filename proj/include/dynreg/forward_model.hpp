#pragma once

#include <cstddef>

#include "dynreg/core.hpp"

namespace dynreg {

/// Result of one linearisation of the weighted quadratic data term
/// l(A(x) - b) = 0.5 ||W (A(x) - b)||^2 at a point x.
struct DataEval {
  Vec prediction;  // A(x)
  Vec residual;    // W^2 (A(x) - b)
  Vec gradient;    // A'(x)^* W^2 (A(x) - b)
  double value = 0.0;
};

/// Per-frame forward map with Frechet derivative and adjoint.
class FrameModel {
 public:
  virtual ~FrameModel() = default;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual bool is_linear() const = 0;
  virtual Vec apply(const Vec& x) const = 0;
  virtual Vec jacobian_apply(const Vec& x, const Vec& h) const = 0;
  virtual Vec jacobian_adjoint_apply(const Vec& x, const Vec& r) const = 0;
  /// One forward evaluation plus one adjoint application at x.
  virtual DataEval data_gradient(const Vec& x, const Vec& b, const Vec& precision_sq) const;
};

double data_fit(const Vec& prediction, const Vec& b, const Vec& precision_sq);

}  // namespace dynreg
