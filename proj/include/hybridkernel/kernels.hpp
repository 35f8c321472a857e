#pragma once

#include "hybridkernel/linalg.hpp"

namespace hybridkernel {

enum class KernelFamily { Gaussian };

/// Gaussian kernel exp(-gamma * ||a - b||^2). `gamma` is the raw multiplier,
/// not a length scale.
class KernelSpec {
 public:
  explicit KernelSpec(double gamma, KernelFamily family = KernelFamily::Gaussian);

  double gamma() const { return gamma_; }
  KernelFamily family() const { return family_; }

  double operator()(const Vector& a, const Vector& b) const;

 private:
  double gamma_;
  KernelFamily family_;
};

/// Tensor-product kernel on (x, theta) pairs.
struct ProductKernelSpec {
  KernelSpec kx;
  KernelSpec ktheta;
};

double kernel_eval(const KernelSpec& k, const Vector& a, const Vector& b);

/// Points are stored one per row.
Matrix gram(const KernelSpec& k, const Matrix& points);
Matrix cross_gram(const KernelSpec& k, const Matrix& a_points, const Matrix& b_points);

double product_kernel_eval(const ProductKernelSpec& pk, const Vector& x, const Vector& theta,
                           const Vector& x2, const Vector& theta2);

/// Gram matrix of the product kernel over paired rows (xs.row(i), thetas.row(i)).
Matrix product_gram(const ProductKernelSpec& pk, const Matrix& xs, const Matrix& thetas);

}  // namespace hybridkernel
