#include "hybridkernel/kernels.hpp"

#include <cmath>

#include "hybridkernel/errors.hpp"

namespace hybridkernel {

KernelSpec::KernelSpec(double gamma, KernelFamily family) : gamma_(gamma), family_(family) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw DomainError("KernelSpec: bandwidth gamma must be positive and finite");
  }
}

double KernelSpec::operator()(const Vector& a, const Vector& b) const {
  if (a.size() != b.size()) {
    throw DimensionMismatch("kernel_eval: argument lengths differ");
  }
  return std::exp(-gamma_ * (a - b).squaredNorm());
}

double kernel_eval(const KernelSpec& k, const Vector& a, const Vector& b) { return k(a, b); }

Matrix cross_gram(const KernelSpec& k, const Matrix& a_points, const Matrix& b_points) {
  if (a_points.cols() != b_points.cols()) {
    throw DimensionMismatch("cross_gram: point dimensions differ");
  }
  Matrix out(a_points.rows(), b_points.rows());
  for (Eigen::Index i = 0; i < a_points.rows(); ++i) {
    for (Eigen::Index j = 0; j < b_points.rows(); ++j) {
      out(i, j) = std::exp(-k.gamma() * (a_points.row(i) - b_points.row(j)).squaredNorm());
    }
  }
  return out;
}

Matrix gram(const KernelSpec& k, const Matrix& points) {
  if (points.rows() == 0) {
    throw DimensionMismatch("gram: empty point set");
  }
  const auto n = points.rows();
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = std::exp(-k.gamma() * (points.row(i) - points.row(j)).squaredNorm());
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

double product_kernel_eval(const ProductKernelSpec& pk, const Vector& x, const Vector& theta,
                           const Vector& x2, const Vector& theta2) {
  return pk.kx(x, x2) * pk.ktheta(theta, theta2);
}

Matrix product_gram(const ProductKernelSpec& pk, const Matrix& xs, const Matrix& thetas) {
  if (xs.rows() != thetas.rows()) {
    throw DimensionMismatch("product_gram: xs and thetas must pair up row by row");
  }
  return gram(pk.kx, xs).cwiseProduct(gram(pk.ktheta, thetas));
}

}  // namespace hybridkernel
