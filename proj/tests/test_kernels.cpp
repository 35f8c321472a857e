#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hybridkernel/errors.hpp"
#include "hybridkernel/kernels.hpp"
#include "test_util.hpp"

using namespace hybridkernel;

namespace {
Vector scalar(double v) { return Vector::Constant(1, v); }
}  // namespace

TEST_CASE("kernel_eval") {
  const KernelSpec k(100.0);
  CHECK(kernel_eval(k, scalar(0.3), scalar(0.3)) == 1.0);
  CHECK(kernel_eval(k, scalar(0.0), scalar(0.1)) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Vector a = testutil::random_vector(3, rng);
    const Vector b = testutil::random_vector(3, rng);
    const double v = kernel_eval(k, a, b);
    CHECK(v == kernel_eval(k, b, a));
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  CHECK_THROWS_AS(KernelSpec(0.0), DomainError);
  CHECK_THROWS_AS(KernelSpec(-1.0), DomainError);
  CHECK_THROWS_AS(kernel_eval(k, Vector::Zero(2), Vector::Zero(3)), DimensionMismatch);
}

TEST_CASE("gram matrices") {
  const KernelSpec k(100.0);
  CHECK(gram(k, Matrix::Constant(1, 1, 0.2)) == Matrix::Ones(1, 1));
  CHECK(gram(k, Matrix::Constant(2, 1, 0.2)) == Matrix::Ones(2, 2));

  const Matrix g = gram(k, (Matrix(2, 1) << 0.0, 0.1).finished());
  CHECK(g(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(g(1, 0) == g(0, 1));
  CHECK(g(0, 0) == 1.0);

  Rng rng(2);
  const Matrix a = testutil::random_matrix(6, 2, rng);
  const Matrix b = testutil::random_matrix(4, 2, rng);
  CHECK(cross_gram(k, a, a) == gram(k, a));
  CHECK(cross_gram(k, a, b) == cross_gram(k, b, a).transpose());
  CHECK(cross_gram(k, a.topRows(1), b.topRows(1))(0, 0) ==
        kernel_eval(k, a.row(0).transpose(), b.row(0).transpose()));
}

TEST_CASE("gram matrices are PSD-certifiable") {
  Rng rng(4);
  const Matrix pts = testutil::random_matrix(30, 1, rng);
  const Matrix g = gram(KernelSpec(100.0), pts);
  CHECK_NOTHROW(linalg::solve_spd(g, Vector::Ones(30)));
}

TEST_CASE("product kernel") {
  const ProductKernelSpec pk{KernelSpec(100.0), KernelSpec(10.0)};
  Rng rng(7);
  const Vector x = testutil::random_vector(1, rng);
  const Vector th = testutil::random_vector(2, rng);
  CHECK(product_kernel_eval(pk, x, th, x, th) == 1.0);
  for (int i = 0; i < 10; ++i) {
    const Vector x2 = testutil::random_vector(1, rng);
    const Vector th2 = testutil::random_vector(2, rng);
    CHECK(product_kernel_eval(pk, x, th, x2, th2) ==
          doctest::Approx(kernel_eval(pk.kx, x, x2) * kernel_eval(pk.ktheta, th, th2)).epsilon(1e-15));
  }

  // 4-point grid
  Matrix xs(4, 1), ths(4, 2);
  xs << 0.0, 0.0, 0.5, 0.5;
  ths << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
  const Matrix pg = product_gram(pk, xs, ths);
  Matrix brute(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      brute(i, j) = product_kernel_eval(pk, xs.row(i).transpose(), ths.row(i).transpose(),
                                        xs.row(j).transpose(), ths.row(j).transpose());
  CHECK((pg - brute).cwiseAbs().maxCoeff() < 1e-15);
  const Matrix hadamard = gram(pk.kx, xs).cwiseProduct(gram(pk.ktheta, ths));
  CHECK((pg - hadamard).cwiseAbs().maxCoeff() < 1e-15);
}
