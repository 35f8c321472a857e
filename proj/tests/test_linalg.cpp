#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hybridkernel/errors.hpp"
#include "hybridkernel/kernels.hpp"
#include "hybridkernel/linalg.hpp"
#include "test_util.hpp"

using namespace hybridkernel;

TEST_CASE("solve_spd small cases") {
  const Vector rhs = (Vector(3) << 1, 2, 3).finished();
  CHECK((linalg::solve_spd(Matrix::Identity(3, 3), rhs) - rhs).norm() == doctest::Approx(0.0));

  Matrix d(2, 2);
  d << 2, 0, 0, 4;
  const Matrix x = linalg::solve_spd(d, (Vector(2) << 2, 8).finished());
  CHECK(x(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x(1, 0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("solve_spd on a near-singular Gaussian Gram") {
  Matrix pts(5, 1);
  pts << 0.0, 0.1, 0.2, 0.3, 0.4;
  const Matrix g = gram(KernelSpec(100.0), pts);
  const Vector ones = Vector::Ones(5);
  const auto sol = linalg::solve_spd_detailed(g, ones);
  CHECK((g * sol.x - ones).norm() < 1e-8);
  CHECK(sol.jitter <= 1e-6 * g.trace() / 5.0);
}

TEST_CASE("solve_spd residual on random SPD matrices") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 1 + trial % 50;
    const Matrix m = testutil::random_spd(n, rng);
    const Matrix rhs = testutil::random_matrix(n, 2, rng);
    const auto sol = linalg::solve_spd_detailed(m, rhs);
    CHECK(sol.jitter == 0.0);
    const double scale = m.norm() * sol.x.norm() + rhs.norm();
    CHECK((m * sol.x - rhs).norm() <= 1e-10 * scale);
  }
}

TEST_CASE("solve_spd rejects bad input") {
  Matrix asym(2, 2);
  asym << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(linalg::solve_spd(asym, Vector::Ones(2)), NotSymmetric);

  Matrix indef(2, 2);
  indef << 1, 0, 0, -1;
  CHECK_THROWS_AS(linalg::solve_spd(indef, Vector::Ones(2)), NotPositiveDefinite);

  CHECK_THROWS_AS(linalg::solve_spd(Matrix::Identity(3, 3), Vector::Ones(2)), DimensionMismatch);

  Matrix nan = Matrix::Identity(2, 2);
  nan(0, 0) = std::nan("");
  CHECK_THROWS_AS(linalg::solve_spd(nan, Vector::Ones(2)), NonFinite);
}

TEST_CASE("least squares") {
  const Matrix b = (Matrix(2, 1) << 1, 2).finished();
  CHECK((linalg::solve_least_squares(Matrix::Identity(2, 2), b) - b).norm() < 1e-14);

  const Matrix a = (Matrix(2, 1) << 1, 1).finished();
  const Matrix mean = linalg::solve_least_squares(a, (Matrix(2, 1) << 0, 2).finished());
  CHECK(mean(0, 0) == doctest::Approx(1.0).epsilon(1e-14));

  Rng rng(5);
  const Matrix big = testutil::random_matrix(50, 6, rng);
  const Matrix x0 = testutil::random_matrix(6, 3, rng);
  CHECK((linalg::solve_least_squares(big, big * x0) - x0).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("least squares with badly scaled columns") {
  Rng rng(6);
  Matrix a = testutil::random_matrix(40, 4, rng);
  a.col(0) *= 1e4;
  a.col(3) *= 1e-4;
  const Matrix x0 = testutil::random_matrix(4, 1, rng);
  const Matrix x = linalg::solve_least_squares(a, a * x0);
  CHECK(((x - x0).array() / x0.array()).abs().maxCoeff() < 1e-6);
}

TEST_CASE("kron and vec") {
  const Matrix b = (Matrix(2, 2) << 1, 2, 3, 4).finished();
  CHECK(linalg::kron(Matrix::Identity(1, 1), b) == b);

  Matrix expected(2, 4);
  expected << 1, 0, 2, 0, 0, 1, 0, 2;
  CHECK(linalg::kron((Matrix(1, 2) << 1, 2).finished(), Matrix::Identity(2, 2)) == expected);

  CHECK(linalg::vec(b) == (Vector(4) << 1, 3, 2, 4).finished());
  CHECK(linalg::vec(Matrix::Constant(1, 1, 7.0)) == Vector::Constant(1, 7.0));

  Rng rng(3);
  const Matrix a46 = testutil::random_matrix(4, 6, rng);
  CHECK(linalg::unvec(linalg::vec(a46), 4, 6) == a46);
}

TEST_CASE("vec(AXB) = (B^T kron A) vec(X)") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = testutil::random_matrix(3, 4, rng);
    const Matrix x = testutil::random_matrix(4, 2, rng);
    const Matrix bm = testutil::random_matrix(2, 5, rng);
    const Vector lhs = linalg::vec(a * x * bm);
    const Vector rhs = linalg::kron(bm.transpose(), a) * linalg::vec(x);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
  // vec(R Psi) = (Psi^T kron I) vec(R)
  const Matrix r = testutil::random_matrix(3, 3, rng);
  const Matrix psi = testutil::random_matrix(3, 3, rng);
  const Vector lhs = linalg::vec(r * psi);
  const Vector rhs = linalg::kron(psi.transpose(), Matrix::Identity(3, 3)) * linalg::vec(r);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}
