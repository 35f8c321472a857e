#pragma once
// Dense linear algebra used throughout the library: jittered SPD solves,
// normal-equation least squares, Kronecker products and vectorization.

#include <Eigen/Dense>

namespace hybridkernel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Outcome of a jittered Cholesky solve.
struct SpdSolve {
  Matrix x;
  /// Diagonal shift that was added before factorization succeeded (0 if none).
  double jitter = 0.0;
};

/// Solves M X = rhs for symmetric positive (semi)definite M.
///
/// Cholesky is tried first on M itself; on failure a diagonal jitter of
/// 1e-12 * trace(M)/dim is added and multiplied by 10 per retry, with at most
/// six retries (largest shift 1e-6 * trace(M)/dim). Two steps of iterative
/// refinement against the unshifted M follow a successful factorization.
/// Throws NotSymmetric, NotPositiveDefinite, DimensionMismatch or NonFinite.
SpdSolve solve_spd_detailed(const Matrix& m, const Matrix& rhs);

inline Matrix solve_spd(const Matrix& m, const Matrix& rhs) {
  return solve_spd_detailed(m, rhs).x;
}

/// argmin_X ||A X - B||_F through column-equilibrated normal equations.
Matrix solve_least_squares(const Matrix& a, const Matrix& b);

Matrix kron(const Matrix& a, const Matrix& b);

/// Column-major stacking.
Vector vec(const Matrix& a);
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

/// Throws NonFinite if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

}  // namespace linalg
}  // namespace hybridkernel
