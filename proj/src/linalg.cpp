#include "hybridkernel/linalg.hpp"

#include <cmath>
#include <string>

#include "hybridkernel/errors.hpp"

namespace hybridkernel::linalg {

namespace {

constexpr int kMaxJitterRetries = 6;
constexpr double kInitialJitter = 1e-12;
constexpr double kSymmetryTol = 1e-10;
constexpr int kRefinementSteps = 2;

}  // namespace

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw NonFinite(std::string(what) + ": non-finite entry");
  }
}

SpdSolve solve_spd_detailed(const Matrix& m, const Matrix& rhs) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw DimensionMismatch("solve_spd: matrix must be square and nonempty");
  }
  if (rhs.rows() != m.rows()) {
    throw DimensionMismatch("solve_spd: rhs has " + std::to_string(rhs.rows()) +
                            " rows, expected " + std::to_string(m.rows()));
  }
  require_finite(m, "solve_spd matrix");
  require_finite(rhs, "solve_spd rhs");

  const double scale = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw NotSymmetric("solve_spd: matrix is not symmetric");
  }

  const auto dim = m.rows();
  const double mean_diag = m.trace() / static_cast<double>(dim);
  // A zero matrix has no meaningful trace scale; fall back to unit scale.
  const double base = mean_diag > 0.0 ? mean_diag : 1.0;

  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
  llt.compute(m);
  for (int retry = 0; llt.info() != Eigen::Success; ++retry) {
    if (retry > kMaxJitterRetries) {
      throw NotPositiveDefinite("solve_spd: Cholesky failed after jitter " +
                                std::to_string(jitter));
    }
    jitter = kInitialJitter * base * std::pow(10.0, retry);
    Matrix shifted = m;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
  }

  Matrix x = llt.solve(rhs);
  // Refinement recovers accuracy w.r.t. the unshifted matrix when the shift
  // is small relative to its spectrum; otherwise it is harmless.
  for (int step = 0; step < kRefinementSteps; ++step) {
    const Matrix residual = rhs - m * x;
    const Matrix candidate = x + llt.solve(residual);
    if ((rhs - m * candidate).norm() >= residual.norm()) break;
    x = candidate;
  }
  require_finite(x, "solve_spd solution");
  return {std::move(x), jitter};
}

Matrix solve_least_squares(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionMismatch("solve_least_squares: row counts differ");
  }
  if (a.rows() < a.cols()) {
    throw DimensionMismatch("solve_least_squares: fewer rows than columns");
  }
  require_finite(a, "solve_least_squares A");
  require_finite(b, "solve_least_squares B");

  // Column equilibration keeps the normal matrix's condition number in check.
  Vector scale = a.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    if (scale(j) == 0.0) scale(j) = 1.0;
  }
  const Matrix as = a * scale.cwiseInverse().asDiagonal();
  const Matrix normal = as.transpose() * as;
  const Matrix sym = 0.5 * (normal + normal.transpose());
  Matrix xs = solve_spd(sym, as.transpose() * b);

  // One refinement pass on the least-squares residual.
  const Matrix correction = solve_spd(sym, as.transpose() * (b - as * xs));
  xs += correction;
  return scale.cwiseInverse().asDiagonal() * xs;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Vector vec(const Matrix& a) {
  // Eigen's default storage is column-major, so a flat copy is the stacking.
  return Eigen::Map<const Vector>(a.data(), a.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != v.size()) {
    throw DimensionMismatch("unvec: size mismatch");
  }
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace hybridkernel::linalg
