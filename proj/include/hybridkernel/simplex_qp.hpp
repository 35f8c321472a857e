#pragma once
// Convex QPs whose variables split into a block on the probability simplex
// (b) and an unconstrained block (c):
//
//   minimize  x^T Q x + q^T x,   x = [b; c],   b >= 0, sum(b) = 1.
//
// Constant offsets are left to callers. The free block is eliminated through
// an SPD solve, and the reduced problem in b is handled by accelerated
// projected gradient with function-value restarts, finished by an exact
// solve on the active face once the iterate is close.

#include <vector>

#include "hybridkernel/linalg.hpp"

namespace hybridkernel {

struct SimplexQpProblem {
  Matrix q_mat;
  Vector q_lin;
  Eigen::Index m_simplex = 0;
  Eigen::Index n_free = 0;

  /// Throws DimensionMismatch / NotSymmetric / NonFinite on malformed input.
  void validate() const;
  double objective(const Vector& b, const Vector& c) const;
  /// Gradient of the objective with respect to the stacked variables.
  Vector gradient(const Vector& b, const Vector& c) const;
};

/// Constraint applied to the b block. `None` exists so tests can compare the
/// solver path against a plain linear solve.
enum class BlockConstraint { Simplex, None };

struct QpOptions {
  double tol = 1e-8;
  int max_iter = 50'000;
  BlockConstraint constraint = BlockConstraint::Simplex;
};

struct QpSolution {
  Vector b;
  Vector c_free;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  /// False when max_iter was hit; b/c_free then hold the best iterate seen.
  bool converged = false;
  /// KKT residual of each successive incumbent.
  std::vector<double> kkt_trace;
};

/// Euclidean projection onto {b >= 0, sum(b) = 1}.
Vector project_simplex(const Vector& v);

/// max(||grad_c||, ||b - P(b - grad_b)||) at the given point.
double kkt_residual(const SimplexQpProblem& problem, const Vector& b, const Vector& c_free);

/// Throws NotPsd when Q cannot be certified PSD by jittered Cholesky.
QpSolution solve(const SimplexQpProblem& problem, const QpOptions& options = {});

}  // namespace hybridkernel
