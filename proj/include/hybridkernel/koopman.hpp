#pragma once
// Continuous-time Koopman generator models on a monomial basis in two states.
//
// Lifted coordinates z = psi(x) evolve under dz/dt = Dpsi(x) xdot. The hybrid
// generator is sum_j b_j Dpsi f0(.|theta_j) + R psi, with b on the simplex and
// R a free residual matrix; closures map each known field to (affine-)linear
// maps of psi so that the lifted model is the bilinear system
//
//   dz/dt = (sum_j b_j A_j + R) z + sum_k u_k (beta_k + Gamma_k z).

#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "hybridkernel/linalg.hpp"
#include "hybridkernel/simplex_qp.hpp"

namespace hybridkernel::koopman {

using State = Eigen::Vector2d;
using VectorField = std::function<State(const State&)>;
using ParamVectorField = std::function<State(const State&, const Vector& theta)>;

/// psi(x) = (x1, x1^2, ..., x1^q, x2, x1 x2, ..., x1^(q-1) x2), N = 2q.
class MonomialBasis {
 public:
  explicit MonomialBasis(int q);

  int q() const { return q_; }
  Eigen::Index dim() const { return 2 * q_; }
  /// Positions of x1 and x2 inside psi.
  Eigen::Index x1_index() const { return 0; }
  Eigen::Index x2_index() const { return q_; }

  Vector eval(const State& x) const;
  /// N x 2 matrix of partial derivatives.
  Matrix jacobian(const State& x) const;

 private:
  int q_;
};

/// States (one per row) paired with their velocities.
struct DriftSample {
  Matrix states;
  Matrix velocities;

  Eigen::Index size() const { return states.rows(); }
};

inline constexpr double kStateBound = 0.25;

/// n states uniform on [-1/4, 1/4]^2.
Matrix sample_states(int n, std::uint64_t seed);
/// m parameters uniform on [0, 1]^2.
Matrix sample_parameters(int m, std::uint64_t seed);
/// side x side lattice covering [-1/4, 1/4]^2, endpoints included.
Matrix state_lattice(int side = 33);

DriftSample make_drift_sample(const Matrix& states, const VectorField& field);

/// Generator EDMD: argmin_A sum_i ||A psi(x_i) - Dpsi(x_i) xdot_i||^2.
Matrix gedmd(const DriftSample& sample, const MonomialBasis& basis);

struct HybridGeneratorFit {
  Vector weights;
  Matrix residual;  // R, N x N
  double objective = 0.0;
  double kkt_residual = 0.0;
  bool converged = false;
};

/// Solves
///   min sum_i ||sum_j b_j Dpsi(x_i) f0(x_i|theta_j) + R psi(x_i) - psidot_i||^2
///       + lambda_b ||b||^2 + lambda_r ||R||_F^2,  b on the simplex,
/// with psidot_i = Dpsi(x_i) xdot_i. Parameters are rows of `thetas`.
HybridGeneratorFit fit_hybrid_generator(const DriftSample& sample, const ParamVectorField& family,
                                        const Matrix& thetas, const MonomialBasis& basis,
                                        double lambda_b, double lambda_r,
                                        const QpOptions& options = {});

/// Direct evaluation of the objective above.
double hybrid_generator_objective(const DriftSample& sample, const ParamVectorField& family,
                                  const Matrix& thetas, const MonomialBasis& basis,
                                  const Vector& weights, const Matrix& residual, double lambda_b,
                                  double lambda_r);

struct Closure {
  Vector beta;   // zero when fitted without the affine term
  Matrix gamma;  // N x N
  /// Largest absolute fitting error over the grid.
  double max_residual = 0.0;
};

/// Least-squares fit of Dpsi(x) field(x) ~ beta + Gamma psi(x) (affine) or
/// ~ Gamma psi(x) over the grid states (rows).
Closure closure_fit(const VectorField& field, const MonomialBasis& basis, const Matrix& grid,
                    bool affine);

struct KoopmanHybridModel {
  int q = 0;
  Vector weights;
  Matrix residual;
  std::vector<Matrix> drift_closures;  // A_j
  std::vector<Closure> input_closures; // (beta_k, Gamma_k)
  Matrix drift;                        // sum_j b_j A_j + R

  Eigen::Index dim() const { return drift.rows(); }
  /// dz/dt at lifted state z under inputs u.
  Vector rhs(const Vector& z, const Vector& u) const;
  /// Entries of R plus the weights.
  Eigen::Index degrees_of_freedom() const { return residual.size() + weights.size(); }
};

KoopmanHybridModel assemble_bilinear(const Vector& weights, const Matrix& residual,
                                     const std::vector<Matrix>& drift_closures,
                                     const std::vector<Closure>& input_closures);

/// Predicted state velocity at x with u = 0, read from the x1 and x2 rows.
State predicted_velocity(const KoopmanHybridModel& model, const MonomialBasis& basis,
                         const State& x);

/// RMS over both components of predicted_velocity against `field`.
double velocity_rmse(const KoopmanHybridModel& model, const MonomialBasis& basis,
                     const Matrix& states, const VectorField& field);

struct CstrFields {
  VectorField drift;           // f0 (ground truth)
  VectorField input;           // f1
  ParamVectorField family;     // f0(.|theta), theta in [0,1]^2
};

/// Reactor with a fractional rate law in deviation variables.
CstrFields cstr_fields();

nlohmann::json to_json(const KoopmanHybridModel& model, const Matrix& thetas);

}  // namespace hybridkernel::koopman
