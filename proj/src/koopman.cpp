#include "hybridkernel/koopman.hpp"

#include <cmath>

#include "hybridkernel/errors.hpp"
#include "hybridkernel/json_util.hpp"
#include "hybridkernel/random.hpp"

namespace hybridkernel::koopman {

MonomialBasis::MonomialBasis(int q) : q_(q) {
  if (q < 1) throw DomainError("MonomialBasis: q must be >= 1");
}

Vector MonomialBasis::eval(const State& x) const {
  Vector psi(dim());
  double p = 1.0;  // x1^k
  for (int k = 0; k < q_; ++k) {
    psi(q_ + k) = p * x(1);
    p *= x(0);
    psi(k) = p;
  }
  return psi;
}

Matrix MonomialBasis::jacobian(const State& x) const {
  Matrix jac = Matrix::Zero(dim(), 2);
  for (int k = 1; k <= q_; ++k) {
    jac(k - 1, 0) = k * std::pow(x(0), k - 1);
  }
  for (int k = 0; k < q_; ++k) {
    jac(q_ + k, 0) = k == 0 ? 0.0 : k * std::pow(x(0), k - 1) * x(1);
    jac(q_ + k, 1) = std::pow(x(0), k);
  }
  return jac;
}

Matrix sample_states(int n, std::uint64_t seed) {
  if (n < 1) throw DomainError("sample_states: n must be >= 1");
  Rng rng(seed);
  Matrix out(n, 2);
  for (int i = 0; i < n; ++i) {
    out(i, 0) = rng.uniform(-kStateBound, kStateBound);
    out(i, 1) = rng.uniform(-kStateBound, kStateBound);
  }
  return out;
}

Matrix sample_parameters(int m, std::uint64_t seed) {
  if (m < 1) throw DomainError("sample_parameters: m must be >= 1");
  Rng rng(seed);
  Matrix out(m, 2);
  for (int j = 0; j < m; ++j) {
    out(j, 0) = rng.uniform01();
    out(j, 1) = rng.uniform01();
  }
  return out;
}

Matrix state_lattice(int side) {
  if (side < 2) throw DomainError("state_lattice: side must be >= 2");
  Matrix out(side * side, 2);
  const double step = 2.0 * kStateBound / (side - 1);
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      out(i * side + j, 0) = -kStateBound + i * step;
      out(i * side + j, 1) = -kStateBound + j * step;
    }
  }
  return out;
}

DriftSample make_drift_sample(const Matrix& states, const VectorField& field) {
  if (states.cols() != 2) throw DimensionMismatch("make_drift_sample: states must be n x 2");
  DriftSample s{states, Matrix(states.rows(), 2)};
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    s.velocities.row(i) = field(states.row(i).transpose()).transpose();
  }
  linalg::require_finite(s.velocities, "drift velocities");
  return s;
}

namespace {

State row_state(const Matrix& m, Eigen::Index i) { return m.row(i).transpose(); }

}  // namespace

Matrix gedmd(const DriftSample& sample, const MonomialBasis& basis) {
  const auto n = sample.size();
  const auto dim = basis.dim();
  if (n < dim) throw DimensionMismatch("gedmd: need at least N samples");
  Matrix psi(n, dim);
  Matrix psidot(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const State x = row_state(sample.states, i);
    psi.row(i) = basis.eval(x).transpose();
    psidot.row(i) = (basis.jacobian(x) * row_state(sample.velocities, i)).transpose();
  }
  // Psi A^T = Psidot in the least-squares sense.
  return linalg::solve_least_squares(psi, psidot).transpose();
}

namespace {

/// Per-sample design [Dpsi f0(.|theta_1) ... Dpsi f0(.|theta_m) | psi^T (x) I_N]
/// and target psidot.
struct SampleDesign {
  Matrix design;
  Vector target;
};

SampleDesign sample_design(const State& x, const State& xdot, const ParamVectorField& family,
                           const Matrix& thetas, const MonomialBasis& basis) {
  const auto dim = basis.dim();
  const auto m = thetas.rows();
  const Matrix jac = basis.jacobian(x);
  const Vector psi = basis.eval(x);
  SampleDesign d{Matrix(dim, m + dim * dim), jac * xdot};
  for (Eigen::Index j = 0; j < m; ++j) {
    d.design.col(j) = jac * family(x, thetas.row(j).transpose());
  }
  d.design.rightCols(dim * dim) = linalg::kron(psi.transpose(), Matrix::Identity(dim, dim));
  return d;
}

}  // namespace

HybridGeneratorFit fit_hybrid_generator(const DriftSample& sample, const ParamVectorField& family,
                                        const Matrix& thetas, const MonomialBasis& basis,
                                        double lambda_b, double lambda_r,
                                        const QpOptions& options) {
  if (thetas.rows() < 1) throw DimensionMismatch("fit_hybrid_generator: no parameter samples");
  if (!(lambda_b >= 0.0)) throw DomainError("fit_hybrid_generator: lambda_b must be >= 0");
  if (!(lambda_r > 0.0)) throw DomainError("fit_hybrid_generator: lambda_R must be positive");
  const auto m = thetas.rows();
  const auto dim = basis.dim();
  const auto nvar = m + dim * dim;

  SimplexQpProblem qp;
  qp.m_simplex = m;
  qp.n_free = dim * dim;
  qp.q_mat = Matrix::Zero(nvar, nvar);
  qp.q_lin = Vector::Zero(nvar);
  double constant = 0.0;
  for (Eigen::Index i = 0; i < sample.size(); ++i) {
    const auto d = sample_design(row_state(sample.states, i), row_state(sample.velocities, i),
                                 family, thetas, basis);
    qp.q_mat.noalias() += d.design.transpose() * d.design;
    qp.q_lin.noalias() -= 2.0 * d.design.transpose() * d.target;
    constant += d.target.squaredNorm();
  }
  // Each penalty enters exactly once.
  qp.q_mat.topLeftCorner(m, m).diagonal().array() += lambda_b;
  qp.q_mat.bottomRightCorner(dim * dim, dim * dim).diagonal().array() += lambda_r;
  qp.q_mat = 0.5 * (qp.q_mat + qp.q_mat.transpose());

  const QpSolution sol = solve(qp, options);
  return HybridGeneratorFit{sol.b, linalg::unvec(sol.c_free, dim, dim), sol.objective + constant,
                            sol.kkt_residual, sol.converged};
}

double hybrid_generator_objective(const DriftSample& sample, const ParamVectorField& family,
                                  const Matrix& thetas, const MonomialBasis& basis,
                                  const Vector& weights, const Matrix& residual, double lambda_b,
                                  double lambda_r) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < sample.size(); ++i) {
    const State x = row_state(sample.states, i);
    const Matrix jac = basis.jacobian(x);
    Vector pred = residual * basis.eval(x);
    for (Eigen::Index j = 0; j < thetas.rows(); ++j) {
      pred += weights(j) * (jac * family(x, thetas.row(j).transpose()));
    }
    total += (pred - jac * row_state(sample.velocities, i)).squaredNorm();
  }
  return total + lambda_b * weights.squaredNorm() + lambda_r * residual.squaredNorm();
}

Closure closure_fit(const VectorField& field, const MonomialBasis& basis, const Matrix& grid,
                    bool affine) {
  const auto dim = basis.dim();
  const auto offset = affine ? 1 : 0;
  if (grid.rows() < dim + 1) throw DimensionMismatch("closure_fit: grid needs at least N+1 states");
  Matrix regressors(grid.rows(), dim + offset);
  Matrix targets(grid.rows(), dim);
  for (Eigen::Index g = 0; g < grid.rows(); ++g) {
    const State x = row_state(grid, g);
    if (affine) regressors(g, 0) = 1.0;
    regressors.row(g).tail(dim) = basis.eval(x).transpose();
    targets.row(g) = (basis.jacobian(x) * field(x)).transpose();
  }
  const Matrix coef = linalg::solve_least_squares(regressors, targets);
  Closure c;
  c.beta = affine ? Vector(coef.row(0).transpose()) : Vector::Zero(dim);
  c.gamma = coef.bottomRows(dim).transpose();
  c.max_residual = (regressors * coef - targets).cwiseAbs().maxCoeff();
  return c;
}

Vector KoopmanHybridModel::rhs(const Vector& z, const Vector& u) const {
  if (z.size() != dim()) throw DimensionMismatch("KoopmanHybridModel::rhs: z has wrong length");
  if (u.size() != static_cast<Eigen::Index>(input_closures.size())) {
    throw DimensionMismatch("KoopmanHybridModel::rhs: one input per closure expected");
  }
  Vector out = drift * z;
  for (std::size_t k = 0; k < input_closures.size(); ++k) {
    const auto& c = input_closures[k];
    out += u(static_cast<Eigen::Index>(k)) * (c.beta + c.gamma * z);
  }
  return out;
}

KoopmanHybridModel assemble_bilinear(const Vector& weights, const Matrix& residual,
                                     const std::vector<Matrix>& drift_closures,
                                     const std::vector<Closure>& input_closures) {
  const auto dim = residual.rows();
  if (residual.cols() != dim || dim % 2 != 0) {
    throw DimensionMismatch("assemble_bilinear: R must be square with even dimension");
  }
  if (static_cast<Eigen::Index>(drift_closures.size()) != weights.size()) {
    throw DimensionMismatch("assemble_bilinear: one closure matrix per weight expected");
  }
  Matrix drift = residual;
  for (std::size_t j = 0; j < drift_closures.size(); ++j) {
    if (drift_closures[j].rows() != dim || drift_closures[j].cols() != dim) {
      throw DimensionMismatch("assemble_bilinear: closure matrix size");
    }
    drift += weights(static_cast<Eigen::Index>(j)) * drift_closures[j];
  }
  for (const auto& c : input_closures) {
    if (c.beta.size() != dim || c.gamma.rows() != dim || c.gamma.cols() != dim) {
      throw DimensionMismatch("assemble_bilinear: input closure size");
    }
  }
  return KoopmanHybridModel{static_cast<int>(dim / 2), weights, residual, drift_closures,
                            input_closures, std::move(drift)};
}

State predicted_velocity(const KoopmanHybridModel& model, const MonomialBasis& basis,
                         const State& x) {
  const Vector zdot = model.drift * basis.eval(x);
  return {zdot(basis.x1_index()), zdot(basis.x2_index())};
}

double velocity_rmse(const KoopmanHybridModel& model, const MonomialBasis& basis,
                     const Matrix& states, const VectorField& field) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    const State x = row_state(states, i);
    sum += (predicted_velocity(model, basis, x) - field(x)).squaredNorm();
  }
  return std::sqrt(sum / (2.0 * static_cast<double>(states.rows())));
}

CstrFields cstr_fields() {
  CstrFields f;
  f.drift = [](const State& x) {
    const double denom = 3.0 + 2.0 * x(0);
    if (denom == 0.0) throw DomainError("cstr drift: 3 + 2 x1 = 0");
    const double rate = 9.0 * (1.0 + x(0)) / (4.0 * denom);
    return State((3.0 - x(0)) / 4.0 - rate, -3.0 * (1.0 + x(1)) / 4.0 + rate);
  };
  f.input = [](const State& x) { return State((3.0 - x(0)) / 4.0, -(1.0 + x(1)) / 4.0); };
  f.family = [](const State& x, const Vector& theta) {
    const double s = theta(0) * x(0) + theta(1) * x(0) * x(0);
    return State(-x(0) / 4.0 - s, -3.0 * x(1) / 4.0 + s);
  };
  return f;
}

nlohmann::json to_json(const KoopmanHybridModel& model, const Matrix& thetas) {
  using namespace json_util;
  auto a = nlohmann::json::array();
  for (const auto& m : model.drift_closures) a.push_back(matrix_json(m));
  auto inputs = nlohmann::json::array();
  for (const auto& c : model.input_closures) {
    inputs.push_back({{"beta", vector_json(c.beta)},
                      {"gamma", matrix_json(c.gamma)},
                      {"max_residual", c.max_residual}});
  }
  return {{"q", model.q},
          {"theta_samples", matrix_json(thetas)},
          {"weights", vector_json(model.weights)},
          {"residual", matrix_json(model.residual)},
          {"drift_closures", a},
          {"input_closures", inputs},
          {"drift", matrix_json(model.drift)},
          {"degrees_of_freedom", model.degrees_of_freedom()}};
}

}  // namespace hybridkernel::koopman
