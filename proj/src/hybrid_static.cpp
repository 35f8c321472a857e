#include "hybridkernel/hybrid_static.hpp"

#include <cmath>

#include "hybridkernel/errors.hpp"
#include "hybridkernel/json_util.hpp"

namespace hybridkernel {

namespace {

constexpr double kDuplicateDistance = 1e-9;

Vector kernel_column(const KernelSpec& k, const Matrix& anchors, const Vector& x) {
  return cross_gram(k, anchors, x.transpose());
}

Vector reference_values(const Dataset& data, const ScalarModel& reference) {
  Vector out(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) out(i) = reference(data.inputs.row(i).transpose());
  return out;
}

Matrix feature_matrix(const Dataset& data, const FeatureMap& feature_map) {
  const Vector first = feature_map(data.inputs.row(0).transpose());
  Matrix phi(data.size(), first.size());
  phi.row(0) = first.transpose();
  for (Eigen::Index i = 1; i < data.size(); ++i) {
    const Vector f = feature_map(data.inputs.row(i).transpose());
    if (f.size() != first.size()) throw DimensionMismatch("feature map changed dimension");
    phi.row(i) = f.transpose();
  }
  return phi;
}

Matrix family_matrix(const Dataset& data, const ParametricFamily& family,
                     const Matrix& theta_samples) {
  Matrix h(data.size(), theta_samples.rows());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Vector x = data.inputs.row(i).transpose();
    for (Eigen::Index j = 0; j < theta_samples.rows(); ++j) {
      h(i, j) = family(x, theta_samples.row(j).transpose());
    }
  }
  return h;
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(name) + " must be positive and finite");
  }
}

}  // namespace

void Dataset::validate() const {
  if (targets.size() < 1) throw DimensionMismatch("Dataset: empty");
  if (inputs.rows() != targets.size()) throw DimensionMismatch("Dataset: inputs/targets length");
  linalg::require_finite(inputs, "Dataset inputs");
  linalg::require_finite(targets, "Dataset targets");
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if ((inputs.row(i) - inputs.row(j)).norm() < kDuplicateDistance) {
        throw DomainError("Dataset: duplicate inputs at rows " + std::to_string(j) + " and " +
                          std::to_string(i));
      }
    }
  }
}

Dataset Dataset::from_scalars(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw DimensionMismatch("Dataset: inputs/targets length");
  Dataset d;
  d.inputs = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  d.targets = Eigen::Map<const Vector>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  return d;
}

double ReferenceKrrModel::residual(const Vector& x) const {
  return kernel_column(kernel, anchors, x).dot(coeffs);
}

double SubspaceModel::residual(const Vector& x) const {
  return kernel_column(kernel, anchors, x).dot(coeffs);
}

double MixtureModel::interpretable(const Vector& x) const {
  double out = 0.0;
  for (Eigen::Index j = 0; j < theta_samples.rows(); ++j) {
    if (weights(j) != 0.0) out += weights(j) * family(x, theta_samples.row(j).transpose());
  }
  return out;
}

double MixtureModel::residual(const Vector& x) const {
  return kernel_column(kernel_x, anchors, x).dot(coeffs);
}

ReferenceKrrModel fit_reference_krr(const Dataset& data, std::string reference_name,
                                    ScalarModel reference, const KernelSpec& kernel,
                                    double lambda) {
  data.validate();
  require_positive(lambda, "fit_reference_krr: lambda");
  const Vector eta = data.targets - reference_values(data, reference);
  Matrix system = gram(kernel, data.inputs);
  system.diagonal().array() += lambda;
  Vector coeffs = linalg::solve_spd(system, eta);
  return ReferenceKrrModel{std::move(reference_name), std::move(reference), data.inputs,
                           std::move(coeffs), kernel, lambda};
}

SubspaceModel fit_subspace(const Dataset& data, std::string feature_name, FeatureMap feature_map,
                           const KernelSpec& kernel, double lambda_theta, double lambda_r) {
  data.validate();
  require_positive(lambda_theta, "fit_subspace: lambda_theta");
  require_positive(lambda_r, "fit_subspace: lambda_r");
  const Matrix phi = feature_matrix(data, feature_map);
  const Matrix g = gram(kernel, data.inputs);
  const auto nf = phi.cols();
  const auto n = data.size();

  Matrix design(n, nf + n);
  design << phi, g;
  Matrix system = design.transpose() * design;
  system.topLeftCorner(nf, nf).diagonal().array() += lambda_theta;
  system.bottomRightCorner(n, n) += lambda_r * g;
  system = 0.5 * (system + system.transpose());
  const Vector sol = linalg::solve_spd(system, design.transpose() * data.targets);

  SubspaceModel model{std::move(feature_name), std::move(feature_map), sol.head(nf), data.inputs,
                      sol.tail(n), kernel, lambda_theta, lambda_r};
  model.objective = subspace_objective(data, model.feature_map, kernel, model.theta, model.coeffs,
                                       lambda_theta, lambda_r);
  return model;
}

MixtureModel fit_mixture(const Dataset& data, std::string family_name, ParametricFamily family,
                         const Matrix& theta_samples, const KernelSpec& kernel_x,
                         const KernelSpec& kernel_theta, double lambda_omega, double lambda_r,
                         const QpOptions& options) {
  data.validate();
  if (theta_samples.rows() < 1) throw DimensionMismatch("fit_mixture: no parameter samples");
  if (!(lambda_omega >= 0.0)) throw DomainError("fit_mixture: lambda_omega must be >= 0");
  require_positive(lambda_r, "fit_mixture: lambda_r");

  const Matrix h = family_matrix(data, family, theta_samples);
  const Matrix gx = gram(kernel_x, data.inputs);
  const Matrix gt = gram(kernel_theta, theta_samples);
  const auto m = theta_samples.rows();
  const auto n = data.size();
  const Vector& y = data.targets;

  // ||H b + G c - y||^2 + lw b^T Gt b + lr c^T G c, constant y^T y dropped.
  SimplexQpProblem qp;
  qp.m_simplex = m;
  qp.n_free = n;
  qp.q_mat.resize(m + n, m + n);
  qp.q_mat.topLeftCorner(m, m) = h.transpose() * h + lambda_omega * gt;
  qp.q_mat.topRightCorner(m, n) = h.transpose() * gx;
  qp.q_mat.bottomLeftCorner(n, m) = gx * h;
  qp.q_mat.bottomRightCorner(n, n) = gx * gx + lambda_r * gx;
  qp.q_mat = 0.5 * (qp.q_mat + qp.q_mat.transpose());
  qp.q_lin.resize(m + n);
  qp.q_lin << -2.0 * h.transpose() * y, -2.0 * gx * y;

  const QpSolution sol = solve(qp, options);

  MixtureModel model{std::move(family_name), std::move(family), theta_samples, sol.b,
                     data.inputs, sol.c_free, kernel_x, kernel_theta, lambda_omega, lambda_r};
  model.objective = sol.objective + y.squaredNorm();
  model.kkt_residual = sol.kkt_residual;
  model.iterations = sol.iterations;
  model.converged = sol.converged;
  return model;
}

Vector effective_parameter(const MixtureModel& model) {
  return model.theta_samples.transpose() * model.weights;
}

double reference_krr_objective(const Dataset& data, const ScalarModel& reference,
                               const KernelSpec& kernel, const Vector& coeffs, double lambda) {
  const Matrix g = gram(kernel, data.inputs);
  const Vector fit = reference_values(data, reference) + g * coeffs - data.targets;
  return fit.squaredNorm() + lambda * coeffs.dot(g * coeffs);
}

double subspace_objective(const Dataset& data, const FeatureMap& feature_map,
                          const KernelSpec& kernel, const Vector& theta, const Vector& coeffs,
                          double lambda_theta, double lambda_r) {
  const Matrix phi = feature_matrix(data, feature_map);
  const Matrix g = gram(kernel, data.inputs);
  const Vector fit = phi * theta + g * coeffs - data.targets;
  return fit.squaredNorm() + lambda_theta * theta.squaredNorm() + lambda_r * coeffs.dot(g * coeffs);
}

double mixture_objective(const Dataset& data, const ParametricFamily& family,
                         const Matrix& theta_samples, const KernelSpec& kernel_x,
                         const KernelSpec& kernel_theta, const Vector& weights,
                         const Vector& coeffs, double lambda_omega, double lambda_r) {
  const Matrix h = family_matrix(data, family, theta_samples);
  const Matrix gx = gram(kernel_x, data.inputs);
  const Matrix gt = gram(kernel_theta, theta_samples);
  const Vector fit = h * weights + gx * coeffs - data.targets;
  return fit.squaredNorm() + lambda_omega * weights.dot(gt * weights) +
         lambda_r * coeffs.dot(gx * coeffs);
}

nlohmann::json to_json(const ReferenceKrrModel& m) {
  using namespace json_util;
  return {{"kind", "reference_krr"},   {"reference", m.reference_name},
          {"kernel", kernel_json(m.kernel)}, {"lambda", m.lambda},
          {"anchors", matrix_json(m.anchors)}, {"coeffs", vector_json(m.coeffs)}};
}

nlohmann::json to_json(const SubspaceModel& m) {
  using namespace json_util;
  return {{"kind", "subspace"},
          {"features", m.feature_name},
          {"kernel", kernel_json(m.kernel)},
          {"lambda_theta", m.lambda_theta},
          {"lambda_r", m.lambda_r},
          {"theta", vector_json(m.theta)},
          {"anchors", matrix_json(m.anchors)},
          {"coeffs", vector_json(m.coeffs)},
          {"objective", m.objective}};
}

nlohmann::json to_json(const MixtureModel& m) {
  using namespace json_util;
  return {{"kind", "mixture"},
          {"family", m.family_name},
          {"kernel_x", kernel_json(m.kernel_x)},
          {"kernel_theta", kernel_json(m.kernel_theta)},
          {"lambda_omega", m.lambda_omega},
          {"lambda_r", m.lambda_r},
          {"theta_samples", matrix_json(m.theta_samples)},
          {"weights", vector_json(m.weights)},
          {"theta_star", vector_json(effective_parameter(m))},
          {"anchors", matrix_json(m.anchors)},
          {"coeffs", vector_json(m.coeffs)},
          {"objective", m.objective},
          {"kkt_residual", m.kkt_residual},
          {"converged", m.converged}};
}

}  // namespace hybridkernel
