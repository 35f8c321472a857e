#pragma once
// Static hybrid models: an interpretable part plus a kernel residual
// r(x) = sum_i c_i k(x_i, x) anchored at the training inputs.
//
//  * ReferenceKrrModel: fixed reference model h0, closed-form ridge residual.
//  * SubspaceModel:     linear-in-parameters features phi(x)^T theta fitted
//                       jointly with the residual.
//  * MixtureModel:      convex combination of a nonlinear family h(x|theta_j)
//                       over sampled parameters, fitted with the residual as a
//                       simplex-constrained QP.

#include <functional>
#include <string>

#include <json.hpp>

#include "hybridkernel/kernels.hpp"
#include "hybridkernel/simplex_qp.hpp"

namespace hybridkernel {

using ScalarModel = std::function<double(const Vector& x)>;
using FeatureMap = std::function<Vector(const Vector& x)>;
using ParametricFamily = std::function<double(const Vector& x, const Vector& theta)>;

/// Inputs one per row, with matching scalar targets.
struct Dataset {
  Matrix inputs;
  Vector targets;

  Eigen::Index size() const { return targets.size(); }
  /// Rejects empty sets, length mismatches, non-finite values and inputs
  /// closer than 1e-9 to one another.
  void validate() const;
  static Dataset from_scalars(const std::vector<double>& xs, const std::vector<double>& ys);
};

struct ReferenceKrrModel {
  std::string reference_name;
  ScalarModel reference;
  Matrix anchors;
  Vector coeffs;
  KernelSpec kernel;
  double lambda;

  double interpretable(const Vector& x) const { return reference(x); }
  double residual(const Vector& x) const;
  double predict(const Vector& x) const { return interpretable(x) + residual(x); }
};

struct SubspaceModel {
  std::string feature_name;
  FeatureMap feature_map;
  Vector theta;
  Matrix anchors;
  Vector coeffs;
  KernelSpec kernel;
  double lambda_theta;
  double lambda_r;
  /// ||Phi theta + G c - y||^2 + lambda_theta ||theta||^2 + lambda_r c^T G c
  double objective = 0.0;

  double interpretable(const Vector& x) const { return feature_map(x).dot(theta); }
  double residual(const Vector& x) const;
  double predict(const Vector& x) const { return interpretable(x) + residual(x); }
};

struct MixtureModel {
  std::string family_name;
  ParametricFamily family;
  /// One parameter sample per row.
  Matrix theta_samples;
  Vector weights;
  Matrix anchors;
  Vector coeffs;
  KernelSpec kernel_x;
  KernelSpec kernel_theta;
  double lambda_omega;
  double lambda_r;
  /// ||H b + G_x c - y||^2 + lambda_omega b^T G_theta b + lambda_r c^T G_x c
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;

  double interpretable(const Vector& x) const;
  double residual(const Vector& x) const;
  double predict(const Vector& x) const { return interpretable(x) + residual(x); }
};

ReferenceKrrModel fit_reference_krr(const Dataset& data, std::string reference_name,
                                    ScalarModel reference, const KernelSpec& kernel,
                                    double lambda);

SubspaceModel fit_subspace(const Dataset& data, std::string feature_name, FeatureMap feature_map,
                           const KernelSpec& kernel, double lambda_theta, double lambda_r);

MixtureModel fit_mixture(const Dataset& data, std::string family_name, ParametricFamily family,
                         const Matrix& theta_samples, const KernelSpec& kernel_x,
                         const KernelSpec& kernel_theta, double lambda_omega, double lambda_r,
                         const QpOptions& options = {});

inline double predict(const ReferenceKrrModel& m, const Vector& x) { return m.predict(x); }
inline double predict(const SubspaceModel& m, const Vector& x) { return m.predict(x); }
inline double predict(const MixtureModel& m, const Vector& x) { return m.predict(x); }

/// Recommended parameter: sum_j b_j theta_j.
Vector effective_parameter(const MixtureModel& model);

template <class Model>
concept StaticPredictor = requires(const Model& m, const Vector& x) {
  { m.predict(x) } -> std::convertible_to<double>;
};

template <StaticPredictor Model>
double rmse(const Model& model, const Dataset& data) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double e = model.predict(data.inputs.row(i).transpose()) - data.targets(i);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(data.size()));
}

/// Direct evaluations of the fitting objectives at arbitrary coefficients.
double reference_krr_objective(const Dataset& data, const ScalarModel& reference,
                               const KernelSpec& kernel, const Vector& coeffs, double lambda);
double subspace_objective(const Dataset& data, const FeatureMap& feature_map,
                          const KernelSpec& kernel, const Vector& theta, const Vector& coeffs,
                          double lambda_theta, double lambda_r);
double mixture_objective(const Dataset& data, const ParametricFamily& family,
                         const Matrix& theta_samples, const KernelSpec& kernel_x,
                         const KernelSpec& kernel_theta, const Vector& weights,
                         const Vector& coeffs, double lambda_omega, double lambda_r);

nlohmann::json to_json(const ReferenceKrrModel& m);
nlohmann::json to_json(const SubspaceModel& m);
nlohmann::json to_json(const MixtureModel& m);

}  // namespace hybridkernel
