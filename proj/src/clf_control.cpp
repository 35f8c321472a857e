#include "hybridkernel/clf_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hybridkernel/csv.hpp"
#include "hybridkernel/errors.hpp"

namespace hybridkernel::control {

double clf_value(const koopman::MonomialBasis& basis, const State& x) {
  return basis.eval(x).squaredNorm();
}

double clf_value_closed_form(const koopman::MonomialBasis& basis, const State& x) {
  const double x1sq = x(0) * x(0);
  if (x1sq == 1.0) throw DomainError("clf_value_closed_form: |x1| = 1");
  return x.squaredNorm() * (1.0 - std::pow(x1sq, basis.q())) / (1.0 - x1sq);
}

ClfRates clf_rates(const koopman::MonomialBasis& basis, const koopman::VectorField& drift,
                   const koopman::VectorField& input, const State& x) {
  const Vector psi = basis.eval(x);
  const Matrix jac = basis.jacobian(x);
  return {2.0 * psi.dot(jac * drift(x)), 2.0 * psi.dot(jac * input(x))};
}

ClfRates clf_rates(const koopman::KoopmanHybridModel& model, const koopman::MonomialBasis& basis,
                   const State& x) {
  if (model.input_closures.size() != 1) {
    throw DimensionMismatch("clf_rates: model must have exactly one input channel");
  }
  const Vector z = basis.eval(x);
  const auto& in = model.input_closures.front();
  return {2.0 * z.dot(model.drift * z), 2.0 * z.dot(in.beta + in.gamma * z)};
}

double lin_sontag(double a, double b, double bound) {
  if (!(bound > 0.0)) throw DomainError("lin_sontag: bound must be positive");
  if (b == 0.0) return 0.0;
  const double u = -(a + std::sqrt(a * a + b * b * b * b)) / (b * (1.0 + std::sqrt(1.0 + b * b)));
  return std::clamp(u, -bound, bound);
}

Trajectory simulate(const Dynamics& dynamics, const Controller& controller, const State& x0,
                    double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon >= dt)) {
    throw DomainError("simulate: need dt > 0 and horizon >= dt");
  }
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.controls.reserve(steps);
  State x = x0;
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  for (std::size_t k = 0; k < steps; ++k) {
    const double u = controller(x);
    const State k1 = dynamics(x, u);
    const State k2 = dynamics(x + 0.5 * dt * k1, u);
    const State k3 = dynamics(x + 0.5 * dt * k2, u);
    const State k4 = dynamics(x + dt * k3, u);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) {
      throw NonFinite("simulate: state became non-finite at step " + std::to_string(k));
    }
    traj.controls.push_back(u);
    traj.times.push_back(static_cast<double>(k + 1) * dt);
    traj.states.push_back(x);
  }
  return traj;
}

double compare_trajectories(const Trajectory& t1, const Trajectory& t2) {
  if (t1.times.size() != t2.times.size()) {
    throw GridMismatch("compare_trajectories: different number of samples");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < t1.times.size(); ++k) {
    if (std::abs(t1.times[k] - t2.times[k]) > 1e-12 * std::max(1.0, std::abs(t1.times[k]))) {
      throw GridMismatch("compare_trajectories: time grids differ");
    }
    worst = std::max(worst, (t1.states[k] - t2.states[k]).norm());
  }
  return worst;
}

double max_clf_increase(const koopman::MonomialBasis& basis, const Trajectory& traj,
                        double settle_radius) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    if (traj.states[k].norm() < settle_radius) break;
    worst = std::max(worst, clf_value(basis, traj.states[k + 1]) - clf_value(basis, traj.states[k]));
  }
  return worst;
}

std::string trajectory_csv(const Trajectory& traj) {
  csv::Table t;
  t.header = {"t", "x1", "x2", "u"};
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const double u = traj.controls.empty()
                         ? 0.0
                         : traj.controls[std::min(k, traj.controls.size() - 1)];
    t.add_row({traj.times[k], traj.states[k](0), traj.states[k](1), u});
  }
  return t.to_string();
}

}  // namespace hybridkernel::control
