#pragma once
// Control Lyapunov function V(x) = ||psi(x)||^2 with a bounded Lin-Sontag
// feedback, plus an RK4 closed-loop simulator.

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridkernel/koopman.hpp"

namespace hybridkernel::control {

using koopman::State;

double clf_value(const koopman::MonomialBasis& basis, const State& x);
/// ||x||^2 (1 - x1^(2q)) / (1 - x1^2); requires |x1| != 1.
double clf_value_closed_form(const koopman::MonomialBasis& basis, const State& x);

/// dV/dt = a + b u along the (model) dynamics.
struct ClfRates {
  double a = 0.0;
  double b = 0.0;
};

ClfRates clf_rates(const koopman::MonomialBasis& basis, const koopman::VectorField& drift,
                   const koopman::VectorField& input, const State& x);
/// Rates from the lifted bilinear model at z = psi(x); single input channel.
ClfRates clf_rates(const koopman::KoopmanHybridModel& model, const koopman::MonomialBasis& basis,
                   const State& x);

/// u = -(a + sqrt(a^2 + b^4)) / (b (1 + sqrt(1 + b^2))), clamped to
/// [-bound, bound]; u = 0 exactly when b = 0.
double lin_sontag(double a, double b, double bound);

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  /// Control held over [t_k, t_{k+1}); one entry per step.
  std::vector<double> controls;
};

using Dynamics = std::function<State(const State& x, double u)>;
using Controller = std::function<double(const State& x)>;

/// Classical RK4 with zero-order-hold control; round(horizon/dt) steps.
/// Throws NonFinite if the state blows up.
Trajectory simulate(const Dynamics& dynamics, const Controller& controller, const State& x0,
                    double dt, double horizon);

/// Max over the shared time grid of ||x1(t) - x2(t)||. Throws GridMismatch.
double compare_trajectories(const Trajectory& t1, const Trajectory& t2);

/// Largest per-step increase of V along the trajectory, ignoring steps that
/// start inside the ball ||x|| < settle_radius.
double max_clf_increase(const koopman::MonomialBasis& basis, const Trajectory& traj,
                        double settle_radius = 1e-6);

/// CSV `t,x1,x2,u`; the final row repeats the last control.
std::string trajectory_csv(const Trajectory& traj);

}  // namespace hybridkernel::control
