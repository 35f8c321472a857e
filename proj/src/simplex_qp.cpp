#include "hybridkernel/simplex_qp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "hybridkernel/errors.hpp"

namespace hybridkernel {

namespace {

/// Reduced problem in b after eliminating the free block:
///   f(b) = b^T S b + s^T b,   c*(b) = -(kb * b + kq / 2).
struct Reduced {
  Matrix s_mat;
  Vector s_lin;
  Matrix kb;
  Vector kq;

  double value(const Vector& b) const { return b.dot(s_mat * b) + s_lin.dot(b); }
  Vector grad(const Vector& b) const { return 2.0 * (s_mat * b) + s_lin; }
  Vector free_block(const Vector& b) const {
    if (kb.rows() == 0) return Vector(0);
    return -(kb * b + 0.5 * kq);
  }
};

Reduced reduce(const SimplexQpProblem& p) {
  const auto m = p.m_simplex;
  const auto n = p.n_free;
  Reduced r;
  const Matrix qbb = p.q_mat.topLeftCorner(m, m);
  const Vector qb = p.q_lin.head(m);
  if (n == 0) {
    r.s_mat = qbb;
    r.s_lin = qb;
    return r;
  }
  const Matrix qcc = p.q_mat.bottomRightCorner(n, n);
  const Matrix qcb = p.q_mat.bottomLeftCorner(n, m);
  Matrix rhs(n, m + 1);
  rhs.leftCols(m) = qcb;
  rhs.col(m) = p.q_lin.tail(n);
  Matrix k;
  try {
    k = linalg::solve_spd(0.5 * (qcc + qcc.transpose()), rhs);
  } catch (const NotPositiveDefinite& e) {
    throw NotPsd(std::string("simplex_qp: free block not PSD: ") + e.what());
  }
  r.kb = k.leftCols(m);
  r.kq = k.col(m);
  const Matrix s = qbb - qcb.transpose() * r.kb;
  r.s_mat = 0.5 * (s + s.transpose());
  r.s_lin = qb - qcb.transpose() * r.kq;
  return r;
}

double largest_eigenvalue(const Matrix& s) {
  if (s.size() == 0) return 0.0;
  Vector v = Vector::Ones(s.rows()) / std::sqrt(static_cast<double>(s.rows()));
  // Perturb so that symmetric start vectors do not sit in an eigenspace gap.
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += 1e-3 * static_cast<double>(i % 7);
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    const Vector w = s * v;
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    lambda = v.dot(w) / v.squaredNorm();
    v = w / nrm;
  }
  return std::max(lambda, 0.0);
}

/// Exact minimizer over the face {b_j = 0 off the support of `b`, sum = 1};
/// empty if that point leaves the simplex.
std::optional<Vector> polish_on_face(const Reduced& red, const Vector& b) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    if (b(j) > 1e-12) support.push_back(j);
  }
  const auto k = static_cast<Eigen::Index>(support.size());
  if (k == 0) return std::nullopt;
  Matrix kkt = Matrix::Zero(k + 1, k + 1);
  Vector rhs(k + 1);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index c = 0; c < k; ++c) kkt(a, c) = 2.0 * red.s_mat(support[a], support[c]);
    kkt(a, k) = kkt(k, a) = 1.0;
    rhs(a) = -red.s_lin(support[a]);
  }
  rhs(k) = 1.0;
  const Vector z = kkt.completeOrthogonalDecomposition().solve(rhs);
  if (!z.allFinite() || z.head(k).minCoeff() < 0.0) return std::nullopt;
  Vector out = Vector::Zero(b.size());
  for (Eigen::Index a = 0; a < k; ++a) out(support[a]) = z(a);
  return out / out.sum();
}

void certify_psd(const Matrix& q) {
  try {
    linalg::solve_spd(0.5 * (q + q.transpose()), Vector::Zero(q.rows()));
  } catch (const NotPositiveDefinite& e) {
    throw NotPsd(std::string("simplex_qp: ") + e.what());
  }
}

}  // namespace

void SimplexQpProblem::validate() const {
  if (m_simplex < 1 || n_free < 0) {
    throw DimensionMismatch("SimplexQpProblem: need m_simplex >= 1 and n_free >= 0");
  }
  const auto dim = m_simplex + n_free;
  if (q_mat.rows() != dim || q_mat.cols() != dim || q_lin.size() != dim) {
    throw DimensionMismatch("SimplexQpProblem: Q/q size does not match m_simplex + n_free");
  }
  linalg::require_finite(q_mat, "SimplexQpProblem Q");
  linalg::require_finite(q_lin, "SimplexQpProblem q");
  const double scale = std::max(q_mat.cwiseAbs().maxCoeff(), 1e-300);
  if ((q_mat - q_mat.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NotSymmetric("SimplexQpProblem: Q is not symmetric");
  }
}

double SimplexQpProblem::objective(const Vector& b, const Vector& c) const {
  Vector x(m_simplex + n_free);
  x << b, c;
  return x.dot(q_mat * x) + q_lin.dot(x);
}

Vector SimplexQpProblem::gradient(const Vector& b, const Vector& c) const {
  Vector x(m_simplex + n_free);
  x << b, c;
  return (q_mat + q_mat.transpose()) * x + q_lin;
}

Vector project_simplex(const Vector& v) {
  const auto m = v.size();
  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    cumulative += u[j];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) threshold = t;
  }
  Vector out = (v.array() - threshold).cwiseMax(0.0);
  // Remove the rounding drift in the sum so that |sum - 1| stays at ulp level.
  const double total = out.sum();
  if (total > 0.0) out /= total;
  return out;
}

double kkt_residual(const SimplexQpProblem& problem, const Vector& b, const Vector& c_free) {
  const Vector g = problem.gradient(b, c_free);
  const double free_part = problem.n_free > 0 ? g.tail(problem.n_free).norm() : 0.0;
  const Vector gb = g.head(problem.m_simplex);
  const double simplex_part = (b - project_simplex(b - gb)).norm();
  return std::max(free_part, simplex_part);
}

QpSolution solve(const SimplexQpProblem& problem, const QpOptions& options) {
  problem.validate();
  if (!(options.tol > 0.0) || options.max_iter < 1) {
    throw DomainError("simplex_qp::solve: tol must be positive and max_iter >= 1");
  }
  certify_psd(problem.q_mat);

  const auto m = problem.m_simplex;
  const bool simplex = options.constraint == BlockConstraint::Simplex;
  const Reduced red = reduce(problem);

  const auto project = [&](const Vector& v) { return simplex ? project_simplex(v) : v; };
  const auto stationarity = [&](const Vector& b) {
    return (b - project(b - red.grad(b))).norm();
  };

  QpSolution sol;
  const auto finish = [&](const Vector& b, int iterations, bool converged) {
    sol.b = b;
    sol.c_free = red.free_block(b);
    sol.objective = problem.objective(sol.b, sol.c_free);
    sol.iterations = iterations;
    sol.converged = converged;
    if (simplex) {
      sol.kkt_residual = kkt_residual(problem, sol.b, sol.c_free);
    } else {
      sol.kkt_residual = problem.gradient(sol.b, sol.c_free).norm();
    }
    return sol;
  };

  Vector x = Vector::Constant(m, 1.0 / static_cast<double>(m));
  if (simplex && m == 1) {
    sol.kkt_trace.push_back(0.0);
    return finish(x, 0, true);
  }

  double lipschitz = std::max(2.0 * largest_eigenvalue(red.s_mat) * 1.01, 1e-12);
  double fx = red.value(x);
  Vector best = x;
  double best_kkt = stationarity(x);
  sol.kkt_trace.push_back(best_kkt);
  if (best_kkt <= options.tol) return finish(x, 0, true);

  // FISTA stalls near weakly active constraints, so once close the
  // iterate's face is solved exactly and kept if it improves stationarity.
  const auto try_polish = [&](const Vector& from) {
    if (!simplex) return false;
    const auto cand = polish_on_face(red, from);
    if (!cand) return false;
    const double kkt = stationarity(*cand);
    if (kkt >= best_kkt) return false;
    best_kkt = kkt;
    best = *cand;
    sol.kkt_trace.push_back(kkt);
    return kkt <= options.tol;
  };

  Vector y = x;
  double t = 1.0;
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const Vector gy = red.grad(y);
    const double fy = red.value(y);
    Vector x_new;
    double f_new = 0.0;
    for (;;) {
      x_new = project(y - gy / lipschitz);
      f_new = red.value(x_new);
      const Vector d = x_new - y;
      const double model = fy + gy.dot(d) + 0.5 * lipschitz * d.squaredNorm();
      if (f_new <= model + 1e-12 * std::abs(model) + 1e-300) break;
      lipschitz *= 2.0;
    }

    if (f_new > fx && t > 1.0) {
      // Momentum overshot: restart from the current iterate. A plain step
      // from x is a descent step, so a rise after restarting is rounding.
      y = x;
      t = 1.0;
      continue;
    }

    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_new + ((t - 1.0) / t_new) * (x_new - x);
    x = x_new;
    fx = f_new;
    t = t_new;

    const double kkt = stationarity(x);
    if (kkt < best_kkt) {
      best_kkt = kkt;
      best = x;
      sol.kkt_trace.push_back(kkt);
    }
    if (kkt <= options.tol) return finish(x, iter, true);
    if (iter % 25 == 0 && kkt < 1e-4 && try_polish(x)) return finish(best, iter, true);
  }
  if (try_polish(best)) return finish(best, options.max_iter, true);
  return finish(best, options.max_iter, false);
}

}  // namespace hybridkernel
