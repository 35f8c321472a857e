#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hybridkernel/errors.hpp"
#include "hybridkernel/hybrid_static.hpp"
#include "hybridkernel/koopman.hpp"
#include "hybridkernel/thermo_vle.hpp"
#include "test_util.hpp"

using namespace hybridkernel;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

Dataset setting1_data(std::uint64_t seed, int n = 50) {
  const auto sys = vle::ethanol_toluene();
  std::vector<double> xs, ys;
  for (const auto& p : vle::generate_vle_dataset(sys, n, 760.0, seed)) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  return Dataset::from_scalars(xs, ys);
}

ScalarModel alpha_model(double alpha) {
  return [alpha](const Vector& x) { return vle::rel_volatility_model(alpha, x(0)); };
}

const ScalarModel zero_model = [](const Vector&) { return 0.0; };

}  // namespace

TEST_CASE("dataset validation") {
  CHECK_THROWS_AS(Dataset::from_scalars({0.1, 0.2}, {1.0}), DimensionMismatch);
  CHECK_THROWS_AS(Dataset::from_scalars({}, {}).validate(), DimensionMismatch);
  CHECK_THROWS_AS(Dataset::from_scalars({0.1, 0.1 + 1e-12}, {1.0, 2.0}).validate(), DomainError);
  CHECK_THROWS_AS(Dataset::from_scalars({0.1, std::nan("")}, {1.0, 2.0}).validate(), NonFinite);
  CHECK_NOTHROW(Dataset::from_scalars({0.1, 0.1 + 1e-8}, {1.0, 2.0}).validate());
}

TEST_CASE("reference KRR closed forms") {
  const auto data = setting1_data(1);
  Dataset exact = data;
  for (Eigen::Index i = 0; i < exact.size(); ++i) exact.targets(i) = alpha_model(2.5)(exact.inputs.row(i));
  for (double lam : {1e-3, 1.0, 100.0}) {
    const auto m = fit_reference_krr(exact, "alpha", alpha_model(2.5), KernelSpec(100.0), lam);
    CHECK(m.coeffs.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(m.predict(scalar(0.37)) == m.interpretable(scalar(0.37)));
  }

  const auto single = Dataset::from_scalars({0.4}, {1.0});
  const auto m1 = fit_reference_krr(single, "zero", zero_model, KernelSpec(100.0), 1.0);
  CHECK(m1.coeffs(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(fit_reference_krr(single, "zero", zero_model, KernelSpec(100.0), 0.0), DomainError);
}

TEST_CASE("reference KRR objective matches closed form optimum") {
  const auto data = setting1_data(2);
  const KernelSpec k(100.0);
  const auto m = fit_reference_krr(data, "alpha", alpha_model(2.973), k, 0.1);
  const double best = reference_krr_objective(data, alpha_model(2.973), k, m.coeffs, 0.1);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Vector c = m.coeffs + 1e-3 * testutil::random_vector(m.coeffs.size(), rng);
    CHECK(best <= reference_krr_objective(data, alpha_model(2.973), k, c, 0.1));
  }
}

TEST_CASE("setting I lambda trend") {
  const auto train = setting1_data(1);
  const auto val = setting1_data(2);
  const auto lo = fit_reference_krr(train, "alpha", alpha_model(2.973), KernelSpec(100.0), 1e-3);
  const auto hi = fit_reference_krr(train, "alpha", alpha_model(2.973), KernelSpec(100.0), 1e2);
  CHECK(rmse(lo, val) < rmse(hi, val));
  CHECK(rmse(lo, train) < rmse(hi, train));
}

TEST_CASE("pinning and interpolation limits") {
  const auto train = setting1_data(3);
  const double range = train.targets.maxCoeff() - train.targets.minCoeff();
  const auto pinned = fit_reference_krr(train, "alpha", alpha_model(2.973), KernelSpec(100.0), 1e6);
  double worst = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const Vector x = scalar(k / 100.0);
    worst = std::max(worst, std::abs(pinned.predict(x) - pinned.interpretable(x)));
  }
  CHECK(worst <= 1e-3 * range);

  // Well separated inputs.
  std::vector<double> xs, ys;
  const auto sys = vle::ethanol_toluene();
  for (int i = 0; i < 40; ++i) {
    const double x = 0.01 + i * 0.0245;
    xs.push_back(x);
    ys.push_back(vle::bubble_point(sys, x).y);
  }
  const auto grid = Dataset::from_scalars(xs, ys);
  const auto interp = fit_reference_krr(grid, "alpha", alpha_model(2.973), KernelSpec(100.0), 1e-10);
  double max_res = 0.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    max_res = std::max(max_res, std::abs(interp.predict(grid.inputs.row(i)) - grid.targets(i)));
  }
  CHECK(max_res <= 1e-4);
}

TEST_CASE("rmse helpers") {
  const auto data = Dataset::from_scalars({0.1, 0.2}, {1.0, -1.0});
  const auto zero = fit_reference_krr(Dataset::from_scalars({0.5}, {0.0}), "zero", zero_model,
                                      KernelSpec(100.0), 1.0);
  CHECK(rmse(zero, data) == doctest::Approx(1.0).epsilon(1e-14));

  const auto train = setting1_data(4);
  const auto m = fit_reference_krr(train, "alpha", alpha_model(2.973), KernelSpec(100.0), 0.01);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < train.size(); ++i) {
    const double e = predict(m, train.inputs.row(i).transpose()) - train.targets(i);
    sum += e * e;
  }
  CHECK(rmse(m, train) == doctest::Approx(std::sqrt(sum / train.size())).epsilon(1e-14));
  Dataset perfect = train;
  for (Eigen::Index i = 0; i < train.size(); ++i) perfect.targets(i) = m.predict(train.inputs.row(i));
  CHECK(rmse(m, perfect) == 0.0);
}

TEST_CASE("subspace fits") {
  const FeatureMap constant = [](const Vector&) { return Vector::Ones(1); };
  const auto zeros = Dataset::from_scalars({0.1, 0.5, 0.9}, {0.0, 0.0, 0.0});
  const auto z = fit_subspace(zeros, "const", constant, KernelSpec(100.0), 1e-3, 1.0);
  CHECK(z.theta.norm() == 0.0);
  CHECK(z.coeffs.norm() == 0.0);

  // Ridge limit: theta -> mean of the targets when the residual is pinned.
  const auto three = Dataset::from_scalars({0.1, 0.5, 0.9}, {1.0, 2.0, 6.0});
  const auto lim = fit_subspace(three, "const", constant, KernelSpec(100.0), 1e-12, 1e8);
  CHECK(lim.theta(0) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("subspace fit dominates fixed-parameter reference fits") {
  const auto sys = vle::ethanol_toluene();
  std::vector<double> xs, ys;
  for (const auto& p : vle::generate_vle_dataset(sys, 50, 760.0, 1)) {
    xs.push_back(p.x);
    ys.push_back(vle::excess_gibbs_from_txy(sys, p, 760.0));
  }
  const auto data = Dataset::from_scalars(xs, ys);
  const FeatureMap phi = [](const Vector& x) { return vle::margules_features(x(0)); };
  const KernelSpec k(100.0);
  const double lt = 1e-6, lr = 1.0;
  const auto joint = fit_subspace(data, "margules", phi, k, lt, lr);
  CHECK(joint.objective == doctest::Approx(subspace_objective(data, phi, k, joint.theta, joint.coeffs, lt, lr)).epsilon(1e-10));

  Rng rng(17);
  for (int i = 0; i < 20; ++i) {
    const Vector th = 3.0 * testutil::random_vector(2, rng);
    const ScalarModel fixed = [phi, th](const Vector& x) { return phi(x).dot(th); };
    const auto ref = fit_reference_krr(data, "fixed", fixed, k, lr);
    CHECK(joint.objective <= subspace_objective(data, phi, k, th, ref.coeffs, lt, lr) + 1e-12);
  }

  // Setting II at lambda = 1: the Margules hybrid fits better than the reference.
  std::vector<double> vx, vy;
  for (const auto& p : vle::generate_vle_dataset(sys, 50, 760.0, 2)) {
    vx.push_back(p.x);
    vy.push_back(vle::excess_gibbs_from_txy(sys, p, 760.0));
  }
  const auto val = Dataset::from_scalars(vx, vy);
  const double alpha = 2.973;
  const double t_ref = vle::temperature_for_volatility(sys, alpha);
  const ScalarModel reference = [&](const Vector& x) {
    const double v = x(0);
    return vle::rel_volatility_gibbs(sys, alpha, v, t_ref, 760.0) -
           (v * std::log(v) + (1 - v) * std::log(1 - v));
  };
  const auto ref = fit_reference_krr(data, "alpha", reference, k, 1.0);
  CHECK(rmse(joint, val) < rmse(ref, val));
}

TEST_CASE("mixture reduces to reference KRR for a constant family") {
  const auto data = setting1_data(5);
  const ParametricFamily flat = [](const Vector& x, const Vector&) {
    return vle::rel_volatility_model(2.973, x(0));
  };
  const Matrix thetas = koopman::sample_parameters(10, 3);
  const KernelSpec kx(100.0), kt(10.0);
  for (double lam : {1e-2, 1.0}) {
    const auto mix = fit_mixture(data, "flat", flat, thetas, kx, kt, 0.0, lam);
    const auto ref = fit_reference_krr(data, "alpha", alpha_model(2.973), kx, lam);
    double worst = 0.0;
    for (int k = 0; k <= 100; ++k) {
      const Vector x = scalar(k / 100.0);
      worst = std::max(worst, std::abs(mix.predict(x) - ref.predict(x)));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("mixture with one sample") {
  const auto data = setting1_data(6);
  const ParametricFamily fam = [](const Vector& x, const Vector& th) {
    return vle::rel_volatility_model(1.0 + 4.0 * th(0), x(0));
  };
  const Matrix th = (Matrix(1, 1) << 0.5).finished();
  const auto mix = fit_mixture(data, "alpha", fam, th, KernelSpec(100.0), KernelSpec(10.0), 0.0, 0.1);
  CHECK(mix.weights.size() == 1);
  CHECK(mix.weights(0) == 1.0);
  const auto ref = fit_reference_krr(data, "alpha", alpha_model(3.0), KernelSpec(100.0), 0.1);
  double worst = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const Vector x = scalar(k / 100.0);
    worst = std::max(worst, std::abs(mix.predict(x) - ref.predict(x)));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("mixture invariants on the Wilson family") {
  const auto sys = vle::ethanol_toluene();
  std::vector<double> xs, ys;
  for (const auto& p : vle::generate_vle_dataset(sys, 50, 760.0, 1)) {
    xs.push_back(p.x);
    ys.push_back(vle::mixing_gibbs_from_txy(sys, p, 760.0));
  }
  const auto data = Dataset::from_scalars(xs, ys);
  const double t_k = vle::temperature_for_volatility(sys, 2.973) + vle::kKelvinOffset;
  const ParametricFamily wilson = [t_k](const Vector& x, const Vector& th) {
    vle::WilsonParams w;
    w.theta1 = th(0);
    w.theta2 = th(1);
    return vle::wilson_gex(w, x(0), t_k);
  };
  const Matrix thetas = koopman::sample_parameters(25, 3);
  const KernelSpec kx(100.0), kt(10.0);
  for (double lw : {0.0, 0.1}) {
    const auto m = fit_mixture(data, "wilson", wilson, thetas, kx, kt, lw, 1.0);
    CHECK(m.weights.minCoeff() >= 0.0);
    CHECK(std::abs(m.weights.sum() - 1.0) <= 1e-10);
    CHECK(m.objective == doctest::Approx(mixture_objective(data, wilson, thetas, kx, kt, m.weights,
                                                           m.coeffs, lw, 1.0))
                             .epsilon(1e-8));
    const Vector ts = effective_parameter(m);
    for (int d = 0; d < 2; ++d) {
      CHECK(ts(d) >= thetas.col(d).minCoeff());
      CHECK(ts(d) <= thetas.col(d).maxCoeff());
    }
  }
}

TEST_CASE("effective parameter and vertex weights") {
  const auto data = setting1_data(7, 10);
  const ParametricFamily fam = [](const Vector& x, const Vector& th) {
    return vle::rel_volatility_model(1.0 + th(0), x(0));
  };
  Matrix thetas(4, 2);
  thetas << 0, 0, 1, 0, 0, 1, 1, 1;
  auto m = fit_mixture(data, "alpha", fam, thetas, KernelSpec(100.0), KernelSpec(10.0), 0.0, 1.0);
  m.weights = Vector::Constant(4, 0.25);
  CHECK((effective_parameter(m) - Vector::Constant(2, 0.5)).norm() < 1e-15);
  m.weights = Vector::Unit(4, 2);
  CHECK(effective_parameter(m) == thetas.row(2).transpose());
  const Vector x = scalar(0.3);
  CHECK(m.predict(x) == doctest::Approx(fam(x, thetas.row(2).transpose()) + m.residual(x)).epsilon(1e-15));
}
