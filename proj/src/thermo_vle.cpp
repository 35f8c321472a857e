#include "hybridkernel/thermo_vle.hpp"

#include <algorithm>
#include <cmath>

#include "hybridkernel/csv.hpp"
#include "hybridkernel/errors.hpp"
#include "hybridkernel/random.hpp"

namespace hybridkernel::vle {

BinarySystem ethanol_toluene() {
  return BinarySystem{
      .light = {8.11220, 1592.864, 226.184},
      .heavy = {6.95087, 1342.31, 219.187},
      .uniquac = {.r1 = 2.1055, .r2 = 3.9228, .q1 = 1.972, .q2 = 2.968,
                  .a12 = -76.1573, .a21 = 438.005},
  };
}

double antoine_psat(const AntoineConstants& c, double t_celsius) {
  const double denom = t_celsius + c.c;
  if (!(denom > 0.0)) {
    throw DomainError("antoine_psat: T + C must be positive");
  }
  return std::pow(10.0, c.a - c.b / denom);
}

double antoine_boiling_point(const AntoineConstants& c, double p_mmhg) {
  if (!(p_mmhg > 0.0)) throw DomainError("antoine_boiling_point: pressure must be positive");
  return c.b / (c.a - std::log10(p_mmhg)) - c.c;
}

std::pair<double, double> uniquac_ln_gamma(const UniquacParams& p, double x1, double t_kelvin) {
  if (!(x1 >= 0.0 && x1 <= 1.0)) throw DomainError("uniquac: x1 outside [0,1]");
  if (!(t_kelvin > 0.0)) throw DomainError("uniquac: temperature must be positive");
  const double x2 = 1.0 - x1;
  const double sum_r = x1 * p.r1 + x2 * p.r2;
  const double sum_q = x1 * p.q1 + x2 * p.q2;
  // Ratios phi_j/x_j and phi_j/theta_j stay finite at the pure-component ends.
  const double phi1_x1 = p.r1 / sum_r;
  const double phi2_x2 = p.r2 / sum_r;
  const double phi1_th1 = (p.r1 / sum_r) / (p.q1 / sum_q);
  const double phi2_th2 = (p.r2 / sum_r) / (p.q2 / sum_q);
  const double th1 = x1 * p.q1 / sum_q;
  const double th2 = x2 * p.q2 / sum_q;
  const double tau12 = std::exp(-p.a12 / t_kelvin);
  const double tau21 = std::exp(-p.a21 / t_kelvin);
  const double s1 = th1 + th2 * tau21;
  const double s2 = th1 * tau12 + th2;

  const double ln_g1 = std::log(phi1_x1) + 1.0 - phi1_x1 -
                       5.0 * p.q1 * (std::log(phi1_th1) + 1.0 - phi1_th1) +
                       p.q1 * (1.0 - std::log(s1) - th1 / s1 - th2 * tau12 / s2);
  const double ln_g2 = std::log(phi2_x2) + 1.0 - phi2_x2 -
                       5.0 * p.q2 * (std::log(phi2_th2) + 1.0 - phi2_th2) +
                       p.q2 * (1.0 - std::log(s2) - th1 * tau21 / s1 - th2 / s2);
  return {ln_g1, ln_g2};
}

std::pair<double, double> uniquac_gamma(const UniquacParams& p, double x1, double t_kelvin) {
  const auto [l1, l2] = uniquac_ln_gamma(p, x1, t_kelvin);
  return {std::exp(l1), std::exp(l2)};
}

namespace {

double pressure_balance(const BinarySystem& sys, double x1, double t_celsius, double p_mmhg) {
  const auto [g1, g2] = uniquac_gamma(sys.uniquac, x1, t_celsius + kKelvinOffset);
  return x1 * g1 * antoine_psat(sys.light, t_celsius) +
         (1.0 - x1) * g2 * antoine_psat(sys.heavy, t_celsius) - p_mmhg;
}

}  // namespace

BubblePoint bubble_point(const BinarySystem& sys, double x1, double p_mmhg) {
  if (!(x1 >= 0.0 && x1 <= 1.0)) throw DomainError("bubble_point: x1 outside [0,1]");
  if (!(p_mmhg > 0.0)) throw DomainError("bubble_point: pressure must be positive");
  double lo = kBubbleLowC;
  double hi = kBubbleHighC;
  double f_lo = pressure_balance(sys, x1, lo, p_mmhg);
  const double f_hi = pressure_balance(sys, x1, hi, p_mmhg);
  if (f_lo * f_hi > 0.0) {
    throw NoBracket("bubble_point: no sign change on [60, 115] degC");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = pressure_balance(sys, x1, mid, p_mmhg);
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  const double t = 0.5 * (lo + hi);
  const double g1 = uniquac_gamma(sys.uniquac, x1, t + kKelvinOffset).first;
  double y = x1 * g1 * antoine_psat(sys.light, t) / p_mmhg;
  if (x1 == 0.0) y = 0.0;
  if (x1 == 1.0) y = 1.0;
  return {t, std::clamp(y, 0.0, 1.0)};
}

VlePoint find_azeotrope(const BinarySystem& sys, double p_mmhg) {
  const auto excess_y = [&](double x) { return bubble_point(sys, x, p_mmhg).y - x; };
  double lo = 0.01;
  double hi = 0.99;
  double f_lo = excess_y(lo);
  if (f_lo * excess_y(hi) > 0.0) {
    throw NoBracket("find_azeotrope: y(x) - x does not change sign on [0.01, 0.99]");
  }
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = excess_y(mid);
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  const double x = 0.5 * (lo + hi);
  const auto bp = bubble_point(sys, x, p_mmhg);
  return {x, bp.y, bp.t};
}

std::vector<VlePoint> generate_vle_dataset(const BinarySystem& sys, int n, double p_mmhg,
                                           std::uint64_t seed) {
  if (n < 1) throw DomainError("generate_vle_dataset: n must be >= 1");
  Rng rng(seed);
  std::vector<VlePoint> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform(0.01, 0.99);
    const auto bp = bubble_point(sys, x, p_mmhg);
    out.push_back({x, bp.y, bp.t});
  }
  return out;
}

namespace {

void require_interior(const VlePoint& pt, const char* what) {
  if (!(pt.x > 0.0 && pt.x < 1.0 && pt.y > 0.0 && pt.y < 1.0)) {
    throw DomainError(std::string(what) + ": x and y must lie strictly inside (0,1)");
  }
}

}  // namespace

double mixing_gibbs_from_txy(const BinarySystem& sys, const VlePoint& pt, double p_mmhg) {
  require_interior(pt, "mixing_gibbs_from_txy");
  const double p1 = antoine_psat(sys.light, pt.t);
  const double p2 = antoine_psat(sys.heavy, pt.t);
  return pt.x * std::log(p_mmhg * pt.y / p1) + (1.0 - pt.x) * std::log(p_mmhg * (1.0 - pt.y) / p2);
}

double excess_gibbs_from_txy(const BinarySystem& sys, const VlePoint& pt, double p_mmhg) {
  require_interior(pt, "excess_gibbs_from_txy");
  const double p1 = antoine_psat(sys.light, pt.t);
  const double p2 = antoine_psat(sys.heavy, pt.t);
  const double x2 = 1.0 - pt.x;
  return pt.x * std::log(p_mmhg * pt.y / (pt.x * p1)) +
         x2 * std::log(p_mmhg * (1.0 - pt.y) / (x2 * p2));
}

double rel_volatility_model(double alpha, double x) {
  if (!(alpha > 0.0)) throw DomainError("rel_volatility_model: alpha must be positive");
  return alpha * x / (alpha * x + (1.0 - x));
}

double nominal_relative_volatility(const BinarySystem& sys, double p_mmhg) {
  const double t1 = antoine_boiling_point(sys.light, p_mmhg);
  const double t2 = antoine_boiling_point(sys.heavy, p_mmhg);
  const double ratio1 = antoine_psat(sys.light, t1) / antoine_psat(sys.heavy, t1);
  const double ratio2 = antoine_psat(sys.light, t2) / antoine_psat(sys.heavy, t2);
  return 0.5 * (ratio1 + ratio2);
}

double temperature_for_volatility(const BinarySystem& sys, double alpha) {
  const auto f = [&](double t) {
    return antoine_psat(sys.light, t) / antoine_psat(sys.heavy, t) - alpha;
  };
  double lo = kBubbleLowC;
  double hi = kBubbleHighC;
  double f_lo = f(lo);
  if (f_lo * f(hi) > 0.0) {
    throw NoBracket("temperature_for_volatility: alpha not attained on [60, 115] degC");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double rel_volatility_gibbs(const BinarySystem& sys, double alpha, double x, double t_celsius,
                            double p_mmhg) {
  return mixing_gibbs_from_txy(sys, {x, rel_volatility_model(alpha, x), t_celsius}, p_mmhg);
}

Vector margules_features(double x) {
  Vector f(2);
  f << x * x * (1.0 - x), x * (1.0 - x) * (1.0 - x);
  return f;
}

double WilsonParams::a12() const { return std::pow(10.0, 4.0 * theta1 - 2.0); }
double WilsonParams::a21() const { return std::pow(10.0, 4.0 * theta2 - 2.0); }

double wilson_gex_lambda(double lambda12, double lambda21, double x1) {
  if (x1 <= 0.0 || x1 >= 1.0) return 0.0;
  const double x2 = 1.0 - x1;
  return -x1 * std::log(x1 + x2 * lambda12) - x2 * std::log(x2 + x1 * lambda21);
}

double wilson_gex(const WilsonParams& w, double x1, double t_kelvin) {
  if (!(t_kelvin > 0.0)) throw DomainError("wilson_gex: temperature must be positive");
  const double rt = kGasConstantCal * t_kelvin;
  const double l12 = (w.v2 / w.v1) * std::exp(-w.a12() / rt);
  const double l21 = (w.v1 / w.v2) * std::exp(-w.a21() / rt);
  return wilson_gex_lambda(l12, l21, x1);
}

void write_vle_csv(const std::string& path, const BinarySystem& sys,
                   const std::vector<VlePoint>& points, double p_mmhg) {
  csv::Table t;
  t.header = {"x", "y", "T", "gex_rt"};
  for (const auto& pt : points) {
    t.add_row({pt.x, pt.y, pt.t, excess_gibbs_from_txy(sys, pt, p_mmhg)});
  }
  csv::write_table(path, t);
}

std::vector<VlePoint> read_vle_csv(const std::string& path) {
  const auto t = csv::read_table(path);
  const auto ix = t.column("x");
  const auto iy = t.column("y");
  const auto it = t.column("T");
  std::vector<VlePoint> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) out.push_back({row[ix], row[iy], row[it]});
  return out;
}

}  // namespace hybridkernel::vle
