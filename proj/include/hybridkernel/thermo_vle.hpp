#pragma once
// Binary vapor-liquid equilibrium for ethanol (1) / toluene (2): UNIQUAC
// activity coefficients, Antoine vapor pressures, an ideal vapor phase, and
// the interpretable model families fitted against that ground truth.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hybridkernel/linalg.hpp"

namespace hybridkernel::vle {

inline constexpr double kKelvinOffset = 273.15;
inline constexpr double kAtmosphereMmHg = 760.0;
/// Gas constant used inside the Wilson exponent, cal/(mol K).
inline constexpr double kGasConstantCal = 1.987;

/// log10(P/mmHg) = A - B / (T/degC + C)
struct AntoineConstants {
  double a;
  double b;
  double c;
};

struct UniquacParams {
  double r1, r2;
  double q1, q2;
  double a12, a21;  // K
};

struct BinarySystem {
  AntoineConstants light;  // component 1
  AntoineConstants heavy;  // component 2
  UniquacParams uniquac;
};

BinarySystem ethanol_toluene();

struct VlePoint {
  double x;  // liquid mole fraction of component 1
  double y;  // vapor mole fraction of component 1
  double t;  // degC
};

struct BubblePoint {
  double t;  // degC
  double y;
};

/// Throws DomainError when T + C <= 0.
double antoine_psat(const AntoineConstants& c, double t_celsius);

/// Temperature (degC) at which the Antoine pressure equals `p_mmhg`.
double antoine_boiling_point(const AntoineConstants& c, double p_mmhg);

/// (gamma1, gamma2). Endpoints x1 = 0 and x1 = 1 return the pure-component
/// limit (1 for the pure species, the infinite-dilution value for the other).
std::pair<double, double> uniquac_gamma(const UniquacParams& p, double x1, double t_kelvin);

/// (ln gamma1, ln gamma2) for 0 < x1 < 1.
std::pair<double, double> uniquac_ln_gamma(const UniquacParams& p, double x1, double t_kelvin);

inline constexpr double kBubbleLowC = 60.0;
inline constexpr double kBubbleHighC = 115.0;

/// Modified Raoult bubble point by bisection on [60, 115] degC. Throws
/// NoBracket if the pressure balance does not change sign on that window.
BubblePoint bubble_point(const BinarySystem& sys, double x1, double p_mmhg = kAtmosphereMmHg);

/// Liquid composition where y(x) = x, located by bisection on (0.01, 0.99).
VlePoint find_azeotrope(const BinarySystem& sys, double p_mmhg = kAtmosphereMmHg);

/// Liquid fractions uniform on [0.01, 0.99], completed by bubble_point.
std::vector<VlePoint> generate_vle_dataset(const BinarySystem& sys, int n, double p_mmhg,
                                           std::uint64_t seed);

/// G^ex/RT = x ln(P y / (x P1sat)) + (1-x) ln(P (1-y) / ((1-x) P2sat)).
/// Requires 0 < x < 1 and 0 < y < 1.
double excess_gibbs_from_txy(const BinarySystem& sys, const VlePoint& pt, double p_mmhg);

/// x ln(P y / P1sat) + (1-x) ln(P (1-y) / P2sat): the excess Gibbs energy plus
/// the ideal mixing term x ln x + (1-x) ln(1-x). This is the regression
/// target used by the Gibbs-energy experiments.
double mixing_gibbs_from_txy(const BinarySystem& sys, const VlePoint& pt, double p_mmhg);

/// Constant relative volatility model y = alpha x / (alpha x + 1 - x).
double rel_volatility_model(double alpha, double x);

/// Mean of P1sat/P2sat at the two pure-component boiling points.
double nominal_relative_volatility(const BinarySystem& sys, double p_mmhg = kAtmosphereMmHg);

/// Temperature (degC) where P1sat/P2sat equals alpha.
double temperature_for_volatility(const BinarySystem& sys, double alpha);

/// Relative-volatility model mapped to the mixing-Gibbs target at a fixed
/// temperature, so that it serves as a reference model on x alone.
double rel_volatility_gibbs(const BinarySystem& sys, double alpha, double x, double t_celsius,
                            double p_mmhg);

/// (x^2 (1-x), x (1-x)^2)
Vector margules_features(double x);

struct WilsonParams {
  double v1 = 58.7;   // mL/mol
  double v2 = 106.8;  // mL/mol
  /// Normalized (A12, A21): A = 10^(4 theta - 2) cal/mol, theta in [0,1]^2.
  double theta1 = 0.5;
  double theta2 = 0.5;

  double a12() const;
  double a21() const;
};

/// -x1 ln(x1 + x2 L12) - x2 ln(x2 + x1 L21) with the given Lambda values.
double wilson_gex_lambda(double lambda12, double lambda21, double x1);

/// Wilson G^ex/RT with L12 = (V2/V1) exp(-A12/RT), L21 = (V1/V2) exp(-A21/RT),
/// R = 1.987 cal/(mol K). Endpoints return 0.
double wilson_gex(const WilsonParams& w, double x1, double t_kelvin);

/// CSV `x,y,T,gex_rt` (gex_rt is the excess Gibbs energy over RT).
void write_vle_csv(const std::string& path, const BinarySystem& sys,
                   const std::vector<VlePoint>& points, double p_mmhg);
std::vector<VlePoint> read_vle_csv(const std::string& path);

}  // namespace hybridkernel::vle
