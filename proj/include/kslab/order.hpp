#pragma once

#include <cstddef>

namespace kslab {

class KineticState;

/// Amplitude and average phase. `phi` is only meaningful when `defined`.
struct OrderParams {
  double R = 0.0;
  double phi = 0.0;
  bool defined = false;
};

/// Builds OrderParams from a phasor sum; below kTolR the phase falls back
/// to `phi_fallback` and is flagged undefined.
OrderParams order_from_phasor(double re, double im, double phi_fallback);

/// R e^{i phi} = sum_k w_k sum_j e^{i theta_j} f_kj dtheta.
OrderParams global_order(const KineticState& s);

/// Order parameter of the conditional density of slice k.
/// Throws invalid_argument for a zero-mass slice.
OrderParams local_order(const KineticState& s, std::size_t k);

/// Integrals against rho that the derivative formulas need, evaluated at
/// the phase of `op`.
struct OrderMoments {
  double sin2 = 0.0;        // int sin^2(theta - phi) rho
  double sin_omega = 0.0;   // iint sin(theta - phi) omega f
  double cos_omega = 0.0;   // iint cos(theta - phi) omega f
  double sin_double = 0.0;  // int sin 2(theta - phi) rho
  double sin_first = 0.0;   // int sin(theta - phi) rho, zero up to quadrature
};

OrderMoments order_moments(const KineticState& s, const OrderParams& op);

/// dR/dt from the closed form; throws precondition when phi is undefined.
double rdot_formula(const KineticState& s);
double rdot_formula(const KineticState& s, const OrderParams& op, const OrderMoments& m);

/// dphi/dt from the closed form; throws precondition when phi is undefined.
double phidot_formula(const KineticState& s);
double phidot_formula(const KineticState& s, const OrderParams& op, const OrderMoments& m);

/// M/R + K(1-R). Throws invalid_argument for R <= 0.
double phidot_bound(double R, double M, double K);

/// K/2 (1 - R^2).
double kinetic_potential(const KineticState& s);
double kinetic_potential(double R, double K);

/// -(K R)^2 int sin^2(theta - phi) rho; the rate of change of the
/// potential for identical oscillators.
double potential_dissipation(double R, double K, const OrderMoments& m);

}  // namespace kslab
