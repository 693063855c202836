#include "kslab/order.hpp"

#include <cmath>
#include <string>

#include "kslab/common.hpp"
#include "kslab/kinetic.hpp"

namespace kslab {

OrderParams order_from_phasor(double re, double im, double phi_fallback) {
  OrderParams op;
  op.R = std::hypot(re, im);
  if (op.R > kTolR) {
    op.phi = wrap_angle(std::atan2(im, re));
    op.defined = true;
  } else {
    op.phi = phi_fallback;
    op.defined = false;
  }
  return op;
}

OrderParams global_order(const KineticState& s) {
  const auto& cc = s.grid().cos_center();
  const auto& sc = s.grid().sin_center();
  double re = 0.0;
  double im = 0.0;
  for (std::size_t k = 0; k < s.n_omega(); ++k) {
    const auto r = s.row(k);
    double a = 0.0;
    double b = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      a += r[j] * cc[j];
      b += r[j] * sc[j];
    }
    re += s.nodes()[k].weight * a;
    im += s.nodes()[k].weight * b;
  }
  const double h = s.grid().dtheta();
  return order_from_phasor(re * h, im * h, s.phi_memory());
}

OrderParams local_order(const KineticState& s, std::size_t k) {
  if (k >= s.n_omega()) throw Error(ErrorCode::invalid_argument, "omega index out of range");
  const double m = s.slice_mass(k);
  if (!(m > 0.0))
    throw Error(ErrorCode::invalid_argument, "slice " + std::to_string(k) + " has zero mass");
  const auto& cc = s.grid().cos_center();
  const auto& sc = s.grid().sin_center();
  const auto r = s.row(k);
  double a = 0.0;
  double b = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    a += r[j] * cc[j];
    b += r[j] * sc[j];
  }
  const double h = s.grid().dtheta();
  return order_from_phasor(a * h / m, b * h / m, s.phi_memory());
}

OrderMoments order_moments(const KineticState& s, const OrderParams& op) {
  const auto& cc = s.grid().cos_center();
  const auto& sc = s.grid().sin_center();
  const double cp = std::cos(op.phi);
  const double sp = std::sin(op.phi);
  OrderMoments m;
  for (std::size_t k = 0; k < s.n_omega(); ++k) {
    const auto r = s.row(k);
    double s2 = 0.0;
    double s1 = 0.0;
    double c1 = 0.0;
    double sd = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      const double sn = sc[j] * cp - cc[j] * sp;
      const double cs = cc[j] * cp + sc[j] * sp;
      s2 += r[j] * sn * sn;
      s1 += r[j] * sn;
      c1 += r[j] * cs;
      sd += r[j] * 2.0 * sn * cs;
    }
    const double w = s.nodes()[k].weight;
    const double om = s.nodes()[k].omega;
    m.sin2 += w * s2;
    m.sin_first += w * s1;
    m.sin_omega += w * om * s1;
    m.cos_omega += w * om * c1;
    m.sin_double += w * sd;
  }
  const double h = s.grid().dtheta();
  m.sin2 *= h;
  m.sin_first *= h;
  m.sin_omega *= h;
  m.cos_omega *= h;
  m.sin_double *= h;
  return m;
}

double rdot_formula(const KineticState& s, const OrderParams& op, const OrderMoments& m) {
  if (!op.defined) throw Error(ErrorCode::precondition, "rdot_formula: average phase undefined (R <= tol)");
  return -m.sin_omega + s.K() * op.R * m.sin2;
}

double rdot_formula(const KineticState& s) {
  const OrderParams op = global_order(s);
  if (!op.defined) throw Error(ErrorCode::precondition, "rdot_formula: average phase undefined (R <= tol)");
  return rdot_formula(s, op, order_moments(s, op));
}

double phidot_formula(const KineticState& s, const OrderParams& op, const OrderMoments& m) {
  if (!op.defined)
    throw Error(ErrorCode::precondition, "phidot_formula: average phase undefined (R <= tol)");
  return m.cos_omega / op.R - 0.5 * s.K() * m.sin_double;
}

double phidot_formula(const KineticState& s) {
  const OrderParams op = global_order(s);
  if (!op.defined)
    throw Error(ErrorCode::precondition, "phidot_formula: average phase undefined (R <= tol)");
  return phidot_formula(s, op, order_moments(s, op));
}

double phidot_bound(double R, double M, double K) {
  if (!(R > 0.0)) throw Error(ErrorCode::invalid_argument, "phidot_bound needs R > 0");
  return M / R + K * (1.0 - R);
}

double kinetic_potential(double R, double K) { return 0.5 * K * (1.0 - R * R); }

double kinetic_potential(const KineticState& s) { return kinetic_potential(global_order(s).R, s.K()); }

double potential_dissipation(double R, double K, const OrderMoments& m) {
  return -(K * R) * (K * R) * m.sin2;
}

}  // namespace kslab
