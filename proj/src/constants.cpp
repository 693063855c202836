#include "kslab/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kslab/common.hpp"

namespace kslab {

namespace {

const double kSqrt3 = std::sqrt(3.0);

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

double gamma0_upper_bound(double eps0) {
  return std::asin(std::clamp(1.0 - 2.0 * eps0 / (2.0 * kSqrt3 + 1.0), -1.0, 1.0));
}

double mstar(double eps0, double gamma0, bool checked) {
  const double value =
      (2.0 + eps0 + std::cos(gamma0)) / ((1.0 + std::sin(gamma0)) * (1.0 + std::cos(gamma0)));
  if (!checked) return value;
  const double eps_max = 3.0 * kSqrt3 / 4.0 - 1.0;
  if (!(eps0 > 0.0 && eps0 < eps_max))
    throw Error(ErrorCode::precondition,
                "mstar: eps0 = " + fmt(eps0) + " outside (0, 3sqrt(3)/4 - 1 = " + fmt(eps_max) + ")");
  if (!(gamma0 >= kPi / 3.0))
    throw Error(ErrorCode::precondition, "mstar: gamma0 = " + fmt(gamma0) + " below pi/3");
  const double gmax = gamma0_upper_bound(eps0);
  if (!(gamma0 < gmax))
    throw Error(ErrorCode::precondition, "mstar: gamma0 = " + fmt(gamma0) +
                                             " not below asin(1 - 2 eps0/(2sqrt(3)+1)) = " + fmt(gmax));
  const double lower = (1.0 + eps0) / (1.0 + std::sin(gamma0));
  if (!(lower < value && value < 1.0))
    throw Error(ErrorCode::numerical, "mstar: value " + fmt(value) + " not in (" + fmt(lower) + ", 1)");
  return value;
}

void constants_E12(double K, double M, double Rlow, double gamma, double& E1, double& E2) {
  if (!(K > 0.0) || !(Rlow > 0.0) || M < 0.0)
    throw Error(ErrorCode::precondition, "constants_E: need K > 0, Rlow > 0, M >= 0");
  if (!(gamma >= kPi / 3.0 && gamma < kPi / 2.0))
    throw Error(ErrorCode::precondition, "constants_E: gamma = " + fmt(gamma) + " outside [pi/3, pi/2)");
  const double s = std::sin(gamma);
  const double c2 = std::cos(gamma) * std::cos(gamma);
  const double q = M / (K * Rlow);
  E1 = s / c2 * q + 0.5 * (1.0 - s);
  E2 = 1.0 - s + (1.0 + s) * q / c2 + s / c2 * q;
}

ConstantsE constants_E(double K, double M, double Rlow, double gamma, double mu) {
  if (!(gamma > kPi / 3.0 && gamma < kPi / 2.0))
    throw Error(ErrorCode::precondition, "constants_E: gamma = " + fmt(gamma) + " outside (pi/3, pi/2)");
  if (!(mu > 0.0)) throw Error(ErrorCode::precondition, "constants_E: need mu > 0");
  ConstantsE e;
  constants_E12(K, M, Rlow, gamma, e.E1, e.E2);
  const double M2 = M * M;
  const double need = M2 / (2.0 * Rlow * Rlow) - 3.0 * M2 / (4.0 * Rlow);
  if (!(K * K * mu > need))
    throw Error(ErrorCode::precondition, "constants_E: growth-step condition K^2 mu > M^2/(2 Rlow^2) - "
                                         "3 M^2/(4 Rlow) fails (" + fmt(K * K * mu) + " <= " + fmt(need) + ")");
  if (M == 0.0) {
    e.E3 = 0.0;
    e.d = std::numeric_limits<double>::infinity();
    return e;
  }
  const double c = M2 / (6.0 * Rlow * K) - M2 / (4.0 * K);
  const double A = Rlow * K * mu / 3.0 - c;
  const double B = M2 / (4.0 * K) + M2 / (2.0 * Rlow * K);
  if (!(A > 0.0))
    throw Error(ErrorCode::precondition,
                "constants_E: log argument nonpositive, Rlow K mu/3 - (M^2/(6 Rlow K) - M^2/(4K)) = " + fmt(A));
  const double ratio = B / A;
  const double inv4K = 1.0 / (4.0 * K);
  e.E3 = std::abs(Rlow * mu / 12.0 * ratio + inv4K * c * (1.0 - ratio) + B * inv4K * std::log(A / B));
  e.d = inv4K * std::log(A / B);
  return e;
}

double r_infinity(double M, double K) {
  if (!(K > 0.0) || M < 0.0) throw Error(ErrorCode::invalid_argument, "r_infinity: need K > 0, M >= 0");
  const double x = M / K;
  return 1.0 + x - std::sqrt(x * x + 4.0 * x);
}

RootPair r_pm(double eta, double M, double K) {
  if (!(K > 0.0)) throw Error(ErrorCode::invalid_argument, "r_pm: need K > 0");
  const double disc = 0.75 - 16.0 * kSqrt3 * M / K - 4.0 * eta;
  if (disc < 0.0)
    throw Error(ErrorCode::precondition, "r_pm: negative discriminant " + fmt(disc) +
                                             "; K too small for this M and eta");
  const double h = 0.5 * std::sqrt(disc);
  return {kSqrt3 / 4.0 - h, kSqrt3 / 4.0 + h};
}

double riccati_rhs(double beta, double eta, double M, double K) {
  return K / (4.0 * kSqrt3) * (-beta * beta + 0.5 * kSqrt3 * beta - 4.0 * kSqrt3 * M / K - eta);
}

Path riccati_solve(double T, double eta, double beta_T, double M, double K, double horizon,
                   std::size_t steps) {
  const RootPair r = r_pm(eta, M, K);
  if (!(horizon > 0.0)) throw Error(ErrorCode::invalid_argument, "riccati_solve: horizon must be > 0");
  if (steps == 0) {
    const double rate = K / (4.0 * kSqrt3) * std::max(r.plus - r.minus, 0.05);
    steps = static_cast<std::size_t>(std::max(2000.0, std::ceil(horizon * rate * 200.0)));
  }
  const double h = horizon / static_cast<double>(steps);
  Path p;
  p.t.reserve(steps + 1);
  p.y.reserve(steps + 1);
  double b = beta_T;
  p.t.push_back(T);
  p.y.push_back(b);
  for (std::size_t i = 0; i < steps; ++i) {
    const double k1 = riccati_rhs(b, eta, M, K);
    const double k2 = riccati_rhs(b + 0.5 * h * k1, eta, M, K);
    const double k3 = riccati_rhs(b + 0.5 * h * k2, eta, M, K);
    const double k4 = riccati_rhs(b + h * k3, eta, M, K);
    b += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    if (!std::isfinite(b)) throw Error(ErrorCode::numerical, "riccati_solve: solution blew up");
    p.t.push_back(T + h * static_cast<double>(i + 1));
    p.y.push_back(b);
  }
  return p;
}

double epsilon_kappa(double kappa, double M, double K) {
  if (!(kappa > 0.0)) throw Error(ErrorCode::invalid_argument, "epsilon_kappa: need kappa > 0");
  if (!(K > 0.0)) throw Error(ErrorCode::invalid_argument, "epsilon_kappa: need K > 0");
  return (kappa + 1.0) / (kappa * kappa) * (M / K) + (1.0 - kappa) / kappa;
}

double F_kappa(double q, double kappa, double K, double eps_kappa) {
  const double s = std::sqrt(std::max(0.0, 1.0 - q * q));
  return kappa * K * (s - eps_kappa) * s;
}

double D_eps_kappa(double eps, double kappa, double K, double eps_kappa) {
  const double a = std::sqrt(1.0 - eps_kappa * eps_kappa) - eps;
  const double f = F_kappa(a, kappa, K, eps_kappa);
  if (!(f > 0.0)) throw Error(ErrorCode::precondition, "D_eps_kappa: F_kappa vanishes at the endpoint");
  return 2.0 * a / f;
}

Path barrier_solve(double p_star, double t_star, double T_kappa, double kappa, double K,
                   double eps_kappa, double dt) {
  if (!(eps_kappa >= 0.0 && eps_kappa < 1.0))
    throw Error(ErrorCode::precondition, "barrier_solve: need 0 <= eps_kappa < 1");
  const double cap = std::sqrt(1.0 - eps_kappa * eps_kappa);
  if (std::abs(p_star) > cap * (1.0 + 1e-15))
    throw Error(ErrorCode::invalid_argument,
                "barrier_solve: |p_star| = " + fmt(std::abs(p_star)) + " exceeds sqrt(1 - eps^2) = " + fmt(cap));
  if (T_kappa > t_star) throw Error(ErrorCode::invalid_argument, "barrier_solve: T_kappa after t_star");
  if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "barrier_solve: dt must be > 0");
  const std::size_t steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((t_star - T_kappa) / dt - 1e-9)));
  const double h = -(t_star - T_kappa) / static_cast<double>(steps);
  auto F = [&](double q) { return F_kappa(q, kappa, K, eps_kappa); };
  Path p;
  p.t.resize(steps + 1);
  p.y.resize(steps + 1);
  double q = p_star;
  p.t[steps] = t_star;
  p.y[steps] = q;
  for (std::size_t i = 0; i < steps; ++i) {
    const double k1 = F(q);
    const double k2 = F(q + 0.5 * h * k1);
    const double k3 = F(q + 0.5 * h * k2);
    const double k4 = F(q + h * k3);
    q += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    q = std::clamp(q, -cap, cap);
    const std::size_t idx = steps - 1 - i;
    p.t[idx] = i + 1 == steps ? T_kappa : t_star + h * static_cast<double>(i + 1);
    p.y[idx] = q;
  }
  return p;
}

double barrier_crossing_time(double eps, double kappa, double K, double eps_kappa, double dt) {
  const double a = std::sqrt(1.0 - eps_kappa * eps_kappa) - eps;
  if (!(a > 0.0)) throw Error(ErrorCode::precondition, "barrier_crossing_time: eps too large");
  const double fmin = F_kappa(a, kappa, K, eps_kappa);
  if (!(fmin > 0.0)) throw Error(ErrorCode::precondition, "barrier_crossing_time: F_kappa not positive");
  if (dt <= 0.0) dt = 1e-4 * (2.0 * a / fmin);
  auto F = [&](double q) { return F_kappa(q, kappa, K, eps_kappa); };
  double q = -a;
  double t = 0.0;
  const double t_cap = 1e3 * (2.0 * a / fmin);
  while (q < a) {
    const double k1 = F(q);
    const double k2 = F(q + 0.5 * dt * k1);
    const double k3 = F(q + 0.5 * dt * k2);
    const double k4 = F(q + dt * k3);
    const double qn = q + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    if (qn >= a) return t + dt * (a - q) / (qn - q);
    q = qn;
    t += dt;
    if (t > t_cap) throw Error(ErrorCode::numerical, "barrier_crossing_time: no crossing");
  }
  return t;
}

double self_consistency_H(const FrequencyDensity& g, double K, double R) {
  if (!(K > 0.0) || !(R > 0.0)) throw Error(ErrorCode::invalid_argument, "H(R): need K > 0 and R > 0");
  if (g.kind() == FrequencyKind::dirac_at_zero) return 1.0;
  const double c = K * R;
  std::vector<double> breaks;
  if (g.kind() == FrequencyKind::uniform) {
    breaks = {-g.halfwidth(), g.halfwidth()};
  } else {
    breaks = g.table_omegas();
  }
  std::vector<double> xs;
  std::vector<double> ws;
  gauss_legendre(48, xs, ws);
  // omega = c sin s turns sqrt(1 - (omega/c)^2) d omega into c cos^2 s ds
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = std::max(breaks[i], -c);
    const double b = std::min(breaks[i + 1], c);
    if (!(b > a)) continue;
    const double sa = std::asin(std::clamp(a / c, -1.0, 1.0));
    const double sb = std::asin(std::clamp(b / c, -1.0, 1.0));
    const double mid = 0.5 * (sa + sb);
    const double rad = 0.5 * (sb - sa);
    double acc = 0.0;
    for (std::size_t q = 0; q < xs.size(); ++q) {
      const double s = mid + rad * xs[q];
      const double cs = std::cos(s);
      acc += ws[q] * g.density(c * std::sin(s)) * c * cs * cs;
    }
    total += rad * acc;
  }
  return total;
}

EquilibriumResult equilibrium_R(const FrequencyDensity& g, double K) {
  if (!(K > 0.0)) throw Error(ErrorCode::invalid_argument, "equilibrium_R: need K > 0");
  EquilibriumResult res;
  const double M = g.support_bound();
  res.H_at_one = self_consistency_H(g, K, 1.0);
  auto F = [&](double R) { return R - self_consistency_H(g, K, R); };
  const double lo = M / K;
  if (lo >= 1.0) {
    res.message = "no solution at R=1 probe; H(1) = " + fmt(res.H_at_one) + " and (M/K, 1] is empty";
    return res;
  }
  double hiR = 1.0;
  double fhi = F(hiR);
  if (std::abs(fhi) <= 1e-14) {
    res.found = true;
    res.R = 1.0;
  } else {
    const std::size_t n_scan = 4000;
    const double step_R = (1.0 - lo) / static_cast<double>(n_scan);
    bool bracketed = false;
    double loR = hiR;
    for (std::size_t i = 1; i < n_scan; ++i) {
      const double R = 1.0 - step_R * static_cast<double>(i);
      const double f = F(R);
      if (f == 0.0) {
        res.found = true;
        res.R = R;
        break;
      }
      if ((f < 0.0) != (fhi < 0.0)) {
        loR = R;
        bracketed = true;
        break;
      }
      hiR = R;
      fhi = f;
    }
    if (!res.found && bracketed) {
      double a = loR;
      double b = hiR;
      double fa = F(a);
      for (int it = 0; it < 200 && b - a > 1e-16; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = F(m);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      res.found = true;
      res.R = std::abs(F(a)) < std::abs(F(b)) ? a : b;
    }
  }
  if (!res.found) {
    res.message = "no sign change of R - H(R) on (M/K, 1]; H(1) = " + fmt(res.H_at_one);
    return res;
  }
  res.residual = std::abs(F(res.R));
  const double q = M / (K * res.R);
  res.margin_sqrt_bound = res.R - std::sqrt(std::max(0.0, 1.0 - q * q));
  res.margin_support_bound = res.R - g.inner_support() * g.min_density_on_inner_support();
  return res;
}

bool HypothesisReport::group_passes(const std::string& group) const {
  for (const auto& c : checks)
    if (c.group == group && !c.pass) return false;
  return true;
}

bool HypothesisReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

const InequalityCheck* HypothesisReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

HypothesisReport hypothesis_check(const HypothesisInput& in) {
  HypothesisReport rep;
  auto add = [&](std::string name, std::string group, double lhs, double rhs, std::string note = {},
                 bool inclusive = false) {
    InequalityCheck c;
    c.name = std::move(name);
    c.group = std::move(group);
    c.lhs = lhs;
    c.rhs = rhs;
    c.margin = lhs - rhs;
    c.pass = std::isfinite(c.margin) && (inclusive ? c.margin >= 0.0 : c.margin > 0.0);
    c.note = std::move(note);
    rep.checks.push_back(std::move(c));
  };
  const double K = in.K;
  const double M = in.M;
  const double R0 = in.R0;
  const double mu = in.mu;

  // concentration around the average phase with distributed frequencies
  add("concentration_coupling", "concentration", K, M / in.eps0 * (1.0 + 1.0 / in.eps0),
      "K > (M/eps0)(1 + 1/eps0)");
  add("eps0_positive", "concentration", in.eps0, 0.0);
  add("eps0_below_cap", "concentration", 3.0 * kSqrt3 / 4.0 - 1.0, in.eps0,
      "eps0 < 3sqrt(3)/4 - 1");
  add("gamma0_at_least_pi_over_3", "concentration", in.gamma0, kPi / 3.0, "gamma0 >= pi/3", true);
  add("gamma0_below_cap", "concentration", gamma0_upper_bound(in.eps0), in.gamma0,
      "gamma0 < asin(1 - 2 eps0/(2sqrt(3)+1))");

  // asymptotic lower-bound framework
  add("initial_order_positive", "framework", R0, 0.0);
  {
    const double rhs = 2.0 * M / (K * R0) + 4.0 * M / (K * R0 * R0) +
                       2.0 * std::sqrt(2.0) / (R0 * std::sqrt(R0)) * std::sqrt(M / K + mu);
    add("lower_bound_smallness", "framework", 0.5, rhs,
        "1/2 > 2M/(K R0) + 4M/(K R0^2) + 2sqrt(2)/(R0^1.5) sqrt(M/K + mu); equals the "
        "mass-retention condition at Rlow = R0/2");
  }
  add("growth_step_condition", "framework", K * K * mu,
      2.0 * M * M / (R0 * R0) - 1.5 * M * M / R0, "K^2 mu > 2M^2/R0^2 - 3M^2/(2R0)");
  {
    const double den = 3.0 - (kSqrt3 - 2.0 * R0) * (kSqrt3 - 2.0 * R0);
    const double b2 = den > 0.0 ? 64.0 * kSqrt3 * M / den : std::numeric_limits<double>::infinity();
    add("riccati_coupling", "framework", K, std::max(64.0 * M / kSqrt3, b2),
        "K > max(64M/sqrt(3), 64sqrt(3)M/(3 - (sqrt(3) - 2R0)^2))");
  }
  add("gamma_above_pi_over_3", "framework", in.gamma, kPi / 3.0);
  add("gamma_below_pi_over_2", "framework", kPi / 2.0, in.gamma);
  {
    double E1 = std::numeric_limits<double>::quiet_NaN();
    double E2 = E1;
    double E3 = E1;
    std::string note;
    try {
      const ConstantsE e = constants_E(K, M, 0.5 * R0, in.gamma, mu);
      E1 = e.E1;
      E2 = e.E2;
      E3 = e.E3;
    } catch (const Error& err) {
      note = err.what();
      try {
        constants_E12(K, M, 0.5 * R0, in.gamma, E1, E2);
      } catch (const Error&) {
      }
    }
    add("sandwich_margin", "framework", R0 - 2.0 * E1 - E2, 0.5 * R0,
        "R0 - 2E1 - E2 > R0/2 with Rlow = R0/2");
    add("growth_beats_losses", "framework", mu * R0 / 24.0, 2.0 * E1 + E2 + E3,
        note.empty() ? "mu R0/24 > 2E1 + E2 + E3 with Rlow = R0/2" : note);
  }
  add("kappa_above_two_thirds", "framework", in.kappa, 2.0 / 3.0);
  add("kappa_below_sqrt3_over_2", "framework", kSqrt3 / 2.0, in.kappa);
  {
    const double disc = 3.0 - 64.0 * kSqrt3 * M / K;
    const double cap = disc >= 0.0 ? kSqrt3 / 4.0 + 0.25 * std::sqrt(disc)
                                   : std::numeric_limits<double>::quiet_NaN();
    add("kappa_riccati_cap", "framework", cap, in.kappa,
        "kappa < sqrt(3)/4 + sqrt(3 - 64sqrt(3)M/K)/4");
  }
  {
    double ek = std::numeric_limits<double>::quiet_NaN();
    if (in.kappa > 0.0 && K > 0.0) ek = epsilon_kappa(in.kappa, M, K);
    add("eps_kappa_below_one", "framework", 1.0, ek);
  }

  add("practical_sync_coupling", "practical", K,
      15.0 * M / (2.0 * (std::sqrt(4.0 - 2.0 * std::sqrt(2.0)) - 1.0)),
      "K > 15M/(2(sqrt(4 - 2sqrt(2)) - 1))");
  return rep;
}

}  // namespace kslab
