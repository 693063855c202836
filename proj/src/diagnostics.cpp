#include "kslab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kslab/common.hpp"
#include "kslab/constants.hpp"

namespace kslab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Exact integral over (lo, hi) of the periodic piecewise-constant function
// with value v[j] on [j h, (j+1) h).
double overlap_sum(const double* v, std::size_t n, double h, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  const long j0 = static_cast<long>(std::floor(lo / h));
  const long j1 = static_cast<long>(std::floor(hi / h));
  const long nn = static_cast<long>(n);
  double acc = 0.0;
  for (long j = j0; j <= j1; ++j) {
    const double a = std::max(lo, static_cast<double>(j) * h);
    const double b = std::min(hi, static_cast<double>(j + 1) * h);
    if (b > a) acc += v[((j % nn) + nn) % nn] * (b - a);
  }
  return acc;
}

void check_arc(const Arc& a) {
  if (!(a.halfwidth >= 0.0 && a.halfwidth <= kPi))
    throw Error(ErrorCode::invalid_argument, "arc half-width must lie in [0, pi]");
}

double arc_integral(const std::vector<double>& v, const KineticState& s, const Arc& a) {
  check_arc(a);
  const double c = wrap_angle(a.center);
  return overlap_sum(v.data(), v.size(), s.grid().dtheta(), c - a.halfwidth, c + a.halfwidth);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

void Interval::validate() const {
  if (!(param > 0.0 && param < kPi / 2.0))
    throw Error(ErrorCode::invalid_argument, "interval parameter " + fmt(param) + " outside (0, pi/2)");
}

Arc Interval::at(double phi) const {
  switch (kind) {
    case IntervalKind::iplus:
      return {phi, param};
    case IntervalKind::iminus:
      return {phi + kPi, param};
    case IntervalKind::lplus:
      return {phi, kPi / 2.0 - param};
    case IntervalKind::lminus:
      return {phi + kPi, kPi / 2.0 - param};
  }
  return {};
}

std::string Interval::name() const {
  const char* k = "Iplus";
  switch (kind) {
    case IntervalKind::iplus:
      k = "Iplus";
      break;
    case IntervalKind::iminus:
      k = "Iminus";
      break;
    case IntervalKind::lplus:
      k = "Lplus";
      break;
    case IntervalKind::lminus:
      k = "Lminus";
      break;
  }
  return std::string(k) + "(" + fmt(param) + ")";
}

Interval parse_interval(const std::string& s) {
  const auto open = s.find('(');
  const auto close = s.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw Error(ErrorCode::config, "interval '" + s + "' must look like Iplus(0.2)");
  const std::string k = s.substr(0, open);
  double p = 0.0;
  try {
    std::size_t used = 0;
    const std::string num = s.substr(open + 1, close - open - 1);
    p = std::stod(num, &used);
    if (used != num.size()) throw std::invalid_argument(num);
  } catch (const std::exception&) {
    throw Error(ErrorCode::config, "interval '" + s + "' has a non-numeric parameter");
  }
  Interval iv;
  if (k == "Iplus")
    iv = Interval::Iplus(p);
  else if (k == "Iminus")
    iv = Interval::Iminus(p);
  else if (k == "Lplus")
    iv = Interval::Lplus(p);
  else if (k == "Lminus")
    iv = Interval::Lminus(p);
  else
    throw Error(ErrorCode::config, "unknown interval kind '" + k + "' (Iplus, Iminus, Lplus, Lminus)");
  try {
    iv.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::config, "interval '" + s + "': " + e.what());
  }
  return iv;
}

double arc_mass(const KineticState& s, const Arc& a) {
  check_arc(a);
  const double c = wrap_angle(a.center);
  const double h = s.grid().dtheta();
  double m = 0.0;
  for (std::size_t k = 0; k < s.n_omega(); ++k)
    m += s.nodes()[k].weight * overlap_sum(s.row(k).data(), s.n_theta(), h, c - a.halfwidth, c + a.halfwidth);
  return m;
}

double arc_l2_density(const KineticState& s, const Arc& a) {
  std::vector<double> rho = s.density();
  for (double& x : rho) x *= x;
  return arc_integral(rho, s, a);
}

std::vector<double> arc_l2_slices(const KineticState& s, const Arc& a) {
  check_arc(a);
  std::vector<double> out(s.n_omega());
  std::vector<double> sq(s.n_theta());
  for (std::size_t k = 0; k < s.n_omega(); ++k) {
    const auto r = s.row(k);
    for (std::size_t j = 0; j < sq.size(); ++j) sq[j] = r[j] * r[j];
    out[k] = arc_integral(sq, s, a);
  }
  return out;
}

double arc_l2_folded(const KineticState& s, const Arc& a) {
  const auto per = arc_l2_slices(s, a);
  double acc = 0.0;
  for (std::size_t k = 0; k < per.size(); ++k) acc += s.nodes()[k].weight * per[k];
  return acc;
}

double interval_mass(const KineticState& s, const Interval& iv, const OrderParams& op) {
  iv.validate();
  if (!op.defined)
    throw Error(ErrorCode::precondition, "interval_mass: average phase undefined (R <= tol)");
  return arc_mass(s, iv.at(op.phi));
}

double interval_mass(const KineticState& s, const Interval& iv) {
  return interval_mass(s, iv, global_order(s));
}

std::vector<double> lyapunov_L2(const KineticState& s, const Interval& iv, bool per_omega,
                                const OrderParams& op) {
  iv.validate();
  if (!op.defined)
    throw Error(ErrorCode::precondition, "lyapunov_L2: average phase undefined (R <= tol)");
  const Arc a = iv.at(op.phi);
  if (per_omega) return arc_l2_slices(s, a);
  return {arc_l2_density(s, a)};
}

std::vector<double> lyapunov_L2(const KineticState& s, const Interval& iv, bool per_omega) {
  return lyapunov_L2(s, iv, per_omega, global_order(s));
}

RateFit fit_exponential_rate(const std::vector<double>& t, const std::vector<double>& v,
                             double t_a, double t_b) {
  if (t.size() != v.size()) throw Error(ErrorCode::invalid_argument, "fit: t and value lengths differ");
  RateFit fit;
  fit.t_a = t_a;
  fit.t_b = t_b;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_a || t[i] > t_b) continue;
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
      fit.shrunk = true;
      fit.t_b = i > 0 ? t[i - 1] : t_a;
      break;
    }
    xs.push_back(t[i]);
    ys.push_back(std::log(v[i]));
  }
  fit.n = xs.size();
  if (fit.n < 5)
    throw Error(ErrorCode::invalid_argument,
                "fit: fewer than 5 positive samples in [" + fmt(t_a) + ", " + fmt(fit.t_b) + "]");
  const double n = static_cast<double>(fit.n);
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < fit.n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < fit.n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::invalid_argument, "fit: window has a single distinct time");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < fit.n; ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    sse += e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

std::size_t detect_trend_start(const std::vector<double>& v, int direction, std::size_t run) {
  if (v.size() <= run) return static_cast<std::size_t>(-1);
  std::size_t streak = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double d = v[i] - v[i - 1];
    const bool ok = direction > 0 ? d > 0.0 : d < 0.0;
    streak = ok ? streak + 1 : 0;
    if (streak >= run) return i - run;
  }
  return static_cast<std::size_t>(-1);
}

double three_point_derivative(const double* t, const double* v, int m) {
  const double x = t[m];
  const double l0 = ((x - t[1]) + (x - t[2])) / ((t[0] - t[1]) * (t[0] - t[2]));
  const double l1 = ((x - t[0]) + (x - t[2])) / ((t[1] - t[0]) * (t[1] - t[2]));
  const double l2 = ((x - t[0]) + (x - t[1])) / ((t[2] - t[0]) * (t[2] - t[1]));
  return l0 * v[0] + l1 * v[1] + l2 * v[2];
}

void DiagnosticsRecorder::operator()(const KineticState& s, double) {
  DiagnosticsRecord r;
  r.t = s.t();
  r.dt = cfl_dt(s, cfg_.step.cfl, cfg_.step.dt_max);
  const OrderParams op = global_order(s);
  r.R = op.R;
  r.phi = op.phi;
  r.phi_defined = op.defined;
  r.V = kinetic_potential(op.R, s.K());
  if (op.defined) {
    for (const auto& iv : cfg_.intervals) r.masses.push_back(interval_mass(s, iv, op));
    if (cfg_.lambda_delta > 0.0)
      r.lambda = lyapunov_L2(s, Interval::Iminus(cfg_.lambda_delta), false, op)[0];
    if (cfg_.gamma_plus > 0.0) r.gamma_plus = lyapunov_L2(s, Interval::Lplus(cfg_.gamma_plus), true, op);
    if (cfg_.gamma_minus > 0.0)
      r.gamma_minus = arc_l2_folded(s, Interval::Lminus(cfg_.gamma_minus).at(op.phi));
    r.mass_lplus_pi3 = interval_mass(s, Interval::Lplus(kPi / 3.0), op);
    const OrderMoments mom = order_moments(s, op);
    r.sin_moment = mom.sin_first;
    r.rdot_formula = rdot_formula(s, op, mom);
    r.phidot_formula = phidot_formula(s, op, mom);
    r.dissipation = potential_dissipation(op.R, s.K(), mom);
  } else {
    r.masses.assign(cfg_.intervals.size(), kNaN);
    r.lambda = kNaN;
    if (cfg_.gamma_plus > 0.0) r.gamma_plus.assign(s.n_omega(), kNaN);
    r.gamma_minus = kNaN;
    r.mass_lplus_pi3 = kNaN;
    r.sin_moment = kNaN;
    r.rdot_formula = kNaN;
    r.phidot_formula = kNaN;
    r.dissipation = kNaN;
  }
  if (cfg_.lambda_delta <= 0.0) r.lambda = kNaN;
  if (cfg_.gamma_minus <= 0.0) r.gamma_minus = kNaN;
  records_.push_back(std::move(r));
}

void DiagnosticsRecorder::finalize(double M, double K, double dtheta) {
  const std::size_t n = records_.size();
  for (std::size_t i = 0; i < n && n >= 3; ++i) {
    const std::size_t a = i == 0 ? 0 : (i + 1 == n ? n - 3 : i - 1);
    const int m = static_cast<int>(i - a);
    double ts[3];
    double Rs[3];
    double Vs[3];
    double Ps[3];
    bool ok = true;
    for (int q = 0; q < 3; ++q) {
      const auto& rr = records_[a + q];
      ts[q] = rr.t;
      Rs[q] = rr.R;
      Vs[q] = rr.V;
      ok = ok && rr.phi_defined;
      Ps[q] = q == 0 ? rr.phi : Ps[q - 1] + wrap_signed(rr.phi - records_[a + q - 1].phi);
    }
    auto& r = records_[i];
    r.rdot_measured = three_point_derivative(ts, Rs, m);
    r.vdot_measured = three_point_derivative(ts, Vs, m);
    r.phidot_measured = ok ? three_point_derivative(ts, Ps, m) : kNaN;
    r.measured_valid = ok;
  }

  for (auto& r : records_) {
    r.checks.clear();
    const double tol = 10.0 * (r.dt + dtheta * dtheta);
    for (std::size_t q = 0; q < r.masses.size(); ++q) {
      if (std::isnan(r.masses[q])) continue;
      const double mg = std::min(r.masses[q] + 1e-12, 1.0 + 1e-10 - r.masses[q]);
      r.checks.push_back({"mass_range_" + cfg_.intervals[q].name(), mg, mg >= 0.0});
    }
    if (!r.measured_valid) continue;
    {
      const double mg = M + K + 0.01 - std::abs(r.rdot_measured);
      r.checks.push_back({"rdot_lipschitz", mg, mg >= 0.0});
    }
    {
      const double mg = tol * (M + K) - std::abs(r.rdot_measured - r.rdot_formula);
      r.checks.push_back({"rdot_consistency", mg, mg >= 0.0});
    }
    if (r.R > 0.05) {
      const double bound = phidot_bound(r.R, M, K);
      const double mg = bound + tol - std::abs(r.phidot_measured);
      r.checks.push_back({"phidot_bound", mg, mg >= 0.0});
      const double mc = tol * (M + K) - std::abs(r.phidot_measured - r.phidot_formula);
      r.checks.push_back({"phidot_consistency", mc, mc >= 0.0});
    }
    if (M == 0.0) {
      const double mg = tol * K * K - std::abs(r.vdot_measured - r.dissipation);
      r.checks.push_back({"dissipation_consistency", mg, mg >= 0.0});
    }
    if (cfg_.sandwich_gamma > 0.0 && r.rdot_formula <= 0.0 && r.R > 0.0) {
      double E1 = 0.0;
      double E2 = 0.0;
      constants_E12(K, M, r.R, cfg_.sandwich_gamma, E1, E2);
      const double lo = 2.0 * r.mass_lplus_pi3 - E2 - 1.0;
      const double hi = 2.0 * r.mass_lplus_pi3 + 2.0 * E1 - 1.0;
      const double mg = std::min(r.R - lo, hi - r.R) + 5.0 * dtheta;
      r.checks.push_back({"mass_sandwich", mg, mg >= 0.0});
    }
  }
}

std::vector<DiagnosticsRecord> run_with_diagnostics(KineticState& s, double t_end,
                                                    double sample_every,
                                                    const DiagnosticsConfig& cfg,
                                                    const SampleSink& on_step) {
  DiagnosticsRecorder rec(cfg);
  run(s, t_end, sample_every, cfg.step, [&](const KineticState& st, double dt) { rec(st, dt); },
      on_step);
  rec.finalize(s.support_bound(), s.K(), s.grid().dtheta());
  return std::move(rec.records());
}

std::vector<std::string> record_columns(const DiagnosticsConfig& cfg, std::size_t n_omega) {
  std::vector<std::string> c = {"t", "dt", "R", "phi", "phi_defined"};
  for (const auto& iv : cfg.intervals) c.push_back("mass_" + iv.name());
  c.push_back("lambda");
  if (cfg.gamma_plus > 0.0)
    for (std::size_t k = 0; k < n_omega; ++k) c.push_back("gamma_plus_" + std::to_string(k));
  for (const char* n : {"gamma_minus", "mass_Lplus_pi3", "V", "dissipation", "sin_moment",
                        "rdot_formula", "phidot_formula", "rdot_measured", "phidot_measured",
                        "vdot_measured"})
    c.emplace_back(n);
  return c;
}

std::vector<double> record_row(const DiagnosticsRecord& r) {
  std::vector<double> v = {r.t, r.dt, r.R, r.phi, r.phi_defined ? 1.0 : 0.0};
  v.insert(v.end(), r.masses.begin(), r.masses.end());
  v.push_back(r.lambda);
  v.insert(v.end(), r.gamma_plus.begin(), r.gamma_plus.end());
  for (double x : {r.gamma_minus, r.mass_lplus_pi3, r.V, r.dissipation, r.sin_moment, r.rdot_formula,
                   r.phidot_formula, r.rdot_measured, r.phidot_measured, r.vdot_measured})
    v.push_back(x);
  return v;
}

}  // namespace kslab
