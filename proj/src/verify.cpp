#include "kslab/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include "kslab/common.hpp"
#include "kslab/constants.hpp"
#include "kslab/diagnostics.hpp"
#include "kslab/frequency.hpp"
#include "kslab/kinetic.hpp"
#include "kslab/particle.hpp"

namespace kslab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

double cosine_profile(double theta, double a) { return (1.0 + 2.0 * a * std::cos(theta)) / kTwoPi; }

struct KineticRun {
  std::vector<DiagnosticsRecord> recs;
  double dtheta = 0.0;
  double M = 0.0;
  double K = 0.0;
  double seconds = 0.0;
  double max_slice_drift = 0.0;
  double total_drift = 0.0;
  double min_step_dR = std::numeric_limits<double>::infinity();
};

// Distributed frequencies, the setting shared by the conservation, rate
// consistency and mean-field comparisons.
KineticRun make_run1() {
  KineticRun run;
  const auto g = FrequencyDensity::uniform(0.1);
  auto s = KineticState::from_profile(PhaseGrid(512), g.quadrature_nodes(16), 2.0,
                                      [](double th, double) { return cosine_profile(th, 0.2); });
  s.set_support_bound(g.support_bound());
  std::vector<double> m0(s.n_omega());
  for (std::size_t k = 0; k < s.n_omega(); ++k) m0[k] = s.slice_mass(k);
  const double total0 = s.total_mass();
  DiagnosticsConfig cfg;
  cfg.intervals = {Interval::Iplus(0.2), Interval::Iminus(0.2)};
  const auto t0 = Clock::now();
  run.recs = run_with_diagnostics(s, 20.0, 0.05, cfg, [&](const KineticState& st, double) {
    for (std::size_t k = 0; k < st.n_omega(); ++k)
      run.max_slice_drift = std::max(run.max_slice_drift, std::abs(st.slice_mass(k) - m0[k]) / m0[k]);
    run.total_drift = std::max(run.total_drift, std::abs(st.total_mass() - total0));
  });
  run.seconds = seconds_since(t0);
  run.dtheta = s.grid().dtheta();
  run.M = g.support_bound();
  run.K = 2.0;
  return run;
}

// Identical oscillators.
KineticRun make_run2() {
  KineticRun run;
  const auto g = FrequencyDensity::dirac();
  auto s = KineticState::from_profile(PhaseGrid(1024), g.quadrature_nodes(1), 1.0,
                                      [](double th, double) { return cosine_profile(th, 0.2); });
  s.set_support_bound(0.0);
  DiagnosticsConfig cfg;
  cfg.intervals = {Interval::Iplus(0.2), Interval::Iplus(0.5), Interval::Iminus(0.2),
                   Interval::Iminus(0.5)};
  cfg.lambda_delta = 0.5;
  double prevR = global_order(s).R;
  const auto t0 = Clock::now();
  run.recs = run_with_diagnostics(s, 40.0, 0.1, cfg, [&](const KineticState& st, double) {
    const double R = global_order(st).R;
    run.min_step_dR = std::min(run.min_step_dR, R - prevR);
    prevR = R;
  });
  run.seconds = seconds_since(t0);
  run.dtheta = s.grid().dtheta();
  run.M = 0.0;
  run.K = 1.0;
  return run;
}

constexpr double kRun12M = 0.05;
constexpr double kRun12K = 10.0;
constexpr double kRun12Amplitude = 0.3;
constexpr double kKappa = 0.8;

KineticRun make_run12() {
  KineticRun run;
  const auto g = FrequencyDensity::uniform(kRun12M);
  auto s = KineticState::from_profile(PhaseGrid(1024), g.quadrature_nodes(16), kRun12K,
                                      [](double th, double) { return cosine_profile(th, kRun12Amplitude); });
  s.set_support_bound(g.support_bound());
  DiagnosticsConfig cfg;
  cfg.intervals = {Interval::Lplus(kPi / 3.0)};
  cfg.lambda_delta = 0.0;
  cfg.gamma_minus = kPi / 3.0;
  cfg.sandwich_gamma = 1.45;
  const auto t0 = Clock::now();
  run.recs = run_with_diagnostics(s, 60.0, 0.05, cfg);
  run.seconds = seconds_since(t0);
  run.dtheta = s.grid().dtheta();
  run.M = kRun12M;
  run.K = kRun12K;
  return run;
}

class Runs {
 public:
  const KineticRun& run1() {
    if (!r1_) r1_ = make_run1();
    return *r1_;
  }
  const KineticRun& run2() {
    if (!r2_) r2_ = make_run2();
    return *r2_;
  }
  const KineticRun& run12() {
    if (!r12_) r12_ = make_run12();
    return *r12_;
  }

 private:
  std::optional<KineticRun> r1_, r2_, r12_;
};

std::vector<double> column(const std::vector<DiagnosticsRecord>& recs, double DiagnosticsRecord::*f) {
  std::vector<double> out;
  out.reserve(recs.size());
  for (const auto& r : recs) out.push_back(r.*f);
  return out;
}

CriterionResult c1(Runs& runs) {
  CriterionResult r{1, "conservation", false, "", 0.0, {}};
  const auto& run = runs.run1();
  r.pass = run.max_slice_drift <= 1e-12 && run.total_drift <= 1e-10 && run.seconds < 30.0;
  r.detail = "max per-slice relative drift " + num(run.max_slice_drift, 3) + " (<= 1e-12), total drift " +
             num(run.total_drift, 3) + " (<= 1e-10), run " + num(run.seconds, 3) + " s (< 30)";
  r.metrics = {{"max_slice_drift", run.max_slice_drift}, {"total_drift", run.total_drift},
               {"run_seconds", run.seconds}};
  return r;
}

CriterionResult c2(Runs& runs) {
  CriterionResult r{2, "identical-oscillator concentration", false, "", 0.0, {}};
  const auto& run = runs.run2();
  const auto& last = run.recs.back();
  const double mass = last.masses[0];
  r.pass = mass >= 0.99 && run.min_step_dR >= -1e-8 && last.R >= 0.99 && run.seconds < 60.0;
  r.detail = "final M(Iplus(0.2)) " + num(mass, 8) + " (>= 0.99), min per-step dR " +
             num(run.min_step_dR, 3) + " (>= -1e-8), final R " + num(last.R, 8) + " (>= 0.99), run " +
             num(run.seconds, 3) + " s (< 60)";
  r.metrics = {{"final_mass_Iplus_0.2", mass}, {"min_step_dR", run.min_step_dR}, {"final_R", last.R},
               {"run_seconds", run.seconds}};
  return r;
}

CriterionResult c3(Runs& runs) {
  CriterionResult r{3, "antipodal L2 decay rate", false, "", 0.0, {}};
  const auto& run = runs.run2();
  const auto t = column(run.recs, &DiagnosticsRecord::t);
  const auto lam = column(run.recs, &DiagnosticsRecord::lambda);
  const double R0 = run.recs.front().R;
  const double target = -0.9 * (R0 * std::cos(0.5) / 2.0) * run.K;
  const std::size_t i1 = detect_trend_start(lam, -1);
  if (i1 == static_cast<std::size_t>(-1)) {
    r.detail = "no decreasing trend of Lambda found";
    return r;
  }
  const double T1 = t[i1];
  const double ta = std::max(T1, 0.5 * t.back());
  try {
    const RateFit fit = fit_exponential_rate(t, lam, ta, t.back());
    r.pass = fit.slope <= target && fit.r2 >= 0.98;
    r.detail = "slope " + num(fit.slope) + " over [" + num(fit.t_a) + ", " + num(fit.t_b) + "] (<= " +
               num(target) + "), r^2 " + num(fit.r2, 8) + " (>= 0.98), T1 = " + num(T1);
    r.metrics = {{"slope", fit.slope}, {"target", target}, {"r2", fit.r2}, {"T1", T1}};
  } catch (const Error& e) {
    r.detail = e.what();
  }
  return r;
}

CriterionResult c4(Runs& runs) {
  CriterionResult r{4, "average-phase speed bound", false, "", 0.0, {}};
  double worst = std::numeric_limits<double>::infinity();
  std::size_t n = 0;
  for (const KineticRun* run : {&runs.run1(), &runs.run2()}) {
    for (const auto& rec : run->recs) {
      if (!(rec.R > 0.05) || !rec.measured_valid) continue;
      const double tol = 10.0 * (rec.dt + run->dtheta * run->dtheta);
      const double margin = phidot_bound(rec.R, run->M, run->K) + tol - std::abs(rec.phidot_measured);
      worst = std::min(worst, margin);
      ++n;
    }
  }
  r.pass = n > 0 && worst >= 0.0;
  r.detail = std::to_string(n) + " samples, smallest margin " + num(worst);
  r.metrics = {{"samples", static_cast<double>(n)}, {"min_margin", worst}};
  return r;
}

CriterionResult c5(Runs& runs) {
  CriterionResult r{5, "order-parameter ODE consistency", false, "", 0.0, {}};
  const auto& run = runs.run1();
  double worst_r = std::numeric_limits<double>::infinity();
  double worst_p = std::numeric_limits<double>::infinity();
  std::size_t n = 0;
  for (const auto& rec : run.recs) {
    if (!rec.measured_valid) continue;
    const double tol = 10.0 * (rec.dt + run.dtheta * run.dtheta) * (run.M + run.K);
    worst_r = std::min(worst_r, tol - std::abs(rec.rdot_measured - rec.rdot_formula));
    if (rec.R > 0.05) worst_p = std::min(worst_p, tol - std::abs(rec.phidot_measured - rec.phidot_formula));
    ++n;
  }
  r.pass = n == run.recs.size() && worst_r >= 0.0 && worst_p >= 0.0;
  r.detail = std::to_string(n) + " samples, smallest margin dR/dt " + num(worst_r) + ", dphi/dt " + num(worst_p);
  r.metrics = {{"min_margin_rdot", worst_r}, {"min_margin_phidot", worst_p}};
  return r;
}

CriterionResult c6(Runs& runs) {
  CriterionResult r{6, "gradient-flow dissipation", false, "", 0.0, {}};
  const auto& run = runs.run2();
  double worst_mono = std::numeric_limits<double>::infinity();
  double worst_rate = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < run.recs.size(); ++i) {
    const auto& rec = run.recs[i];
    if (i > 0) worst_mono = std::min(worst_mono, 1e-9 - (rec.V - run.recs[i - 1].V));
    if (!rec.measured_valid) continue;
    const double tol = 10.0 * (rec.dt + run.dtheta * run.dtheta) * run.K * run.K;
    worst_rate = std::min(worst_rate, tol - std::abs(rec.vdot_measured - rec.dissipation));
  }
  r.pass = worst_mono >= 0.0 && worst_rate >= 0.0;
  r.detail = "monotonicity margin " + num(worst_mono) + ", dissipation-identity margin " + num(worst_rate);
  r.metrics = {{"min_margin_monotone", worst_mono}, {"min_margin_rate", worst_rate}};
  return r;
}

CriterionResult c7() {
  CriterionResult r{7, "particle gradient identity", false, "", 0.0, {}};
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> th(0.0, kTwoPi);
  std::uniform_real_distribution<double> om(-1.0, 1.0);
  ParticleState s;
  s.K = 1.3;
  for (int i = 0; i < 8; ++i) {
    s.thetas.push_back(th(rng));
    s.omegas.push_back(om(rng));
  }
  const auto rhs = particle_rhs(s);
  const auto direct = particle_rhs_direct(s);
  const double h = 1e-5;
  double err = 0.0;
  double agree = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ParticleState p = s;
    ParticleState m = s;
    p.thetas[i] += h;
    m.thetas[i] -= h;
    const double grad = (particle_potential(p) - particle_potential(m)) / (2.0 * h);
    err = std::max(err, std::abs(rhs[i] + grad));
    agree = std::max(agree, std::abs(rhs[i] - direct[i]));
  }
  const double secs = seconds_since(t0);
  r.pass = err <= 1e-6 && agree <= 1e-12 && secs < 1.0;
  r.detail = "max |rhs + grad V_p| " + num(err, 3) + " (<= 1e-6), mean-field vs direct " + num(agree, 3);
  r.metrics = {{"max_error", err}, {"rhs_agreement", agree}};
  return r;
}

CriterionResult c8(Runs& runs) {
  CriterionResult r{8, "mean-field consistency", false, "", 0.0, {}};
  const auto& run = runs.run1();
  const auto t0 = Clock::now();
  const auto g = FrequencyDensity::uniform(0.1);
  auto ps = sample_particles([](double th) { return cosine_profile(th, 0.2); }, sample(g, 20000, 8),
                             2.0, 80);
  const double dt = 0.01;
  const int per_sample = 5;
  double worst = 0.0;
  double worst_t = 0.0;
  for (std::size_t i = 0; i < run.recs.size(); ++i) {
    if (i > 0)
      for (int q = 0; q < per_sample; ++q) particle_step(ps, dt);
    const double rp = particle_order(ps).R;
    const double d = std::abs(run.recs[i].R - rp);
    if (d > worst) {
      worst = d;
      worst_t = run.recs[i].t;
    }
  }
  const double secs = seconds_since(t0) + run.seconds;
  r.pass = worst <= 0.05 && secs < 180.0;
  r.detail = "max |R_kinetic - r_particle| " + num(worst, 4) + " at t=" + num(worst_t, 4) +
             " (<= 0.05), N=20000, " + num(secs, 3) + " s";
  r.metrics = {{"max_gap", worst}, {"seconds", secs}};
  return r;
}

CriterionResult c9() {
  CriterionResult r{9, "order parameter vs phase diameter", false, "", 0.0, {}};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int c = 0; c < 1000; ++c) {
    ParticleState s;
    const double center = (unit(rng) - 0.5) * 20.0;
    const double spread = kPi * unit(rng) * (1.0 - 1e-9);
    for (int i = 0; i < 16; ++i) {
      s.thetas.push_back(center + spread * unit(rng));
      s.omegas.push_back(0.0);
    }
    const double D = phase_diameter(s);
    const double rr = particle_order(s).R;
    const double margin = rr - std::cos(0.5 * D);
    worst = std::min(worst, margin);
    if (margin < -1e-12) ++violations;
  }
  bool iff = true;
  for (double D : {0.0, 1e-10, 1e-3, 0.5, 2.0, 3.0}) {
    ParticleState s;
    for (int i = 0; i < 16; ++i) {
      s.thetas.push_back(1.0 + D * (i % 2));
      s.omegas.push_back(0.0);
    }
    const double rr = particle_order(s).R;
    const bool one = std::abs(rr - 1.0) <= 1e-15;
    if (one != (phase_diameter(s) <= 1e-9)) iff = false;
  }
  r.pass = violations == 0 && iff;
  r.detail = "1000 configs, " + std::to_string(violations) + " violations, min r - cos(D/2) " + num(worst, 3) +
             ", r = 1 iff D <= 1e-9: " + (iff ? "yes" : "no");
  r.metrics = {{"violations", static_cast<double>(violations)}, {"min_margin", worst}};
  return r;
}

CriterionResult c10() {
  CriterionResult r{10, "at most one anti-synchronized oscillator", false, "", 0.0, {}};
  std::size_t converged = 0;
  std::size_t good = 0;
  std::size_t unconverged = 0;
  std::size_t max_anti = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> th(0.0, kTwoPi);
    ParticleState s;
    s.K = 1.0;
    for (int i = 0; i < 10; ++i) {
      s.thetas.push_back(th(rng));
      s.omegas.push_back(0.0);
    }
    Classification c;
    const double dt = 0.05;
    for (int block = 0; block < 200; ++block) {
      for (int q = 0; q < 20; ++q) particle_step(s, dt);
      const OrderParams op = particle_order(s);
      const double phi_end = op.phi;
      c = classify_asymptotic(s, [phi_end](double) { return phi_end; }, 1e-8);
      if (c.converged) break;
    }
    if (!c.converged) {
      ++unconverged;
      continue;
    }
    ++converged;
    max_anti = std::max(max_anti, c.n_anti);
    if (c.n_anti <= 1) ++good;
  }
  const double frac = converged ? static_cast<double>(good) / static_cast<double>(converged) : 0.0;
  r.pass = converged > 0 && frac >= 0.99;
  r.detail = std::to_string(converged) + " converged, " + std::to_string(unconverged) +
             " unconverged (not counted), fraction with |I_b| <= 1: " + num(frac, 4) + ", max |I_b| " +
             std::to_string(max_anti);
  r.metrics = {{"converged", static_cast<double>(converged)}, {"fraction", frac}};
  return r;
}

CriterionResult c11() {
  CriterionResult r{11, "equilibrium self-consistency", false, "", 0.0, {}};
  const auto t0 = Clock::now();
  const auto g = FrequencyDensity::uniform(1.0);
  const double h1 = self_consistency_H(g, 1.0, 1.0);
  const EquilibriumResult eq = equilibrium_R(g, 5.0);
  const double secs = seconds_since(t0);
  r.pass = std::abs(h1 - kPi / 4.0) <= 1e-10 && eq.found && eq.residual <= 1e-10 && eq.R >= 0.5 &&
           eq.margin_sqrt_bound >= 0.0 && eq.margin_support_bound >= 0.0 && secs < 1.0;
  r.detail = "H(1) at K=1: " + num(h1, 15) + " (pi/4 = " + num(kPi / 4.0, 15) + "), K=5: R = " + num(eq.R, 12) +
             ", residual " + num(eq.residual, 3) + ", bound margins " + num(eq.margin_sqrt_bound, 4) + " / " +
             num(eq.margin_support_bound, 4);
  r.metrics = {{"H1", h1}, {"R", eq.R}, {"residual", eq.residual}};
  return r;
}

HypothesisInput run12_hypotheses(double R0) {
  HypothesisInput in;
  in.K = kRun12K;
  in.M = kRun12M;
  in.R0 = R0;
  in.mu = 1e-3;
  in.gamma = 1.45;
  in.kappa = kKappa;
  in.eps0 = 0.2;
  in.gamma0 = 1.1;
  return in;
}

CriterionResult c12(Runs& runs) {
  CriterionResult r{12, "asymptotic lower bound of R", false, "", 0.0, {}};
  const auto& run = runs.run12();
  const double R0 = run.recs.front().R;
  const HypothesisReport rep = hypothesis_check(run12_hypotheses(R0));
  const bool gate = rep.group_passes("framework") && rep.group_passes("practical");
  std::string failed;
  for (const auto& c : rep.checks)
    if ((c.group == "framework" || c.group == "practical") && !c.pass)
      failed += (failed.empty() ? "" : ", ") + c.name + " (margin " + num(c.margin, 4) + ")";
  const double t_end = run.recs.back().t;
  double late_min = std::numeric_limits<double>::infinity();
  for (const auto& rec : run.recs)
    if (rec.t >= 0.75 * t_end) late_min = std::min(late_min, rec.R);
  const double rinf = r_infinity(run.M, run.K);
  const bool bound = late_min >= rinf - 0.02;
  r.pass = gate && bound && run.seconds < 300.0;
  r.detail = std::string("hypothesis report ") + (gate ? "passes" : "fails: " + failed) +
             "; late-window min R " + num(late_min, 8) + " vs r_inf - 0.02 = " + num(rinf - 0.02, 6) +
             (bound ? " (holds)" : " (violated)") + ", run " + num(run.seconds, 3) + " s";
  r.metrics = {{"late_min_R", late_min}, {"r_infinity", rinf}, {"hypotheses_pass", gate ? 1.0 : 0.0}};
  return r;
}

CriterionResult c13() {
  CriterionResult r{13, "concentration-window monotonicity and growth", false, "", 0.0, {}};
  const double eps0 = 0.2;
  const double gamma0 = 1.1;
  const double M = 0.01;
  const double K = 1.2 * (M / eps0) * (1.0 + 1.0 / eps0);
  const double kappa_vm = 40.0;
  const auto g = FrequencyDensity::uniform(M);
  double norm = 0.0;
  {
    std::vector<double> x;
    std::vector<double> w;
    gauss_legendre(200, x, w);
    for (std::size_t i = 0; i < x.size(); ++i) norm += kPi * w[i] * std::exp(kappa_vm * (std::cos(kPi * (x[i] + 1.0)) - 1.0));
  }
  auto s = KineticState::from_profile(PhaseGrid(1024), g.quadrature_nodes(16), K, [&](double th, double) {
    return std::exp(kappa_vm * (std::cos(th) - 1.0)) / norm;
  });
  s.set_support_bound(M);
  DiagnosticsConfig cfg;
  cfg.intervals = {Interval::Lplus(gamma0)};
  cfg.lambda_delta = 0.0;
  cfg.gamma_plus = gamma0;
  const auto recs = run_with_diagnostics(s, 10.0, 0.1, cfg);

  HypothesisInput in;
  in.K = K;
  in.M = M;
  in.eps0 = eps0;
  in.gamma0 = gamma0;
  const HypothesisReport rep = hypothesis_check(in);
  const double ms = mstar(eps0, gamma0);
  const double m0 = recs.front().masses[0];
  double worst_drop = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < recs.size(); ++i)
    worst_drop = std::min(worst_drop, recs[i].masses[0] - recs[i - 1].masses[0] + 1e-6);
  const double target = 0.9 * K * eps0 * std::sin(gamma0);
  const auto t = column(recs, &DiagnosticsRecord::t);
  double min_slope = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.n_omega(); ++k) {
    std::vector<double> v;
    for (const auto& rec : recs) v.push_back(rec.gamma_plus[k]);
    min_slope = std::min(min_slope, fit_exponential_rate(t, v, 0.0, 5.0).slope);
  }
  r.pass = rep.group_passes("concentration") && m0 >= ms && worst_drop >= 0.0 && min_slope >= target;
  r.detail = "K = " + num(K) + ", initial mass " + num(m0, 6) + " (>= M* = " + num(ms, 6) +
             "), monotonicity margin " + num(worst_drop, 3) + ", min per-slice Gamma+ slope " +
             num(min_slope, 5) + " (>= " + num(target, 5) + "), hypotheses " +
             (rep.group_passes("concentration") ? "pass" : "fail");
  r.metrics = {{"min_slope", min_slope}, {"target", target}, {"initial_mass", m0}, {"mstar", ms}};
  return r;
}

CriterionResult c14(Runs& runs) {
  CriterionResult r{14, "barrier comparison", false, "", 0.0, {}};
  const auto& run = runs.run12();
  const double K = run.K;
  const double M = run.M;
  const double ek = epsilon_kappa(kKappa, M, K);
  const double cap = std::sqrt(1.0 - ek * ek);
  OrderSeries series;
  for (const auto& rec : run.recs) series.push(rec.t, rec.R, rec.phi);
  // T_kappa: the first sample after which R stays above kappa
  double T_kappa = -1.0;
  for (std::size_t i = run.recs.size(); i-- > 0;) {
    if (run.recs[i].R <= kKappa) break;
    T_kappa = run.recs[i].t;
  }
  if (T_kappa < 0.0) {
    r.detail = "R never stays above kappa";
    return r;
  }
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double t_end = series.t.back();
  const double dt = 0.005;
  double worst = std::numeric_limits<double>::infinity();
  int used = 0;
  int attempts = 0;
  while (used < 50 && attempts < 10000) {
    ++attempts;
    const double t_star = T_kappa + (t_end - T_kappa) * unit(rng);
    const double theta_star = kTwoPi * unit(rng);
    const double omega = M * (2.0 * unit(rng) - 1.0);
    double Rs;
    double ps;
    series.at(t_star, Rs, ps);
    const double c_star = std::cos(theta_star - ps);
    if (c_star > cap) continue;
    const double p_star = std::max(c_star, -cap);
    const auto path = characteristic(series, K, theta_star, omega, t_star, T_kappa, dt);
    const Path barrier = barrier_solve(p_star, t_star, T_kappa, kKappa, K, ek, dt);
    for (std::size_t i = 0; i < path.t.size(); ++i) {
      double Ri;
      double phi_i;
      series.at(path.t[i], Ri, phi_i);
      // barrier is on a uniform grid in increasing time
      const double u = (path.t[i] - barrier.t.front()) / (barrier.t.back() - barrier.t.front()) *
                       static_cast<double>(barrier.t.size() - 1);
      const std::size_t j = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(u))), barrier.t.size() - 2);
      const double w = std::clamp(u - static_cast<double>(j), 0.0, 1.0);
      const double p = (1.0 - w) * barrier.y[j] + w * barrier.y[j + 1];
      worst = std::min(worst, p + 1e-4 - std::cos(path.theta[i] - phi_i));
    }
    ++used;
  }
  bool crossing_ok = true;
  std::string crossing;
  for (double kap : {0.7, 0.8}) {
    for (double mk : {0.0, 0.005}) {
      for (double eps : {0.01, 0.1}) {
        const double e = epsilon_kappa(kap, mk, 1.0);
        const double tc = barrier_crossing_time(eps, kap, 1.0, e);
        const double D = D_eps_kappa(eps, kap, 1.0, e);
        if (!(tc < D)) {
          crossing_ok = false;
          crossing += " kappa=" + num(kap) + ",M/K=" + num(mk) + ",eps=" + num(eps);
        }
      }
    }
  }
  r.pass = used == 50 && worst >= 0.0 && crossing_ok;
  r.detail = std::to_string(used) + " characteristics on [T_kappa = " + num(T_kappa, 4) + ", t*], min p + 1e-4 - cos " +
             num(worst, 4) + "; crossing time < D(eps, kappa) on 8 constructed cases: " +
             (crossing_ok ? "yes" : "no:" + crossing);
  r.metrics = {{"min_margin", worst}, {"T_kappa", T_kappa}};
  return r;
}

CriterionResult c15() {
  CriterionResult r{15, "Riccati comparison", false, "", 0.0, {}};
  const double K = 10.0;
  double worst_conv = 0.0;
  double worst_eq = 0.0;
  for (double mk : {0.0, 1e-4, 1e-3}) {
    const double M = mk * K;
    const RootPair rp = r_pm(0.0, M, K);
    const double gap = rp.plus - rp.minus;
    const double horizon = 400.0 / (K * gap);
    for (double b0 : {rp.minus + 0.01, 0.5, rp.plus}) {
      const Path p = riccati_solve(0.0, 0.0, b0, M, K, horizon);
      worst_conv = std::max(worst_conv, std::abs(p.y.back() - rp.plus));
      if (b0 == rp.plus)
        for (double y : p.y) worst_eq = std::max(worst_eq, std::abs(y - rp.plus));
    }
    const Path pm = riccati_solve(0.0, 0.0, rp.minus, M, K, 40.0 / (K * gap));
    for (double y : pm.y) worst_eq = std::max(worst_eq, std::abs(y - rp.minus));
  }
  r.pass = worst_conv <= 1e-6 && worst_eq <= 1e-12;
  r.detail = "max |beta(end) - r_+| " + num(worst_conv, 3) + " (<= 1e-6), equilibrium drift " + num(worst_eq, 3) +
             " (<= 1e-12)";
  r.metrics = {{"max_convergence_error", worst_conv}, {"max_equilibrium_drift", worst_eq}};
  return r;
}

CriterionResult run_criterion(int id, Runs& runs) {
  switch (id) {
    case 1: return c1(runs);
    case 2: return c2(runs);
    case 3: return c3(runs);
    case 4: return c4(runs);
    case 5: return c5(runs);
    case 6: return c6(runs);
    case 7: return c7();
    case 8: return c8(runs);
    case 9: return c9();
    case 10: return c10();
    case 11: return c11();
    case 12: return c12(runs);
    case 13: return c13();
    case 14: return c14(runs);
    case 15: return c15();
    default: break;
  }
  throw Error(ErrorCode::invalid_argument, "unknown criterion " + std::to_string(id));
}

}  // namespace

bool SuiteReport::all_pass() const {
  return !results.empty() && std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"thm31",        "thm32",    "thm33",       "gradient",
                                                 "conservation", "barriers", "equilibrium", "all"};
  return names;
}

std::vector<int> suite_criteria(const std::string& suite) {
  static const std::map<std::string, std::vector<int>> table = {
      {"conservation", {1}},
      {"thm31", {2, 3, 4, 9, 10}},
      {"gradient", {5, 6, 7, 8}},
      {"thm32", {13}},
      {"thm33", {12, 15}},
      {"barriers", {14}},
      {"equilibrium", {11}},
      {"all", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15}},
  };
  const auto it = table.find(suite);
  if (it == table.end()) {
    std::string known;
    for (const auto& n : suite_names()) known += (known.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::config, "unknown suite '" + suite + "' (expected one of: " + known + ")");
  }
  return it->second;
}

SuiteReport run_suite(const std::string& suite, const std::function<void(const CriterionResult&)>& on_result) {
  auto rep = run_criteria(suite_criteria(suite), on_result);
  rep.suite = suite;
  return rep;
}

SuiteReport run_criteria(const std::vector<int>& ids,
                         const std::function<void(const CriterionResult&)>& on_result) {
  SuiteReport rep;
  for (int id : ids)
    if (id < 1 || id > 15) throw Error(ErrorCode::config, "unknown criterion " + std::to_string(id));
  Runs runs;
  const auto t0 = Clock::now();
  for (int id : ids) {
    const auto c0 = Clock::now();
    CriterionResult res;
    try {
      res = run_criterion(id, runs);
    } catch (const std::exception& e) {
      res.id = id;
      res.name = "criterion " + std::to_string(id);
      res.pass = false;
      res.detail = std::string("error: ") + e.what();
    }
    res.seconds = seconds_since(c0);
    if (on_result) on_result(res);
    rep.results.push_back(std::move(res));
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

std::string format_result_line(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "%s  criterion %2d  %-44s %8.2fs  ", r.pass ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.seconds);
  return head + r.detail;
}

}  // namespace kslab
