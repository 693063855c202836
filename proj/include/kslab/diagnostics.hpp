#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "kslab/kinetic.hpp"
#include "kslab/order.hpp"

namespace kslab {

/// Open arc (center - halfwidth, center + halfwidth) on the circle,
/// halfwidth in [0, pi].
struct Arc {
  double center = 0.0;
  double halfwidth = 0.0;
};

enum class IntervalKind { iplus, iminus, lplus, lminus };

/// Arc that moves with the average phase. I+/I- have half-width delta
/// around phi and phi + pi; L+/L- have half-width pi/2 - gamma.
struct Interval {
  IntervalKind kind = IntervalKind::iplus;
  double param = 0.0;

  static Interval Iplus(double delta) { return {IntervalKind::iplus, delta}; }
  static Interval Iminus(double delta) { return {IntervalKind::iminus, delta}; }
  static Interval Lplus(double gamma) { return {IntervalKind::lplus, gamma}; }
  static Interval Lminus(double gamma) { return {IntervalKind::lminus, gamma}; }

  /// Throws invalid_argument when the parameter is outside (0, pi/2).
  void validate() const;
  Arc at(double phi) const;
  /// "Iplus(0.2)" style label, also used as CSV column suffix.
  std::string name() const;
};

/// Parses the label produced by Interval::name.
Interval parse_interval(const std::string& s);

/// sum_k w_k int_arc f_k, with exact overlap of the piecewise-constant cells.
double arc_mass(const KineticState& s, const Arc& a);
/// int_arc rho^2.
double arc_l2_density(const KineticState& s, const Arc& a);
/// int_arc f_k^2 for each slice (conditional density values).
std::vector<double> arc_l2_slices(const KineticState& s, const Arc& a);
/// sum_k w_k int_arc f_k^2.
double arc_l2_folded(const KineticState& s, const Arc& a);

/// Mass over a moving interval; throws precondition when phi is undefined.
double interval_mass(const KineticState& s, const Interval& iv);
double interval_mass(const KineticState& s, const Interval& iv, const OrderParams& op);

/// int rho^2 over the interval, or per slice when per_omega is set.
std::vector<double> lyapunov_L2(const KineticState& s, const Interval& iv, bool per_omega);
std::vector<double> lyapunov_L2(const KineticState& s, const Interval& iv, bool per_omega,
                                const OrderParams& op);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
  double t_a = 0.0;
  double t_b = 0.0;
  /// The window was cut short at a nonpositive sample.
  bool shrunk = false;
};

/// Least-squares slope of log(value) against t over [t_a, t_b]. Samples
/// from the first nonpositive value on are dropped. Throws invalid_argument
/// when fewer than 5 usable samples remain.
RateFit fit_exponential_rate(const std::vector<double>& t, const std::vector<double>& v,
                             double t_a, double t_b);

/// First index from which the series moves in `direction` (+1 up, -1 down)
/// for `run` consecutive samples, or npos.
std::size_t detect_trend_start(const std::vector<double>& v, int direction, std::size_t run = 20);

struct BoundCheck {
  std::string name;
  double margin = 0.0;
  bool pass = true;
};

struct DiagnosticsConfig {
  std::vector<Interval> intervals;
  /// Lambda over Iminus(delta); disabled when <= 0.
  double lambda_delta = 0.5;
  /// Per-slice Gamma+ over Lplus(gamma0); disabled when <= 0.
  double gamma_plus = 0.0;
  /// Folded Gamma- over Lminus(gamma); disabled when <= 0.
  double gamma_minus = 0.0;
  /// Mass sandwich at instants with dR/dt <= 0, using E1, E2 at this gamma
  /// and Rlow = R(t); disabled when <= 0.
  double sandwich_gamma = 0.0;
  /// For the dt used in tolerances.
  StepOptions step;
};

struct DiagnosticsRecord {
  double t = 0.0;
  /// CFL step size in effect at this sample.
  double dt = 0.0;
  double R = 0.0;
  double phi = 0.0;
  bool phi_defined = false;
  std::vector<double> masses;
  double lambda = 0.0;
  std::vector<double> gamma_plus;
  double gamma_minus = 0.0;
  double mass_lplus_pi3 = 0.0;
  double V = 0.0;
  double dissipation = 0.0;
  double sin_moment = 0.0;
  double rdot_formula = 0.0;
  double phidot_formula = 0.0;
  double rdot_measured = 0.0;
  double phidot_measured = 0.0;
  double vdot_measured = 0.0;
  bool measured_valid = false;
  std::vector<BoundCheck> checks;
};

/// Builds records at sample times and fills the measured derivatives and
/// bound checks once the run is over.
class DiagnosticsRecorder {
 public:
  explicit DiagnosticsRecorder(DiagnosticsConfig cfg) : cfg_(std::move(cfg)) {}

  void operator()(const KineticState& s, double dt_last);
  /// Three-point derivatives of R, phi and V, then the per-record checks.
  void finalize(double M, double K, double dtheta);

  const std::vector<DiagnosticsRecord>& records() const { return records_; }
  std::vector<DiagnosticsRecord>& records() { return records_; }
  const DiagnosticsConfig& config() const { return cfg_; }

 private:
  DiagnosticsConfig cfg_;
  std::vector<DiagnosticsRecord> records_;
};

std::vector<DiagnosticsRecord> run_with_diagnostics(KineticState& s, double t_end,
                                                    double sample_every,
                                                    const DiagnosticsConfig& cfg,
                                                    const SampleSink& on_step = {});

/// Derivative at point m of the quadratic through three samples.
double three_point_derivative(const double* t, const double* v, int m);

/// Column names matching write_record_row, in order.
std::vector<std::string> record_columns(const DiagnosticsConfig& cfg, std::size_t n_omega);
std::vector<double> record_row(const DiagnosticsRecord& r);

}  // namespace kslab
