#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "kslab/frequency.hpp"
#include "kslab/order.hpp"

namespace kslab {

/// Uniform periodic grid on [0, 2pi). Cell j covers [j h, (j+1) h), its
/// center is (j + 1/2) h. Edge j is the right edge of cell j.
class PhaseGrid {
 public:
  explicit PhaseGrid(std::size_t n_theta);

  std::size_t size() const { return n_; }
  double dtheta() const { return h_; }
  double center(std::size_t j) const { return (static_cast<double>(j) + 0.5) * h_; }
  double edge(std::size_t j) const { return static_cast<double>(j + 1) * h_; }

  const std::vector<double>& cos_center() const { return cos_c_; }
  const std::vector<double>& sin_center() const { return sin_c_; }
  const std::vector<double>& cos_edge() const { return cos_e_; }
  const std::vector<double>& sin_edge() const { return sin_e_; }

 private:
  std::size_t n_;
  double h_;
  std::vector<double> cos_c_, sin_c_, cos_e_, sin_e_;
};

/// Discretized f(theta, omega, t). Row k holds the conditional density
/// f(., omega_k)/g(omega_k) as cell averages, so the frequency density
/// enters only through the node weights and each row of product initial
/// data has unit mass.
class KineticState {
 public:
  KineticState(PhaseGrid grid, std::vector<QuadratureNode> nodes, double K);

  /// Projects profile(theta, omega) onto cell averages with 4-point Gauss
  /// per cell.
  static KineticState from_profile(PhaseGrid grid, std::vector<QuadratureNode> nodes,
                                   double K,
                                   const std::function<double(double, double)>& profile);

  const PhaseGrid& grid() const { return grid_; }
  const std::vector<QuadratureNode>& nodes() const { return nodes_; }
  std::size_t n_theta() const { return grid_.size(); }
  std::size_t n_omega() const { return nodes_.size(); }

  std::span<double> row(std::size_t k) { return {values_.data() + k * grid_.size(), grid_.size()}; }
  std::span<const double> row(std::size_t k) const {
    return {values_.data() + k * grid_.size(), grid_.size()};
  }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double t() const { return t_; }
  void set_t(double t) { t_ = t; }
  double K() const { return K_; }
  /// Support bound M of g if set, else max |omega_k| over the nodes.
  double support_bound() const;
  void set_support_bound(double M) { M_ = M; }

  /// Last phase at which R exceeded kTolR; used when R vanishes.
  double phi_memory() const { return phi_memory_; }
  void set_phi_memory(double phi) { phi_memory_ = phi; }

  double slice_mass(std::size_t k) const;
  /// sum_k w_k m_k.
  double total_mass() const;
  /// rho_j = sum_k w_k f_kj.
  std::vector<double> density() const;

 private:
  PhaseGrid grid_;
  std::vector<QuadratureNode> nodes_;
  double K_;
  double t_ = 0.0;
  double phi_memory_ = 0.0;
  double M_ = -1.0;
  std::vector<double> values_;
};

enum class Scheme { upwind, muscl };

struct StepOptions {
  Scheme scheme = Scheme::muscl;
  double cfl = 0.5;
  double dt_max = 0.1;
};

/// Edge velocities omega_k - K R sin(theta_edge - phi), k-major.
std::vector<double> velocity_field(const KineticState& s, const OrderParams& op);

/// cfl * dtheta / max|v|, capped at dt_max; dt_max when every velocity is 0.
double cfl_dt(const KineticState& s, double cfl,
              double dt_max = std::numeric_limits<double>::infinity());

/// One SSP-RK2 step in place. Throws cfl_violation when dt exceeds
/// cfl_dt(s, 1) and numerical on a non-finite flux.
void step(KineticState& s, double dt, Scheme scheme = Scheme::muscl);

/// Called at the initial time and at every sample time with the step size
/// that led there (0 for the first call).
using SampleSink = std::function<void(const KineticState&, double dt)>;

/// Advances to t_end with adaptive steps, landing exactly on each multiple
/// of sample_every. `on_step`, if set, sees the state after every step.
/// Returns the number of sink calls.
std::size_t run(KineticState& s, double t_end, double sample_every, const StepOptions& opt,
                const SampleSink& sink, const SampleSink& on_step = {});

/// Recorded (t, R, phi) with phi unwrapped; used to replay characteristics.
struct OrderSeries {
  std::vector<double> t;
  std::vector<double> R;
  std::vector<double> phi;

  void push(double time, double r, double phase);
  /// Linear interpolation; throws invalid_argument outside [t.front(), t.back()].
  void at(double time, double& r, double& phase) const;
};

/// RK4 path of theta' = omega - K R(t) sin(theta - phi(t)) from t0 to t1
/// (either direction), sampled at every step. Returns (t, theta) pairs.
struct CharacteristicPath {
  std::vector<double> t;
  std::vector<double> theta;
};

CharacteristicPath characteristic(const OrderSeries& series, double K, double theta0,
                                  double omega0, double t0, double t1, double dt);

/// Flat binary checkpoint: n_theta, n_omega (uint64), t, K (float64), then
/// the values row-major, all little-endian.
void write_checkpoint(const KineticState& s, const std::filesystem::path& path);
KineticState read_checkpoint(const std::filesystem::path& path,
                             std::vector<QuadratureNode> nodes);

/// Initial data from CSV rows (omega_index, theta_index, f).
KineticState load_initial_csv(const std::filesystem::path& path, PhaseGrid grid,
                              std::vector<QuadratureNode> nodes, double K);

}  // namespace kslab
