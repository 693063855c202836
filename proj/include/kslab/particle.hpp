#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "kslab/order.hpp"

namespace kslab {

/// Finite-N Kuramoto system. Phases are lifted to the real line.
struct ParticleState {
  std::vector<double> thetas;
  std::vector<double> omegas;
  double K = 1.0;
  double t = 0.0;

  std::size_t size() const { return thetas.size(); }
  /// Throws invalid_argument on N = 0, size mismatch or non-finite data.
  void validate() const;
};

/// theta_i' = omega_i + (K/N) sum_j sin(theta_j - theta_i), O(N^2).
std::vector<double> particle_rhs_direct(const ParticleState& s);
/// theta_i' = omega_i - K r sin(theta_i - phi), O(N).
std::vector<double> particle_rhs_mean_field(const ParticleState& s);
/// Mean-field form; identical to the direct sum up to roundoff.
std::vector<double> particle_rhs(const ParticleState& s);

/// Classic RK4; dt may be negative for backward integration.
void particle_step(ParticleState& s, double dt);

/// r e^{i phi} = (1/N) sum e^{i theta_j}; phi undefined when r <= kTolR.
OrderParams particle_order(const ParticleState& s);

/// -sum omega_i theta_i + (K/2N) sum_{i,j} (1 - cos(theta_j - theta_i)).
double particle_potential(const ParticleState& s);

/// max_i theta_i - min_i theta_i on the lifted phases.
double phase_diameter(const ParticleState& s);

enum class AsymptoticLabel { synchronized, anti_synchronized, undetermined };

struct Classification {
  bool converged = false;
  std::vector<AsymptoticLabel> labels;
  std::size_t n_sync = 0;
  std::size_t n_anti = 0;
  std::size_t n_undetermined = 0;
  double max_speed_spread = 0.0;
};

/// Labels each oscillator by its distance to phi_ref(t) modulo 2pi: within
/// band of 0 is synchronized, within band of pi is anti-synchronized. The
/// state counts as converged when max|theta_i' - theta_j'| < tol; otherwise
/// every label is undetermined.
Classification classify_asymptotic(const ParticleState& s,
                                   const std::function<double(double)>& phi_ref, double tol,
                                   double band = 0.1);

/// Particles whose phases are drawn by inverse-CDF sampling of a theta
/// density on a fine grid and whose frequencies come from `omegas`.
ParticleState sample_particles(const std::function<double(double)>& theta_density,
                               std::vector<double> omegas, double K, std::uint64_t seed);

/// CSV with columns (theta, omega) and a header row.
ParticleState load_particles_csv(const std::filesystem::path& path, double K);

}  // namespace kslab
