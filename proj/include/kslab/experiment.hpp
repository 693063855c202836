#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kslab/frequency.hpp"
#include "kslab/kinetic.hpp"

namespace kslab {

enum class ModelKind { kinetic, particle, both };

struct FrequencySpec {
  std::string type = "dirac";  // dirac | uniform | table
  double halfwidth = 0.0;
  std::string path;
  bool operator==(const FrequencySpec&) const = default;
};

/// Initial phase profile. cosine: (1 + 2a cos(theta - center))/2pi;
/// von_mises: exp(c cos(theta - center)) normalized; uniform: 1/2pi;
/// csv: kinetic cell values (omega_index, theta_index, f).
/// particles_path overrides sampling for the particle model.
struct InitialSpec {
  std::string type = "cosine";
  double amplitude = 0.2;
  double concentration = 1.0;
  double center = 0.0;
  std::string path;
  std::string particles_path;
  bool operator==(const InitialSpec&) const = default;
};

struct GridSpec {
  std::size_t n_theta = 512;
  std::size_t n_omega = 16;
  std::size_t n_particles = 2000;
  bool operator==(const GridSpec&) const = default;
};

struct TimeSpec {
  double t_end = 10.0;
  double sample_every = 0.1;
  double cfl = 0.5;
  double dt_max = 0.1;
  double particle_dt = 0.01;
  bool operator==(const TimeSpec&) const = default;
};

/// Parameters of the inequality report; absent fields are not checked.
struct HypothesisSpec {
  std::optional<double> mu, gamma, kappa, eps0, gamma0;
  bool operator==(const HypothesisSpec&) const = default;
};

struct DiagnosticsSpec {
  std::vector<std::string> intervals;
  double lambda_delta = 0.5;
  double gamma_plus = 0.0;
  double gamma_minus = 0.0;
  double sandwich_gamma = 0.0;
  HypothesisSpec hypotheses;
  bool operator==(const DiagnosticsSpec&) const = default;
};

/// Characteristics traced on the recorded (R, phi). Explicit starts are
/// (theta, omega) pairs; `count` more are drawn from the seed.
struct CharacteristicsSpec {
  std::vector<std::pair<double, double>> starts;
  std::size_t count = 0;
  std::optional<double> t0, t1;
  double dt = 0.01;
  bool operator==(const CharacteristicsSpec&) const = default;
};

struct ExperimentConfig {
  ModelKind model = ModelKind::kinetic;
  FrequencySpec frequency;
  InitialSpec initial;
  std::vector<double> K{1.0};
  bool K_is_list = false;
  GridSpec grid;
  TimeSpec time;
  Scheme scheme = Scheme::muscl;
  DiagnosticsSpec diagnostics;
  CharacteristicsSpec characteristics;
  std::uint64_t seed = 1;
  std::string output = "out";
  /// Directory that relative paths inside the config resolve against.
  std::filesystem::path base_dir;
  /// Text the config was parsed from, echoed into output directories.
  std::string source_text;

  bool operator==(const ExperimentConfig& o) const;
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw
/// Error(config) naming the offending field.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);
/// Preconditions of every module the config touches, checked up front.
void validate_config(const ExperimentConfig& cfg);

FrequencyDensity make_frequency(const ExperimentConfig& cfg);
KineticState make_kinetic_state(const ExperimentConfig& cfg, const FrequencyDensity& g, double K);

using LogFn = std::function<void(const std::string&)>;

/// Returns 0 when every bound check passed, 1 otherwise. Files go to out_dir.
int cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, const LogFn& log = {});
/// One kinetic run per K on a pool of `threads` workers (0: one per core).
int cmd_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, unsigned threads,
              const LogFn& log = {});
int cmd_equilibrium(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, const LogFn& log = {});
int cmd_characteristics(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                        const LogFn& log = {});
/// Writes verify.json when out_dir is non-empty.
int cmd_verify(const std::string& suite, const std::filesystem::path& out_dir, const LogFn& log = {});

/// RFC-4180 field with 17 significant digits.
std::string csv_number(double v);

}  // namespace kslab
