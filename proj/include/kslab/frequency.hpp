#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace kslab {

enum class FrequencyKind { dirac_at_zero, uniform, table };

/// One quadrature node of the frequency variable. `weight` has the density
/// folded in, so sum(weight) approximates the total mass of g. `density` is
/// g(omega) at the node (1 for the Dirac case).
struct QuadratureNode {
  double omega = 0.0;
  double weight = 0.0;
  double density = 1.0;
};

struct Moments {
  double mass = 0.0;
  double mean = 0.0;
};

/// A natural-frequency density g with compact support [-M, M].
///
/// Tables are interpolated piecewise-linearly between their nodes and
/// renormalized to unit mass at construction. Instances are immutable.
class FrequencyDensity {
 public:
  static constexpr std::size_t kDefaultNodes = 64;

  static FrequencyDensity dirac();
  static FrequencyDensity uniform(double halfwidth);
  /// Throws Error(invalid_argument) on negative or all-zero densities,
  /// unsorted or non-finite nodes.
  static FrequencyDensity table(std::vector<double> omegas,
                                std::vector<double> densities);
  /// CSV with header row and columns (omega, density).
  static FrequencyDensity load_csv(const std::filesystem::path& path);

  FrequencyKind kind() const { return kind_; }
  double support_bound() const { return support_; }
  double halfwidth() const { return halfwidth_; }
  /// Factor the raw table was multiplied by to reach unit mass (1 otherwise).
  double renormalization() const { return renormalization_; }
  const std::vector<double>& table_omegas() const { return omegas_; }
  const std::vector<double>& table_densities() const { return densities_; }

  /// Pointwise density. Zero outside the support; the Dirac case has no
  /// pointwise density and throws.
  double density(double omega) const;

  /// Quadrature of the default order, built at construction.
  std::span<const QuadratureNode> quadrature() const { return quadrature_; }

  /// Gauss-Legendre nodes folded with g, sorted by omega. A Dirac density
  /// always yields the single node (0, 1). Zero-weight nodes are dropped.
  std::vector<QuadratureNode> quadrature_nodes(std::size_t n) const;

  /// Largest m such that [-m, m] lies in the support (where g > 0), and the
  /// minimum of g on it. Used by the equilibrium lower bounds.
  double inner_support() const;
  double min_density_on_inner_support() const;

  std::string describe() const;

 private:
  FrequencyDensity() = default;
  void build_default_quadrature();

  FrequencyKind kind_ = FrequencyKind::dirac_at_zero;
  double support_ = 0.0;
  double halfwidth_ = 0.0;
  double renormalization_ = 1.0;
  std::vector<double> omegas_;
  std::vector<double> densities_;
  std::vector<QuadratureNode> quadrature_;
};

Moments moments(std::span<const QuadratureNode> nodes);
Moments moments(const FrequencyDensity& g);

/// Deterministic draws from g; same (g, n, seed) always gives the same list.
std::vector<double> sample(const FrequencyDensity& g, std::size_t n,
                           std::uint64_t seed);

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
void gauss_legendre(std::size_t n, std::vector<double>& nodes,
                    std::vector<double>& weights);

}  // namespace kslab
