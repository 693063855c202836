#pragma once

#include <string>
#include <vector>

#include "kslab/frequency.hpp"

namespace kslab {

/// (2 + eps0 + cos gamma0) / ((1 + sin gamma0)(1 + cos gamma0)).
/// In checked mode the pair must be admissible:
///   0 < eps0 < 3 sqrt(3)/4 - 1,  pi/3 <= gamma0 < asin(1 - 2 eps0/(2 sqrt(3) + 1)),
/// and the result is asserted to lie in ((1 + eps0)/(1 + sin gamma0), 1).
double mstar(double eps0, double gamma0, bool checked = true);
double gamma0_upper_bound(double eps0);

struct ConstantsE {
  double E1 = 0.0;
  double E2 = 0.0;
  double E3 = 0.0;
  /// Length of the growth window, (1/4K) log(A/B); infinite when M = 0.
  double d = 0.0;
};

/// E1 and E2 only; gamma in [pi/3, pi/2).
void constants_E12(double K, double M, double Rlow, double gamma, double& E1, double& E2);

/// All three constants. gamma in (pi/3, pi/2), K, Rlow, mu > 0; throws
/// precondition when K^2 mu <= M^2/(2 Rlow^2) - 3 M^2/(4 Rlow) or the
/// logarithm's argument is not positive.
ConstantsE constants_E(double K, double M, double Rlow, double gamma, double mu);

/// 1 + M/K - sqrt(M^2/K^2 + 4 M/K).
double r_infinity(double M, double K);

struct RootPair {
  double minus = 0.0;
  double plus = 0.0;
};

/// Equilibria of the Riccati comparison ODE:
/// sqrt(3)/4 -+ (1/2) sqrt(3/4 - 16 sqrt(3) M/K - 4 eta).
RootPair r_pm(double eta, double M, double K);

/// Right-hand side K/(4 sqrt 3) (-b^2 + (sqrt 3/2) b - 4 sqrt(3) M/K - eta).
double riccati_rhs(double beta, double eta, double M, double K);

struct Path {
  std::vector<double> t;
  std::vector<double> y;
};

/// RK4 path of the Riccati ODE on [T, T + horizon] from beta(T) = beta_T.
Path riccati_solve(double T, double eta, double beta_T, double M, double K, double horizon,
                   std::size_t steps = 0);

/// ((kappa + 1)/kappa^2)(M/K) + (1 - kappa)/kappa. Throws for kappa <= 0.
double epsilon_kappa(double kappa, double M, double K);

/// kappa K (sqrt(1 - q^2) - eps_kappa) sqrt(1 - q^2).
double F_kappa(double q, double kappa, double K, double eps_kappa);

/// 2 (sqrt(1 - eps_kappa^2) - eps) / F_kappa(sqrt(1 - eps_kappa^2) - eps).
double D_eps_kappa(double eps, double kappa, double K, double eps_kappa);

/// Barrier through (t_star, p_star), integrated backward to T_kappa with
/// RK4. The path is returned in increasing time. Throws invalid_argument
/// when |p_star| > sqrt(1 - eps_kappa^2).
Path barrier_solve(double p_star, double t_star, double T_kappa, double kappa, double K,
                   double eps_kappa, double dt);

/// Forward time for the barrier to climb from -a to a with
/// a = sqrt(1 - eps_kappa^2) - eps, by fine-step RK4.
double barrier_crossing_time(double eps, double kappa, double K, double eps_kappa,
                             double dt = 0.0);

/// H(R) = int g(omega) sqrt(1 - (omega/(K R))^2) over |omega| <= K R.
double self_consistency_H(const FrequencyDensity& g, double K, double R);

struct EquilibriumResult {
  bool found = false;
  double R = 0.0;
  double residual = 0.0;
  double H_at_one = 0.0;
  /// R - sqrt(1 - (M/(K R))^2), must be >= 0.
  double margin_sqrt_bound = 0.0;
  /// R - m min g over [-m, m], must be >= 0.
  double margin_support_bound = 0.0;
  std::string message;
};

/// Largest fixed point of H on (M/K, 1].
EquilibriumResult equilibrium_R(const FrequencyDensity& g, double K);

struct HypothesisInput {
  double K = 0.0;
  double M = 0.0;
  double R0 = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
  double kappa = 0.0;
  double eps0 = 0.0;
  double gamma0 = 0.0;
};

struct InequalityCheck {
  std::string name;
  std::string group;
  double lhs = 0.0;
  double rhs = 0.0;
  /// Positive when the inequality holds, in the units of lhs - rhs.
  double margin = 0.0;
  bool pass = false;
  std::string note;
};

struct HypothesisReport {
  std::vector<InequalityCheck> checks;
  bool group_passes(const std::string& group) const;
  bool all_pass() const;
  const InequalityCheck* find(const std::string& name) const;
};

/// Evaluates every inequality of the concentration setting (group
/// "concentration"), the asymptotic lower-bound framework (group
/// "framework") and the practical synchronization coupling bound
/// (group "practical"). Never throws.
HypothesisReport hypothesis_check(const HypothesisInput& in);

}  // namespace kslab
