#include "kslab/particle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "kslab/common.hpp"

namespace kslab {

void ParticleState::validate() const {
  if (thetas.empty()) throw Error(ErrorCode::invalid_argument, "particle system needs N >= 1");
  if (thetas.size() != omegas.size())
    throw Error(ErrorCode::invalid_argument, "thetas and omegas differ in length");
  for (std::size_t i = 0; i < thetas.size(); ++i)
    if (!std::isfinite(thetas[i]) || !std::isfinite(omegas[i]))
      throw Error(ErrorCode::invalid_argument, "non-finite particle data at index " + std::to_string(i));
  if (!std::isfinite(K) || K < 0.0) throw Error(ErrorCode::invalid_argument, "K must be finite and >= 0");
}

std::vector<double> particle_rhs_direct(const ParticleState& s) {
  const std::size_t n = s.size();
  std::vector<double> out(n);
  const double c = s.K / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += std::sin(s.thetas[j] - s.thetas[i]);
    out[i] = s.omegas[i] + c * acc;
  }
  return out;
}

namespace {

void phasor_sum(const std::vector<double>& th, double& re, double& im) {
  re = 0.0;
  im = 0.0;
  for (double x : th) {
    re += std::cos(x);
    im += std::sin(x);
  }
  re /= static_cast<double>(th.size());
  im /= static_cast<double>(th.size());
}

void rhs_into(const ParticleState& s, const std::vector<double>& th, std::vector<double>& out) {
  double re;
  double im;
  phasor_sum(th, re, im);
  const std::size_t n = th.size();
  out.resize(n);
  // K r sin(theta - phi) = K (sin theta * r cos phi - cos theta * r sin phi)
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    out[i] = s.omegas[i] - s.K * (std::sin(th[i]) * re - std::cos(th[i]) * im);
}

}  // namespace

std::vector<double> particle_rhs_mean_field(const ParticleState& s) {
  std::vector<double> out;
  rhs_into(s, s.thetas, out);
  return out;
}

std::vector<double> particle_rhs(const ParticleState& s) { return particle_rhs_mean_field(s); }

void particle_step(ParticleState& s, double dt) {
  const std::size_t n = s.size();
  std::vector<double> k1, k2, k3, k4;
  std::vector<double> tmp(n);
  rhs_into(s, s.thetas, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = s.thetas[i] + 0.5 * dt * k1[i];
  rhs_into(s, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = s.thetas[i] + 0.5 * dt * k2[i];
  rhs_into(s, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = s.thetas[i] + dt * k3[i];
  rhs_into(s, tmp, k4);
  for (std::size_t i = 0; i < n; ++i)
    s.thetas[i] += dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
  s.t += dt;
}

OrderParams particle_order(const ParticleState& s) {
  double re;
  double im;
  phasor_sum(s.thetas, re, im);
  return order_from_phasor(re, im, 0.0);
}

double particle_potential(const ParticleState& s) {
  const std::size_t n = s.size();
  double lin = 0.0;
  for (std::size_t i = 0; i < n; ++i) lin += s.omegas[i] * s.thetas[i];
  // sum_{i,j} (1 - cos(theta_j - theta_i)) = N^2 - |sum_j e^{i theta_j}|^2
  double c = 0.0;
  double sn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c += std::cos(s.thetas[i]);
    sn += std::sin(s.thetas[i]);
  }
  const double nn = static_cast<double>(n);
  const double pair = nn * nn - (c * c + sn * sn);
  return -lin + s.K / (2.0 * static_cast<double>(n)) * pair;
}

double phase_diameter(const ParticleState& s) {
  if (s.thetas.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(s.thetas.begin(), s.thetas.end());
  return *hi - *lo;
}

Classification classify_asymptotic(const ParticleState& s,
                                   const std::function<double(double)>& phi_ref, double tol,
                                   double band) {
  Classification c;
  const auto v = particle_rhs(s);
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  c.max_speed_spread = *hi - *lo;
  c.converged = c.max_speed_spread < tol;
  c.labels.assign(s.size(), AsymptoticLabel::undetermined);
  if (!c.converged) {
    c.n_undetermined = s.size();
    return c;
  }
  const double ref = phi_ref(s.t);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = std::abs(wrap_signed(s.thetas[i] - ref));
    if (d < band) {
      c.labels[i] = AsymptoticLabel::synchronized;
      ++c.n_sync;
    } else if (kPi - d < band) {
      c.labels[i] = AsymptoticLabel::anti_synchronized;
      ++c.n_anti;
    } else {
      ++c.n_undetermined;
    }
  }
  return c;
}

ParticleState sample_particles(const std::function<double(double)>& theta_density,
                               std::vector<double> omegas, double K, std::uint64_t seed) {
  const std::size_t n_grid = 1 << 16;
  const double h = kTwoPi / static_cast<double>(n_grid);
  std::vector<double> cdf(n_grid + 1, 0.0);
  double prev = theta_density(0.0);
  for (std::size_t i = 1; i <= n_grid; ++i) {
    const double cur = theta_density(static_cast<double>(i) * h);
    if (cur < 0.0 || !std::isfinite(cur))
      throw Error(ErrorCode::invalid_argument, "theta density is negative or non-finite");
    cdf[i] = cdf[i - 1] + 0.5 * (prev + cur) * h;
    prev = cur;
  }
  const double total = cdf.back();
  if (!(total > 0.0)) throw Error(ErrorCode::invalid_argument, "theta density has zero mass");

  ParticleState s;
  s.K = K;
  s.omegas = std::move(omegas);
  s.thetas.resize(s.omegas.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& th : s.thetas) {
    const double u = unit(rng) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t i = it == cdf.begin() ? 0 : static_cast<std::size_t>(it - cdf.begin()) - 1;
    if (i >= n_grid) i = n_grid - 1;
    const double span = cdf[i + 1] - cdf[i];
    const double frac = span > 0.0 ? (u - cdf[i]) / span : 0.5;
    th = (static_cast<double>(i) + frac) * h;
  }
  s.validate();
  return s;
}

ParticleState load_particles_csv(const std::filesystem::path& path, double K) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open particle file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::io, "particle file is empty");
  ParticleState s;
  s.K = K;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    std::string a, b;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ','))
      throw Error(ErrorCode::io, "particle row " + std::to_string(row) + " needs 2 columns");
    try {
      s.thetas.push_back(std::stod(a));
      s.omegas.push_back(std::stod(b));
    } catch (const std::exception&) {
      throw Error(ErrorCode::io, "particle row " + std::to_string(row) + " is not numeric");
    }
  }
  s.validate();
  return s;
}

}  // namespace kslab
