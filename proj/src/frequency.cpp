#include "kslab/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "kslab/common.hpp"

namespace kslab {

void gauss_legendre(std::size_t n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  if (n == 0) throw Error(ErrorCode::invalid_argument, "quadrature order must be >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(kPi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0;
    double p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = (n == 1) ? 1.0 : static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

FrequencyDensity FrequencyDensity::dirac() {
  FrequencyDensity g;
  g.kind_ = FrequencyKind::dirac_at_zero;
  g.build_default_quadrature();
  return g;
}

FrequencyDensity FrequencyDensity::uniform(double halfwidth) {
  if (!(halfwidth > 0.0) || !std::isfinite(halfwidth))
    throw Error(ErrorCode::invalid_argument, "uniform density needs a positive finite halfwidth");
  FrequencyDensity g;
  g.kind_ = FrequencyKind::uniform;
  g.halfwidth_ = halfwidth;
  g.support_ = halfwidth;
  g.build_default_quadrature();
  return g;
}

FrequencyDensity FrequencyDensity::table(std::vector<double> omegas,
                                         std::vector<double> densities) {
  if (omegas.size() != densities.size() || omegas.size() < 2)
    throw Error(ErrorCode::invalid_argument, "frequency table needs >= 2 (omega, density) rows");
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (!std::isfinite(omegas[i]) || !std::isfinite(densities[i]))
      throw Error(ErrorCode::invalid_argument, "frequency table contains non-finite values");
    if (densities[i] < 0.0)
      throw Error(ErrorCode::invalid_argument,
                  "frequency table has negative density at row " + std::to_string(i));
    if (i > 0 && !(omegas[i] > omegas[i - 1]))
      throw Error(ErrorCode::invalid_argument, "frequency table omegas must be strictly increasing");
  }
  double mass = 0.0;
  double first = 0.0;
  for (std::size_t i = 0; i + 1 < omegas.size(); ++i) {
    const double h = omegas[i + 1] - omegas[i];
    const double a = densities[i];
    const double b = densities[i + 1];
    mass += 0.5 * (a + b) * h;
    // exact first moment of the linear interpolant on the segment
    first += h * (a * (2.0 * omegas[i] + omegas[i + 1]) + b * (omegas[i] + 2.0 * omegas[i + 1])) / 6.0;
  }
  if (!(mass > 0.0))
    throw Error(ErrorCode::invalid_argument, "frequency table has zero total mass");

  FrequencyDensity g;
  g.kind_ = FrequencyKind::table;
  g.renormalization_ = 1.0 / mass;
  for (double& d : densities) d /= mass;
  g.support_ = std::max(std::abs(omegas.front()), std::abs(omegas.back()));
  g.omegas_ = std::move(omegas);
  g.densities_ = std::move(densities);
  if (g.renormalization_ != 1.0)
    std::clog << "kslab: frequency table renormalized by factor " << g.renormalization_ << "\n";
  const double mean = first / mass;
  if (std::abs(mean) > 1e-10 * std::max(1.0, g.support_))
    std::clog << "kslab: warning: frequency table has nonzero mean " << mean
              << "; results assume a zero-mean (co-rotating) frame\n";
  g.build_default_quadrature();
  return g;
}

FrequencyDensity FrequencyDensity::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open frequency table " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCode::io, "frequency table " + path.string() + " is empty");
  // header row is required; a numeric first cell means it is missing
  {
    std::istringstream hs(line);
    std::string cell;
    std::getline(hs, cell, ',');
    char* end = nullptr;
    std::strtod(cell.c_str(), &end);
    if (end != cell.c_str())
      throw Error(ErrorCode::io, "frequency table " + path.string() + " lacks a header row");
  }
  std::vector<double> om;
  std::vector<double> de;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    std::string a;
    std::string b;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ','))
      throw Error(ErrorCode::io, "frequency table row " + std::to_string(row) + " needs 2 columns");
    try {
      om.push_back(std::stod(a));
      de.push_back(std::stod(b));
    } catch (const std::exception&) {
      throw Error(ErrorCode::io, "frequency table row " + std::to_string(row) + " is not numeric");
    }
  }
  return table(std::move(om), std::move(de));
}

double FrequencyDensity::density(double omega) const {
  switch (kind_) {
    case FrequencyKind::dirac_at_zero:
      throw Error(ErrorCode::invalid_argument, "a Dirac density has no pointwise value");
    case FrequencyKind::uniform:
      return std::abs(omega) <= halfwidth_ ? 0.5 / halfwidth_ : 0.0;
    case FrequencyKind::table: {
      if (omega < omegas_.front() || omega > omegas_.back()) return 0.0;
      auto it = std::upper_bound(omegas_.begin(), omegas_.end(), omega);
      if (it == omegas_.end()) return densities_.back();
      const std::size_t i = static_cast<std::size_t>(it - omegas_.begin()) - 1;
      const double s = (omega - omegas_[i]) / (omegas_[i + 1] - omegas_[i]);
      return (1.0 - s) * densities_[i] + s * densities_[i + 1];
    }
  }
  return 0.0;
}

std::vector<QuadratureNode> FrequencyDensity::quadrature_nodes(std::size_t n) const {
  if (n == 0) throw Error(ErrorCode::invalid_argument, "quadrature_nodes: n must be >= 1");
  if (kind_ == FrequencyKind::dirac_at_zero) return {QuadratureNode{0.0, 1.0, 1.0}};

  std::vector<double> x;
  std::vector<double> w;
  gauss_legendre(n, x, w);
  const double lo = kind_ == FrequencyKind::uniform ? -halfwidth_ : omegas_.front();
  const double hi = kind_ == FrequencyKind::uniform ? halfwidth_ : omegas_.back();
  const double mid = 0.5 * (lo + hi);
  const double rad = 0.5 * (hi - lo);

  std::vector<QuadratureNode> out;
  out.reserve(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double om = mid + rad * x[i];
    const double g = density(om);
    const double weight = rad * w[i] * g;
    if (weight > 0.0) {
      out.push_back({om, weight, g});
      total += weight;
    }
  }
  if (kind_ == FrequencyKind::table) {
    // The piecewise-linear table has kinks, so the folded rule is only
    // approximately normalized; rescale to keep the kinetic total mass at 1.
    for (auto& q : out) q.weight /= total;
  }
  return out;
}

void FrequencyDensity::build_default_quadrature() {
  quadrature_ = quadrature_nodes(kDefaultNodes);
}

double FrequencyDensity::inner_support() const {
  switch (kind_) {
    case FrequencyKind::dirac_at_zero:
      return 0.0;
    case FrequencyKind::uniform:
      return halfwidth_;
    case FrequencyKind::table: {
      if (omegas_.front() > 0.0 || omegas_.back() < 0.0 || density(0.0) <= 0.0) return 0.0;
      double right = omegas_.back();
      for (std::size_t i = 0; i < omegas_.size(); ++i)
        if (omegas_[i] > 0.0 && densities_[i] <= 0.0) {
          right = omegas_[i];
          break;
        }
      double left = -omegas_.front();
      for (std::size_t i = omegas_.size(); i-- > 0;)
        if (omegas_[i] < 0.0 && densities_[i] <= 0.0) {
          left = -omegas_[i];
          break;
        }
      return std::min(left, right);
    }
  }
  return 0.0;
}

double FrequencyDensity::min_density_on_inner_support() const {
  const double m = inner_support();
  switch (kind_) {
    case FrequencyKind::dirac_at_zero:
      return 0.0;
    case FrequencyKind::uniform:
      return 0.5 / halfwidth_;
    case FrequencyKind::table: {
      if (m <= 0.0) return 0.0;
      double lo = std::min(density(-m), density(m));
      for (std::size_t i = 0; i < omegas_.size(); ++i)
        if (std::abs(omegas_[i]) < m) lo = std::min(lo, densities_[i]);
      return lo;
    }
  }
  return 0.0;
}

std::string FrequencyDensity::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case FrequencyKind::dirac_at_zero:
      os << "dirac";
      break;
    case FrequencyKind::uniform:
      os << "uniform(halfwidth=" << halfwidth_ << ")";
      break;
    case FrequencyKind::table:
      os << "table(" << omegas_.size() << " rows, M=" << support_ << ")";
      break;
  }
  return os.str();
}

Moments moments(std::span<const QuadratureNode> nodes) {
  Moments m;
  for (const auto& q : nodes) {
    m.mass += q.weight;
    m.mean += q.weight * q.omega;
  }
  return m;
}

Moments moments(const FrequencyDensity& g) { return moments(g.quadrature()); }

std::vector<double> sample(const FrequencyDensity& g, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::invalid_argument, "sample: n must be >= 1");
  std::vector<double> out(n, 0.0);
  if (g.kind() == FrequencyKind::dirac_at_zero) return out;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (g.kind() == FrequencyKind::uniform) {
    const double l = g.halfwidth();
    for (auto& x : out) x = -l + 2.0 * l * unit(rng);
    return out;
  }

  // Inverse CDF of the piecewise-linear table.
  const auto& om = g.table_omegas();
  const auto& de = g.table_densities();
  std::vector<double> cdf(om.size(), 0.0);
  for (std::size_t i = 0; i + 1 < om.size(); ++i)
    cdf[i + 1] = cdf[i] + 0.5 * (de[i] + de[i + 1]) * (om[i + 1] - om[i]);
  const double total = cdf.back();
  for (auto& x : out) {
    const double u = unit(rng) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t i = it == cdf.begin() ? 0 : static_cast<std::size_t>(it - cdf.begin()) - 1;
    if (i + 1 >= om.size()) i = om.size() - 2;
    const double h = om[i + 1] - om[i];
    const double a = de[i];
    const double slope = (de[i + 1] - a) / h;
    const double target = u - cdf[i];
    // solve a*s + slope*s^2/2 = target for s in [0, h]
    double s;
    if (std::abs(slope) < 1e-14 * std::max(1.0, a)) {
      s = a > 0.0 ? target / a : 0.5 * h;
    } else {
      const double disc = std::max(0.0, a * a + 2.0 * slope * target);
      s = (-a + std::sqrt(disc)) / slope;
    }
    x = std::clamp(om[i] + std::clamp(s, 0.0, h), -g.support_bound(), g.support_bound());
  }
  return out;
}

}  // namespace kslab
