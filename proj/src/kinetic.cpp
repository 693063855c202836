#include "kslab/kinetic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "kslab/common.hpp"

namespace kslab {

namespace {

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

template <class T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error(ErrorCode::io, "checkpoint truncated");
  return to_little(v);
}

struct Phasor {
  double re = 0.0;
  double im = 0.0;
};

// Per-slice partial sums, reduced in slice order so results do not depend on
// the thread count.
Phasor phasor_of(const std::vector<double>& f, const PhaseGrid& g,
                 const std::vector<QuadratureNode>& nodes, std::vector<Phasor>& partial) {
  const std::size_t n = g.size();
  const std::size_t nk = nodes.size();
  partial.assign(nk, Phasor{});
  const double* cc = g.cos_center().data();
  const double* sc = g.sin_center().data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(nk); ++k) {
    const double* row = f.data() + static_cast<std::size_t>(k) * n;
    double re = 0.0;
    double im = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      re += row[j] * cc[j];
      im += row[j] * sc[j];
    }
    partial[k] = {re, im};
  }
  Phasor z;
  for (std::size_t k = 0; k < nk; ++k) {
    z.re += nodes[k].weight * partial[k].re;
    z.im += nodes[k].weight * partial[k].im;
  }
  z.re *= g.dtheta();
  z.im *= g.dtheta();
  return z;
}

class Stepper {
 public:
  Stepper(const KineticState& s, Scheme scheme) : s_(s), scheme_(scheme) {}

  // out = a*base + b*(f + dt*L(f))
  void stage(const std::vector<double>& f, double dt, double a, const std::vector<double>* base,
             double b, std::vector<double>& out) {
    const PhaseGrid& g = s_.grid();
    const auto& nodes = s_.nodes();
    const std::size_t n = g.size();
    const std::size_t nk = nodes.size();
    const Phasor z = phasor_of(f, g, nodes, partial_);
    const double K = s_.K();
    const double kre = K * z.re;
    const double kim = K * z.im;
    const double lam = dt / g.dtheta();
    const double* se = g.sin_edge().data();
    const double* ce = g.cos_edge().data();
    const bool muscl = scheme_ == Scheme::muscl;
    long bad_k = -1;
    long bad_j = -1;

#pragma omp parallel
    {
      std::vector<double> flux(n);
      std::vector<double> slope(n);
#pragma omp for schedule(static)
      for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(nk); ++kk) {
        const std::size_t k = static_cast<std::size_t>(kk);
        const double* row = f.data() + k * n;
        const double om = nodes[k].omega;
        if (muscl) {
          for (std::size_t j = 0; j < n; ++j) {
            const double fm = row[j == 0 ? n - 1 : j - 1];
            const double fp = row[j + 1 == n ? 0 : j + 1];
            slope[j] = minmod(row[j] - fm, fp - row[j]);
          }
        }
        // K R sin(x - phi) = K (sin x * R cos phi - cos x * R sin phi)
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t jp = j + 1 == n ? 0 : j + 1;
          const double v = om - (kre * se[j] - kim * ce[j]);
          double up;
          if (v >= 0.0)
            up = muscl ? row[j] + 0.5 * slope[j] : row[j];
          else
            up = muscl ? row[jp] - 0.5 * slope[jp] : row[jp];
          flux[j] = v * up;
        }
        double* o = out.data() + k * n;
        const double* bb = base ? base->data() + k * n : nullptr;
        for (std::size_t j = 0; j < n; ++j) {
          const double fl = flux[j == 0 ? n - 1 : j - 1];
          const double fr = flux[j];
          const double adv = row[j] - lam * (fr - fl);
          o[j] = bb ? a * bb[j] + b * adv : b * adv;
          if (!std::isfinite(o[j])) {
#pragma omp critical
            {
              if (bad_k < 0) {
                bad_k = static_cast<long>(k);
                bad_j = static_cast<long>(j);
              }
            }
          }
        }
      }
    }
    if (bad_k >= 0) {
      // a non-finite input cell poisons the phasor and with it every slice,
      // so point at the input cell when there is one
      for (std::size_t i = 0; i < f.size(); ++i)
        if (!std::isfinite(f[i]))
          throw Error(ErrorCode::numerical, "non-finite density in slice " + std::to_string(i / n) + ", cell " +
                                                std::to_string(i % n));
      throw Error(ErrorCode::numerical, "non-finite flux update in slice " + std::to_string(bad_k) +
                                            ", cell " + std::to_string(bad_j));
    }
  }

 private:
  const KineticState& s_;
  Scheme scheme_;
  std::vector<Phasor> partial_;
};

}  // namespace

PhaseGrid::PhaseGrid(std::size_t n_theta) : n_(n_theta) {
  if (n_theta < 16)
    throw Error(ErrorCode::invalid_argument,
                "n_theta must be >= 16 (got " + std::to_string(n_theta) + ")");
  h_ = kTwoPi / static_cast<double>(n_);
  cos_c_.resize(n_);
  sin_c_.resize(n_);
  cos_e_.resize(n_);
  sin_e_.resize(n_);
  for (std::size_t j = 0; j < n_; ++j) {
    cos_c_[j] = std::cos(center(j));
    sin_c_[j] = std::sin(center(j));
    cos_e_[j] = std::cos(edge(j));
    sin_e_[j] = std::sin(edge(j));
  }
}

KineticState::KineticState(PhaseGrid grid, std::vector<QuadratureNode> nodes, double K)
    : grid_(std::move(grid)), nodes_(std::move(nodes)), K_(K) {
  if (nodes_.empty()) throw Error(ErrorCode::invalid_argument, "kinetic state needs >= 1 omega node");
  if (!(K >= 0.0) || !std::isfinite(K))
    throw Error(ErrorCode::invalid_argument, "coupling K must be finite and >= 0");
  values_.assign(grid_.size() * nodes_.size(), 0.0);
}

KineticState KineticState::from_profile(PhaseGrid grid, std::vector<QuadratureNode> nodes,
                                        double K,
                                        const std::function<double(double, double)>& profile) {
  KineticState s(std::move(grid), std::move(nodes), K);
  std::vector<double> x;
  std::vector<double> w;
  gauss_legendre(4, x, w);
  const double h = s.grid_.dtheta();
  for (std::size_t k = 0; k < s.n_omega(); ++k) {
    auto r = s.row(k);
    const double om = s.nodes_[k].omega;
    for (std::size_t j = 0; j < s.n_theta(); ++j) {
      const double c = s.grid_.center(j);
      double acc = 0.0;
      for (std::size_t q = 0; q < 4; ++q) acc += 0.5 * w[q] * profile(c + 0.5 * h * x[q], om);
      if (!std::isfinite(acc) || acc < 0.0)
        throw Error(ErrorCode::invalid_argument,
                    "initial profile is negative or non-finite near theta=" + std::to_string(c));
      r[j] = acc;
    }
  }
  const OrderParams op = global_order(s);
  s.phi_memory_ = op.phi;
  return s;
}

double KineticState::support_bound() const {
  if (M_ >= 0.0) return M_;
  double m = 0.0;
  for (const auto& q : nodes_) m = std::max(m, std::abs(q.omega));
  return m;
}

double KineticState::slice_mass(std::size_t k) const {
  double m = 0.0;
  for (double v : row(k)) m += v;
  return m * grid_.dtheta();
}

double KineticState::total_mass() const {
  double m = 0.0;
  for (std::size_t k = 0; k < n_omega(); ++k) m += nodes_[k].weight * slice_mass(k);
  return m;
}

std::vector<double> KineticState::density() const {
  std::vector<double> rho(n_theta(), 0.0);
  for (std::size_t k = 0; k < n_omega(); ++k) {
    const auto r = row(k);
    const double w = nodes_[k].weight;
    for (std::size_t j = 0; j < n_theta(); ++j) rho[j] += w * r[j];
  }
  return rho;
}

std::vector<double> velocity_field(const KineticState& s, const OrderParams& op) {
  const std::size_t n = s.n_theta();
  std::vector<double> v(n * s.n_omega());
  const double kre = s.K() * op.R * std::cos(op.phi);
  const double kim = s.K() * op.R * std::sin(op.phi);
  const auto& se = s.grid().sin_edge();
  const auto& ce = s.grid().cos_edge();
  for (std::size_t k = 0; k < s.n_omega(); ++k) {
    const double om = s.nodes()[k].omega;
    for (std::size_t j = 0; j < n; ++j) v[k * n + j] = om - (kre * se[j] - kim * ce[j]);
  }
  return v;
}

double cfl_dt(const KineticState& s, double cfl, double dt_max) {
  if (!(cfl > 0.0) || cfl > 1.0) throw Error(ErrorCode::invalid_argument, "cfl must lie in (0, 1]");
  const OrderParams op = global_order(s);
  // max over edges of |omega - K R sin(.)|; per slice it is attained at the
  // edge maximizing the sine term, so scan one slice's edges for the extremes.
  const double kre = s.K() * op.R * std::cos(op.phi);
  const double kim = s.K() * op.R * std::sin(op.phi);
  const auto& se = s.grid().sin_edge();
  const auto& ce = s.grid().cos_edge();
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t j = 0; j < s.n_theta(); ++j) {
    const double c = kre * se[j] - kim * ce[j];
    if (j == 0 || c < lo) lo = c;
    if (j == 0 || c > hi) hi = c;
  }
  double vmax = 0.0;
  for (const auto& q : s.nodes())
    vmax = std::max({vmax, std::abs(q.omega - lo), std::abs(q.omega - hi)});
  if (vmax == 0.0) return dt_max;
  return std::min(dt_max, cfl * s.grid().dtheta() / vmax);
}

void step(KineticState& s, double dt, Scheme scheme) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw Error(ErrorCode::invalid_argument, "time step must be positive and finite");
  const double admissible = cfl_dt(s, 1.0);
  if (dt > admissible * (1.0 + 1e-12)) {
    std::ostringstream os;
    os.precision(17);
    os << "time step " << dt << " violates the CFL bound; admissible dt <= " << admissible;
    throw Error(ErrorCode::cfl_violation, os.str());
  }
  Stepper st(s, scheme);
  std::vector<double> f1(s.values().size());
  st.stage(s.values(), dt, 0.0, nullptr, 1.0, f1);
  std::vector<double> f2(s.values().size());
  st.stage(f1, dt, 0.5, &s.values(), 0.5, f2);
  s.values().swap(f2);
  s.set_t(s.t() + dt);
  const OrderParams op = global_order(s);
  if (op.defined) s.set_phi_memory(op.phi);
}

std::size_t run(KineticState& s, double t_end, double sample_every, const StepOptions& opt,
                const SampleSink& sink, const SampleSink& on_step) {
  if (!(sample_every > 0.0)) throw Error(ErrorCode::invalid_argument, "sample_every must be > 0");
  if (t_end < s.t()) throw Error(ErrorCode::invalid_argument, "t_end precedes the state time");
  const double t0 = s.t();
  std::size_t calls = 0;
  if (sink) sink(s, 0.0);
  ++calls;
  std::size_t n = 1;
  double last_dt = 0.0;
  while (s.t() < t_end) {
    const double target = std::min(t_end, t0 + static_cast<double>(n) * sample_every);
    double dt = cfl_dt(s, opt.cfl, opt.dt_max);
    const double remaining = target - s.t();
    if (dt >= remaining) {
      dt = remaining;
    } else if (dt > 0.5 * remaining) {
      // split evenly rather than leave a sliver step before the sample
      dt = 0.5 * remaining;
    }
    step(s, dt, opt.scheme);
    last_dt = dt;
    const bool at_sample = std::abs(s.t() - target) <= 1e-12 * std::max(1.0, std::abs(target));
    if (at_sample) s.set_t(target);
    if (on_step) on_step(s, dt);
    if (at_sample) {
      if (sink) sink(s, last_dt);
      ++calls;
      ++n;
    }
  }
  return calls;
}

void OrderSeries::push(double time, double r, double phase) {
  if (!phi.empty()) phase = phi.back() + wrap_signed(phase - phi.back());
  t.push_back(time);
  R.push_back(r);
  phi.push_back(phase);
}

void OrderSeries::at(double time, double& r, double& phase) const {
  if (t.empty() || time < t.front() - 1e-12 || time > t.back() + 1e-12)
    throw Error(ErrorCode::invalid_argument,
                "time " + std::to_string(time) + " lies outside the recorded series");
  auto it = std::upper_bound(t.begin(), t.end(), time);
  std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
  if (i + 1 >= t.size()) {
    r = R.back();
    phase = phi.back();
    return;
  }
  const double s = (time - t[i]) / (t[i + 1] - t[i]);
  r = (1.0 - s) * R[i] + s * R[i + 1];
  phase = (1.0 - s) * phi[i] + s * phi[i + 1];
}

CharacteristicPath characteristic(const OrderSeries& series, double K, double theta0,
                                  double omega0, double t0, double t1, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "characteristic dt must be > 0");
  if (series.t.empty() || std::min(t0, t1) < series.t.front() - 1e-12 ||
      std::max(t0, t1) > series.t.back() + 1e-12)
    throw Error(ErrorCode::invalid_argument, "characteristic interval outside recorded series");
  auto rhs = [&](double t, double th) {
    double r;
    double ph;
    series.at(t, r, ph);
    return omega0 - K * r * std::sin(th - ph);
  };
  CharacteristicPath p;
  p.t.push_back(t0);
  p.theta.push_back(theta0);
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  double t = t0;
  double th = theta0;
  const std::size_t steps =
      static_cast<std::size_t>(std::ceil(std::abs(t1 - t0) / dt - 1e-9));
  for (std::size_t i = 0; i < steps; ++i) {
    const double tn = i + 1 == steps ? t1 : t0 + dir * dt * static_cast<double>(i + 1);
    const double h = tn - t;
    const double k1 = rhs(t, th);
    const double k2 = rhs(t + 0.5 * h, th + 0.5 * h * k1);
    const double k3 = rhs(t + 0.5 * h, th + 0.5 * h * k2);
    const double k4 = rhs(tn, th + h * k3);
    th += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    t = tn;
    p.t.push_back(t);
    p.theta.push_back(th);
  }
  return p;
}

void write_checkpoint(const KineticState& s, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io, "cannot write checkpoint " + path.string());
  put<std::uint64_t>(os, s.n_theta());
  put<std::uint64_t>(os, s.n_omega());
  put<double>(os, s.t());
  put<double>(os, s.K());
  for (double v : s.values()) put<double>(os, v);
  if (!os) throw Error(ErrorCode::io, "short write on checkpoint " + path.string());
}

KineticState read_checkpoint(const std::filesystem::path& path,
                             std::vector<QuadratureNode> nodes) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::io, "cannot open checkpoint " + path.string());
  const auto nt = get<std::uint64_t>(is);
  const auto nw = get<std::uint64_t>(is);
  const double t = get<double>(is);
  const double K = get<double>(is);
  if (nw != nodes.size())
    throw Error(ErrorCode::io, "checkpoint has " + std::to_string(nw) + " omega slices, expected " +
                                   std::to_string(nodes.size()));
  KineticState s(PhaseGrid(nt), std::move(nodes), K);
  for (double& v : s.values()) v = get<double>(is);
  s.set_t(t);
  const OrderParams op = global_order(s);
  s.set_phi_memory(op.phi);
  return s;
}

KineticState load_initial_csv(const std::filesystem::path& path, PhaseGrid grid,
                              std::vector<QuadratureNode> nodes, double K) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open initial data " + path.string());
  KineticState s(std::move(grid), std::move(nodes), K);
  std::vector<char> seen(s.values().size(), 0);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c, ','))
      throw Error(ErrorCode::io, "initial data row " + std::to_string(row) + " needs 3 columns");
    std::size_t k = 0;
    std::size_t j = 0;
    double f = 0.0;
    try {
      k = std::stoul(a);
      j = std::stoul(b);
      f = std::stod(c);
    } catch (const std::exception&) {
      if (row == 1) continue;  // header
      throw Error(ErrorCode::io, "initial data row " + std::to_string(row) + " is not numeric");
    }
    if (k >= s.n_omega() || j >= s.n_theta())
      throw Error(ErrorCode::io, "initial data row " + std::to_string(row) + " index out of range");
    if (!(f >= 0.0) || !std::isfinite(f))
      throw Error(ErrorCode::io, "initial data row " + std::to_string(row) + " has invalid f");
    s.row(k)[j] = f;
    seen[k * s.n_theta() + j] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw Error(ErrorCode::io, "initial data " + path.string() + " does not cover every cell");
  const OrderParams op = global_order(s);
  s.set_phi_memory(op.phi);
  return s;
}

}  // namespace kslab
