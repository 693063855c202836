#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "kslab/kinetic.hpp"
#include "kslab/order.hpp"

using namespace kslab;

namespace {

// Independent semi-discrete first-order upwind scheme for one slice of
// identical oscillators, integrated with classic RK4.
std::vector<double> upwind_rhs(const std::vector<double>& f, double K) {
  const std::size_t n = f.size();
  const double h = kTwoPi / static_cast<double>(n);
  double re = 0, im = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double th = (static_cast<double>(j) + 0.5) * h;
    re += f[j] * std::cos(th) * h;
    im += f[j] * std::sin(th) * h;
  }
  const double R = std::hypot(re, im);
  const double phi = std::atan2(im, re);
  std::vector<double> flux(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double v = -K * R * std::sin(static_cast<double>(j + 1) * h - phi);
    flux[j] = v > 0 ? v * f[j] : v * f[(j + 1) % n];
  }
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j) d[j] = -(flux[j] - flux[(j + n - 1) % n]) / h;
  return d;
}

std::vector<double> rk4_oracle(std::vector<double> f, double K, double t_end, double dt) {
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  auto axpy = [](const std::vector<double>& a, double s, const std::vector<double>& b) {
    std::vector<double> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
    return r;
  };
  for (std::size_t i = 0; i < steps; ++i) {
    const auto k1 = upwind_rhs(f, K);
    const auto k2 = upwind_rhs(axpy(f, 0.5 * dt, k1), K);
    const auto k3 = upwind_rhs(axpy(f, 0.5 * dt, k2), K);
    const auto k4 = upwind_rhs(axpy(f, dt, k3), K);
    for (std::size_t j = 0; j < f.size(); ++j) f[j] += dt / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
  }
  return f;
}

// Cell averages of a fine state restricted to a coarse grid.
double l1_error_vs_reference(const KineticState& coarse, const KineticState& fine) {
  const std::size_t ratio = fine.n_theta() / coarse.n_theta();
  double err = 0.0;
  for (std::size_t k = 0; k < coarse.n_omega(); ++k)
    for (std::size_t j = 0; j < coarse.n_theta(); ++j) {
      double avg = 0.0;
      for (std::size_t q = 0; q < ratio; ++q) avg += fine.row(k)[j * ratio + q];
      avg /= static_cast<double>(ratio);
      err += coarse.nodes()[k].weight * std::abs(coarse.row(k)[j] - avg) * coarse.grid().dtheta();
    }
  return err;
}

KineticState advance(std::size_t n, Scheme scheme, double t_end, double dt_at_64) {
  auto s = testing::cosine_state(FrequencyDensity::uniform(0.2), n, 4, 1.0, 0.3);
  const double dt = dt_at_64 * 64.0 / static_cast<double>(n);
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  for (std::size_t i = 0; i < steps; ++i) step(s, dt, scheme);
  return s;
}

}  // namespace

TEST_CASE("phase grid") {
  CHECK_THROWS_AS(PhaseGrid(8), Error);
  PhaseGrid g(16);
  CHECK(g.dtheta() == doctest::Approx(kTwoPi / 16));
  CHECK(g.center(0) == doctest::Approx(kTwoPi / 32));
  CHECK(g.edge(15) == doctest::Approx(kTwoPi));
}

TEST_CASE("velocity field") {
  KineticState s(PhaseGrid(64), {{0.1, 1.0, 1.0}}, 2.0);
  const std::size_t j = 10;
  const double e = s.grid().edge(j);
  CHECK(velocity_field(s, {0.5, e, true})[j] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(velocity_field(s, {0.5, e - kPi / 2, true})[j] == doctest::Approx(-0.9).epsilon(1e-14));
  for (double v : velocity_field(s, {0.0, 0.0, false})) CHECK(v == 0.1);
  KineticState z(PhaseGrid(64), {{0.1, 1.0, 1.0}}, 0.0);
  for (double v : velocity_field(z, {0.7, 1.0, true})) CHECK(v == 0.1);
}

TEST_CASE("CFL step") {
  KineticState s(PhaseGrid(32), FrequencyDensity::dirac().quadrature_nodes(1), 0.0);
  CHECK(cfl_dt(s, 0.5, 0.25) == 0.25);
  // a spike gives R close to 1, so max|v| is close to M + K
  const auto g = FrequencyDensity::uniform(1.0);
  KineticState b(PhaseGrid(256), g.quadrature_nodes(8), 4.0);
  b.set_support_bound(1.0);
  for (std::size_t k = 0; k < b.n_omega(); ++k) b.row(k)[0] = 1.0 / b.grid().dtheta();
  const double dt = cfl_dt(b, 0.5);
  CHECK(dt >= 0.5 * (kTwoPi / 256) / 5.0);
  double vmax = 0.0;
  for (double v : velocity_field(b, global_order(b))) vmax = std::max(vmax, std::abs(v));
  CHECK(dt == doctest::Approx(0.5 * b.grid().dtheta() / vmax).epsilon(1e-12));
  CHECK_THROWS_AS(cfl_dt(b, 1.5), Error);
  try {
    step(b, 2.0 * cfl_dt(b, 1.0));
    FAIL("expected a CFL violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::cfl_violation);
  }
}

TEST_CASE("constant density is steady") {
  auto s = testing::cosine_state(FrequencyDensity::uniform(0.5), 64, 6, 3.0, 0.0);
  const auto before = s.values();
  for (int i = 0; i < 20; ++i) step(s, 0.5 * cfl_dt(s, 1.0));
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(std::abs(s.values()[i] - before[i]) <= 1e-14);
  CHECK(s.t() > 0.0);
}

TEST_CASE("no coupling and no frequency leaves the state unchanged") {
  auto s = KineticState::from_profile(PhaseGrid(64), FrequencyDensity::dirac().quadrature_nodes(1), 0.0,
                                      [](double th, double) { return (1.0 + std::sin(3 * th) * 0.4) / kTwoPi; });
  const auto before = s.values();
  for (int i = 0; i < 10; ++i) step(s, 0.05);
  CHECK(s.values() == before);
}

TEST_CASE("R increases for identical oscillators, matching a dense ODE oracle") {
  auto s = testing::cosine_state(FrequencyDensity::dirac(), 64, 1, 1.0, 0.2);
  const double R0 = global_order(s).R;
  const auto f0 = std::vector<double>(s.row(0).begin(), s.row(0).end());
  const double dt = 1e-3;
  step(s, dt, Scheme::upwind);
  CHECK(global_order(s).R > R0);
  for (int i = 1; i < 500; ++i) step(s, dt, Scheme::upwind);
  const auto oracle = rk4_oracle(f0, 1.0, 0.5, 1e-3);
  double diff = 0.0;
  for (std::size_t j = 0; j < oracle.size(); ++j) diff = std::max(diff, std::abs(oracle[j] - s.row(0)[j]));
  CHECK(diff <= 1e-5);
}

TEST_CASE("mass conservation and positivity") {
  for (Scheme sc : {Scheme::upwind, Scheme::muscl}) {
    auto s = KineticState::from_profile(PhaseGrid(128), FrequencyDensity::uniform(0.5).quadrature_nodes(8), 3.0,
                                        [](double th, double w) {
                                          return std::exp(8.0 * (std::cos(th - w) - 1.0)) * 1.3;
                                        });
    std::vector<double> m0;
    for (std::size_t k = 0; k < s.n_omega(); ++k) m0.push_back(s.slice_mass(k));
    StepOptions opt;
    opt.scheme = sc;
    run(s, 5.0, 1.0, opt, {}, [&](const KineticState& st, double) {
      for (std::size_t k = 0; k < st.n_omega(); ++k) CHECK(std::abs(st.slice_mass(k) - m0[k]) <= 1e-12 * m0[k]);
      CHECK(*std::min_element(st.values().begin(), st.values().end()) >= -1e-13);
    });
  }
}

TEST_CASE("convergence order on smooth data") {
  const double t_end = 0.5;
  const double dt64 = 0.02;
  for (Scheme sc : {Scheme::upwind, Scheme::muscl}) {
    const auto ref = advance(2048, sc, t_end, dt64);
    const double e1 = l1_error_vs_reference(advance(128, sc, t_end, dt64), ref);
    const double e2 = l1_error_vs_reference(advance(256, sc, t_end, dt64), ref);
    const double rate = std::log2(e1 / e2);
    INFO("rate " << rate);
    CHECK(rate >= (sc == Scheme::upwind ? 0.8 : 1.7));
  }
}

TEST_CASE("run sampling") {
  auto s = testing::cosine_state(FrequencyDensity::dirac(), 64, 1, 1.0, 0.2);
  std::vector<double> times;
  StepOptions opt;
  run(s, 1.0, 0.25, opt, [&](const KineticState& st, double) { times.push_back(st.t()); });
  CHECK(times == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  auto s2 = testing::cosine_state(FrequencyDensity::dirac(), 64, 1, 1.0, 0.2);
  CHECK(run(s2, 0.0, 0.1, opt, {}) == 1);
  CHECK_THROWS_AS(run(s2, -1.0, 0.1, opt, {}), Error);
}

TEST_CASE("runs are deterministic") {
  auto a = testing::cosine_state(FrequencyDensity::uniform(0.3), 128, 8, 2.0, 0.2);
  auto b = a;
  StepOptions opt;
  run(a, 3.0, 0.5, opt, {});
  run(b, 3.0, 0.5, opt, {});
  CHECK(a.values() == b.values());
}

TEST_CASE("identical oscillators synchronize") {
  auto s = testing::cosine_state(FrequencyDensity::dirac(), 256, 1, 1.0, 0.2);
  run(s, 40.0, 1.0, StepOptions{}, {});
  CHECK(global_order(s).R >= 0.99);
}

TEST_CASE("non-finite data is reported with its location") {
  auto s = testing::cosine_state(FrequencyDensity::uniform(0.2), 64, 3, 1.0, 0.2);
  s.row(2)[17] = std::nan("");
  try {
    step(s, 1e-3);
    FAIL("expected a numerical error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numerical);
    CHECK(std::string(e.what()).find("slice 2") != std::string::npos);
  }
}

TEST_CASE("checkpoint round trip") {
  const auto dir = testing::temp_dir("checkpoint");
  auto s = testing::cosine_state(FrequencyDensity::uniform(0.2), 64, 3, 1.5, 0.2);
  step(s, 0.01);
  write_checkpoint(s, dir / "s.bin");
  const auto r = read_checkpoint(dir / "s.bin", s.nodes());
  CHECK(r.values() == s.values());
  CHECK(r.t() == s.t());
  CHECK(r.K() == s.K());
  CHECK_THROWS_AS(read_checkpoint(dir / "s.bin", FrequencyDensity::uniform(0.2).quadrature_nodes(5)), Error);
}

TEST_CASE("initial data CSV") {
  const auto dir = testing::temp_dir("initial_csv");
  std::string text = "omega_index,theta_index,f\n";
  for (int j = 0; j < 16; ++j) text += "0," + std::to_string(j) + "," + std::to_string(1.0 / kTwoPi) + "\n";
  testing::write_file(dir / "ok.csv", text);
  const auto s = load_initial_csv(dir / "ok.csv", PhaseGrid(16), FrequencyDensity::dirac().quadrature_nodes(1), 1.0);
  CHECK(s.total_mass() == doctest::Approx(1.0).epsilon(1e-6));
  testing::write_file(dir / "short.csv", "omega_index,theta_index,f\n0,0,1\n");
  CHECK_THROWS_AS(load_initial_csv(dir / "short.csv", PhaseGrid(16), FrequencyDensity::dirac().quadrature_nodes(1), 1.0),
                  Error);
}

TEST_CASE("characteristics") {
  OrderSeries zero;
  for (int i = 0; i <= 10; ++i) zero.push(i, 0.0, 0.0);
  const auto p = characteristic(zero, 2.0, 0.3, 0.5, 0.0, 10.0, 0.01);
  CHECK(p.t.back() == doctest::Approx(10.0));
  CHECK(p.theta.back() == doctest::Approx(0.3 + 5.0).epsilon(1e-12));
  OrderSeries sync;
  for (int i = 0; i <= 20; ++i) sync.push(0.5 * i, 0.9, 1.0);
  const auto fwd = characteristic(sync, 1.0, 2.5, 0.0, 0.0, 4.0, 0.01);
  // attracted to the average phase
  CHECK(std::abs(wrap_signed(fwd.theta.back() - 1.0)) < 0.1);
  const auto back = characteristic(sync, 1.0, fwd.theta.back(), 0.0, 4.0, 0.0, 0.01);
  CHECK(back.theta.back() == doctest::Approx(2.5).epsilon(1e-6));
  double r, phi;
  CHECK_THROWS_AS(sync.at(11.0, r, phi), Error);
}
