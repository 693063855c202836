#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "kslab/diagnostics.hpp"

using namespace kslab;

TEST_CASE("interval labels") {
  for (const auto& iv : {Interval::Iplus(0.2), Interval::Iminus(0.5), Interval::Lplus(1.1), Interval::Lminus(1.3)}) {
    const auto back = parse_interval(iv.name());
    CHECK(back.kind == iv.kind);
    CHECK(back.param == iv.param);
  }
  CHECK_THROWS_AS(parse_interval("Iplus"), Error);
  CHECK_THROWS_AS(parse_interval("Icross(0.2)"), Error);
  CHECK_THROWS_AS(Interval::Iplus(1.7).validate(), Error);
  CHECK_THROWS_AS(Interval::Lplus(0.0).validate(), Error);
  const Arc a = Interval::Lminus(1.2).at(0.3);
  CHECK(a.center == doctest::Approx(wrap_angle(0.3 + kPi)));
  CHECK(a.halfwidth == doctest::Approx(kPi / 2 - 1.2));
}

TEST_CASE("arc masses partition the circle") {
  auto s = testing::cosine_state(FrequencyDensity::uniform(0.2), 100, 6, 1.0, 0.3, 0.77);
  CHECK(arc_mass(s, {1.0, kPi}) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(arc_mass(s, {1.0, 1e-12}) <= 1e-11);
  const auto op = global_order(s);
  for (double d : {0.2, 0.5, 1.2}) {
    const double plus = interval_mass(s, Interval::Iplus(d), op);
    const double minus = interval_mass(s, Interval::Iminus(d), op);
    const double rest = arc_mass(s, {op.phi + kPi / 2, kPi / 2 - d}) + arc_mass(s, {op.phi - kPi / 2, kPi / 2 - d});
    CHECK(std::abs(plus + minus + rest - 1.0) <= 1e-10);
  }
  // L+(gamma) is I+(pi/2 - gamma)
  CHECK(interval_mass(s, Interval::Lplus(1.0), op) ==
        doctest::Approx(interval_mass(s, Interval::Iplus(kPi / 2 - 1.0), op)).epsilon(1e-14));
}

TEST_CASE("sub-cell apportionment is exact for piecewise-constant data") {
  KineticState s(PhaseGrid(16), FrequencyDensity::dirac().quadrature_nodes(1), 1.0);
  for (std::size_t j = 0; j < 16; ++j) s.row(0)[j] = static_cast<double>(j);
  const double h = s.grid().dtheta();
  // from the middle of cell 3 to a quarter into cell 6
  const double a = 3.5 * h, b = 6.25 * h;
  const double expected = (0.5 * 3 + 4 + 5 + 0.25 * 6) * h;
  CHECK(arc_mass(s, {0.5 * (a + b), 0.5 * (b - a)}) == doctest::Approx(expected).epsilon(1e-13));
  // an arc across theta = 0
  const double wrap = (0.5 * 15 + 0.5 * 0) * h;
  CHECK(arc_mass(s, {0.0, 0.5 * h}) == doctest::Approx(wrap).epsilon(1e-13));
}

TEST_CASE("undefined phase") {
  auto s = testing::cosine_state(FrequencyDensity::dirac(), 64, 1, 1.0, 0.0);
  CHECK_THROWS_AS(interval_mass(s, Interval::Iplus(0.2)), Error);
}

TEST_CASE("L2 functionals") {
  auto s = testing::cosine_state(FrequencyDensity::dirac(), 64, 1, 1.0, 0.0);
  const OrderParams op{0.0, 1.0, true};
  CHECK(lyapunov_L2(s, Interval::Iplus(0.4), false, op)[0] ==
        doctest::Approx(0.8 / (4 * kPi * kPi)).epsilon(1e-12));
  CHECK(arc_l2_density(s, {1.0, 0.0}) == 0.0);
  auto g = testing::cosine_state(FrequencyDensity::uniform(0.1), 64, 4, 1.0, 0.2);
  const auto per = lyapunov_L2(g, Interval::Iminus(0.3), true);
  CHECK(per.size() == 4);
  for (double v : per) CHECK(v >= 0.0);
}

TEST_CASE("exponential rate fitting") {
  std::vector<double> t, v, c;
  for (int i = 0; i <= 50; ++i) {
    t.push_back(0.1 * i);
    v.push_back(3.0 * std::exp(-2.0 * t.back()));
    c.push_back(0.7);
  }
  const auto f = fit_exponential_rate(t, v, 0.0, 5.0);
  CHECK(std::abs(f.slope + 2.0) <= 1e-9);
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(fit_exponential_rate(t, c, 0.0, 5.0).slope) <= 1e-12);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<double> n;
  for (double x : v) n.push_back(x * (1.0 + noise(rng)));
  CHECK(fit_exponential_rate(t, n, 0.0, 5.0).slope == doctest::Approx(-2.0).epsilon(0.05));

  auto z = v;
  z[30] = 0.0;
  const auto shrunk = fit_exponential_rate(t, z, 0.0, 5.0);
  CHECK(shrunk.shrunk);
  CHECK(shrunk.n == 30);
  CHECK_THROWS_AS(fit_exponential_rate(t, v, 0.0, 0.3), Error);
}

TEST_CASE("trend start") {
  std::vector<double> v = {1, 2, 1, 2, 3};
  for (int i = 1; i <= 30; ++i) v.push_back(3.0 - 0.01 * i);
  CHECK(detect_trend_start(v, -1) == 4);
  CHECK(detect_trend_start(v, +1) == static_cast<std::size_t>(-1));
}

TEST_CASE("three-point derivative is exact on quadratics") {
  const double t[3] = {0.0, 0.3, 0.5};
  double v[3];
  for (int i = 0; i < 3; ++i) v[i] = 2 * t[i] * t[i] - t[i] + 1;
  for (int m = 0; m < 3; ++m) CHECK(three_point_derivative(t, v, m) == doctest::Approx(4 * t[m] - 1).epsilon(1e-12));
}

TEST_CASE("recorded diagnostics on a smooth distributed run") {
  auto s = testing::cosine_state(FrequencyDensity::uniform(0.1), 128, 8, 2.0, 0.2);
  DiagnosticsConfig cfg;
  cfg.intervals = {Interval::Iplus(0.3), Interval::Lplus(1.1)};
  cfg.gamma_plus = 1.1;
  cfg.gamma_minus = 1.2;
  cfg.sandwich_gamma = 1.3;
  const auto recs = run_with_diagnostics(s, 3.0, 0.1, cfg);
  CHECK(recs.size() == 31);
  const auto cols = record_columns(cfg, s.n_omega());
  for (const auto& r : recs) {
    CHECK(record_row(r).size() == cols.size());
    for (double m : r.masses) {
      CHECK(m >= 0.0);
      CHECK(m <= 1.0 + 1e-10);
    }
    CHECK(r.lambda >= 0.0);
    CHECK(r.gamma_minus >= 0.0);
    for (double gp : r.gamma_plus) CHECK(gp >= 0.0);
    CHECK(r.measured_valid);
    for (const auto& c : r.checks) {
      INFO(c.name << " at t=" << r.t << " margin " << c.margin);
      CHECK(c.pass);
    }
  }
  bool has_lipschitz = false;
  for (const auto& c : recs[5].checks) has_lipschitz |= c.name == "rdot_lipschitz";
  CHECK(has_lipschitz);
}

TEST_CASE("identical-oscillator diagnostics") {
  auto s = testing::cosine_state(FrequencyDensity::dirac(), 256, 1, 1.0, 0.2);
  DiagnosticsConfig cfg;
  cfg.intervals = {Interval::Iplus(0.2), Interval::Iminus(0.2)};
  const auto recs = run_with_diagnostics(s, 10.0, 0.1, cfg);
  for (std::size_t i = 1; i < recs.size(); ++i) {
    CHECK(recs[i].V <= recs[i - 1].V + 1e-9);
    CHECK(recs[i].R >= recs[0].R - 1e-8);
    CHECK(recs[i].rdot_formula >= 0.0);
  }
  CHECK(recs.back().masses[0] > recs.front().masses[0]);
  CHECK(recs.back().masses[1] < recs.front().masses[1]);
}
