#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kslab/order.hpp"

using namespace kslab;

TEST_CASE("uniform density has no order") {
  auto s = testing::cosine_state(FrequencyDensity::uniform(0.5), 128, 8, 1.0, 0.0);
  const auto op = global_order(s);
  CHECK(op.R <= 1e-12);
  CHECK_FALSE(op.defined);
  CHECK_THROWS_AS(rdot_formula(s), Error);
  CHECK_THROWS_AS(phidot_formula(s), Error);
}

TEST_CASE("cosine profile gives R = a and phi = center") {
  for (std::size_t n : {64u, 256u}) {
    for (double c : {0.0, 1.3, 5.0}) {
      auto s = testing::cosine_state(FrequencyDensity::dirac(), n, 1, 1.0, 0.3, c);
      const double h = s.grid().dtheta();
      const auto op = global_order(s);
      CHECK(std::abs(op.R - 0.3) <= 5 * h * h);
      CHECK(op.defined);
      CHECK(std::abs(wrap_signed(op.phi - c)) <= 5 * h * h);
    }
  }
}

TEST_CASE("narrow bump approaches a Dirac mass") {
  PhaseGrid grid(1024);
  KineticState s(grid, FrequencyDensity::dirac().quadrature_nodes(1), 1.0);
  const std::size_t j = 300;
  s.row(0)[j] = 1.0 / grid.dtheta();
  const auto op = global_order(s);
  CHECK(op.R > 0.9999);
  CHECK(std::abs(op.phi - grid.center(j)) <= 1e-12);
  CHECK(std::abs(rdot_formula(s)) <= 1e-12);
}

TEST_CASE("local order equals global order for one slice") {
  auto s = testing::cosine_state(FrequencyDensity::dirac(), 128, 1, 1.0, 0.25, 2.0);
  const auto a = global_order(s);
  const auto b = local_order(s, 0);
  CHECK(a.R == doctest::Approx(b.R).epsilon(1e-14));
  CHECK(a.phi == doctest::Approx(b.phi).epsilon(1e-14));
}

TEST_CASE("global order is the weighted projection of the local ones") {
  const auto g = FrequencyDensity::uniform(0.2);
  const auto s = KineticState::from_profile(PhaseGrid(256), g.quadrature_nodes(12), 1.0, [](double th, double w) {
    return (1.0 + 2.0 * (0.2 + w) * std::cos(th - 3.0 * w)) / kTwoPi;
  });
  const double h = s.grid().dtheta();
  const auto op = global_order(s);
  double proj_cos = 0.0;
  double proj_sin = 0.0;
  for (std::size_t k = 0; k < s.n_omega(); ++k) {
    const auto lo = local_order(s, k);
    proj_cos += s.nodes()[k].weight * lo.R * std::cos(lo.phi - op.phi);
    proj_sin += s.nodes()[k].weight * lo.R * std::sin(lo.phi - op.phi);
  }
  CHECK(std::abs(proj_cos - op.R) <= 5 * h * h);
  CHECK(std::abs(proj_sin) <= 5 * h * h);
}

TEST_CASE("local order of an empty slice") {
  KineticState s(PhaseGrid(32), FrequencyDensity::uniform(1.0).quadrature_nodes(2), 1.0);
  CHECK_THROWS_AS(local_order(s, 0), Error);
}

TEST_CASE("sine moment vanishes at the average phase") {
  const auto g = FrequencyDensity::uniform(0.3);
  const auto s = KineticState::from_profile(PhaseGrid(128), g.quadrature_nodes(8), 2.0, [](double th, double w) {
    return std::exp(2.0 * std::cos(th - 1.0 - w)) / (kTwoPi * std::cyl_bessel_i(0.0, 2.0));
  });
  const auto op = global_order(s);
  const double h = s.grid().dtheta();
  CHECK(std::abs(order_moments(s, op).sin_first) <= 5 * h * h);
}

TEST_CASE("derivative formulas in the identical case") {
  for (double c : {0.0, 2.5}) {
    auto s = testing::cosine_state(FrequencyDensity::dirac(), 256, 1, 1.5, 0.2, c);
    CHECK(rdot_formula(s) >= 0.0);
    // profile even about phi
    CHECK(std::abs(phidot_formula(s)) <= 1e-12);
    // R' = K R int sin^2 rho; for (1 + 2a cos)/2pi the integral is 1/2
    CHECK(rdot_formula(s) == doctest::Approx(1.5 * 0.2 * 0.5).epsilon(1e-3));
  }
}

TEST_CASE("phidot bound") {
  CHECK(phidot_bound(1.0, 0.0, 3.0) == 0.0);
  CHECK(phidot_bound(1.0, 2.0, 3.0) == 2.0);
  CHECK(phidot_bound(0.5, 1.0, 4.0) == 4.0);
  CHECK_THROWS_AS(phidot_bound(0.0, 1.0, 1.0), Error);
}

TEST_CASE("kinetic potential") {
  CHECK(kinetic_potential(1.0, 3.0) == 0.0);
  CHECK(kinetic_potential(0.0, 3.0) == 1.5);
  auto s = testing::cosine_state(FrequencyDensity::dirac(), 128, 1, 2.0, 0.25);
  CHECK(kinetic_potential(s) == doctest::Approx(1.0 * (1.0 - global_order(s).R * global_order(s).R)));
}

TEST_CASE("rotation by whole cells") {
  auto s = testing::cosine_state(FrequencyDensity::uniform(0.1), 64, 4, 1.0, 0.3, 0.7);
  const auto op = global_order(s);
  const std::size_t shift = 5;
  KineticState r = s;
  for (std::size_t k = 0; k < s.n_omega(); ++k)
    for (std::size_t j = 0; j < s.n_theta(); ++j) r.row(k)[(j + shift) % s.n_theta()] = s.row(k)[j];
  const auto opr = global_order(r);
  CHECK(std::abs(opr.R - op.R) <= 1e-12);
  CHECK(std::abs(wrap_signed(opr.phi - op.phi - shift * s.grid().dtheta())) <= 1e-12);
}
