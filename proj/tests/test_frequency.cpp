#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "kslab/frequency.hpp"

using namespace kslab;

TEST_CASE("dirac moments and quadrature") {
  const auto g = FrequencyDensity::dirac();
  const auto m = moments(g);
  CHECK(m.mass == 1.0);
  CHECK(m.mean == 0.0);
  for (std::size_t n : {1u, 4u, 64u}) {
    const auto q = g.quadrature_nodes(n);
    REQUIRE(q.size() == 1);
    CHECK(q[0].omega == 0.0);
    CHECK(q[0].weight == 1.0);
  }
  CHECK(g.support_bound() == 0.0);
  CHECK_THROWS_AS(g.density(0.0), Error);
}

TEST_CASE("uniform moments with 64 nodes") {
  const auto g = FrequencyDensity::uniform(1.0);
  const auto q = g.quadrature_nodes(64);
  double mass = 0, mean = 0, second = 0;
  for (const auto& n : q) {
    mass += n.weight;
    mean += n.omega * n.weight;
    second += n.omega * n.omega * n.weight;
  }
  CHECK(std::abs(mass - 1.0) <= 1e-12);
  CHECK(std::abs(mean) <= 1e-12);
  CHECK(std::abs(second - 1.0 / 3.0) <= 1e-12);
  const auto m = moments(g);
  CHECK(std::abs(m.mass - 1.0) <= 1e-12);
  CHECK(std::abs(m.mean) <= 1e-12);
}

TEST_CASE("two-point Gauss rule on uniform(1)") {
  const auto q = FrequencyDensity::uniform(1.0).quadrature_nodes(2);
  REQUIRE(q.size() == 2);
  CHECK(q[0].omega == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(q[1].omega == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(q[0].weight == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(q[1].weight == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("quadrature invariants for every built-in kind") {
  const std::vector<FrequencyDensity> gs = {
      FrequencyDensity::dirac(), FrequencyDensity::uniform(0.3),
      FrequencyDensity::table({-1.0, -0.2, 0.0, 0.2, 1.0}, {0.0, 1.0, 2.0, 1.0, 0.0})};
  for (const auto& g : gs) {
    for (std::size_t n : {8u, 16u, 33u}) {
      const auto q = g.quadrature_nodes(n);
      double mass = 0, mean = 0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        mass += q[i].weight;
        mean += q[i].omega * q[i].weight;
        CHECK(q[i].weight > 0.0);
        CHECK(std::abs(q[i].omega) <= g.support_bound());
        if (i) CHECK(q[i].omega > q[i - 1].omega);
      }
      CHECK(std::abs(mass - 1.0) <= 1e-10);
      CHECK(std::abs(mean) <= 1e-10);
    }
  }
  CHECK_THROWS_AS(FrequencyDensity::uniform(1.0).quadrature_nodes(0), Error);
}

TEST_CASE("table validation and renormalization") {
  CHECK_THROWS_AS(FrequencyDensity::table({-1, 0, 1}, {0, 0, 0}), Error);
  CHECK_THROWS_AS(FrequencyDensity::table({-1, 0, 1}, {1, -1, 1}), Error);
  CHECK_THROWS_AS(FrequencyDensity::table({-1, 1, 0}, {1, 1, 1}), Error);
  CHECK_THROWS_AS(FrequencyDensity::uniform(0.0), Error);
  const auto g = FrequencyDensity::table({-1.0, 1.0}, {2.0, 2.0});
  CHECK(g.renormalization() == doctest::Approx(0.25));
  CHECK(g.density(0.3) == doctest::Approx(0.5));
  CHECK(g.density(1.5) == 0.0);
  const auto tent = FrequencyDensity::table({-1.0, 0.0, 1.0}, {0.0, 1.0, 0.0});
  CHECK(tent.density(0.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(tent.support_bound() == 1.0);
}

TEST_CASE("inner support of a uniform density") {
  const auto g = FrequencyDensity::uniform(1.0);
  CHECK(g.inner_support() == doctest::Approx(1.0));
  CHECK(g.min_density_on_inner_support() == doctest::Approx(0.5));
}

TEST_CASE("sample") {
  const auto d = sample(FrequencyDensity::dirac(), 5, 3);
  CHECK(d == std::vector<double>(5, 0.0));
  const auto g = FrequencyDensity::uniform(1.0);
  const auto s = sample(g, 100000, 1);
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  CHECK(std::abs(mean) <= 3.0 / std::sqrt(1e5 * 3.0));
  for (double x : s) CHECK_UNARY(std::abs(x) <= 1.0);
  CHECK(sample(g, 100, 7) == sample(g, 100, 7));
  CHECK(sample(g, 100, 7) != sample(g, 100, 8));
  CHECK_THROWS_AS(sample(g, 0, 1), Error);
  const auto tent = FrequencyDensity::table({-0.5, 0.0, 0.5}, {0.0, 1.0, 0.0});
  const auto ts = sample(tent, 20000, 2);
  double m2 = 0;
  for (double x : ts) {
    CHECK_UNARY(std::abs(x) <= 0.5);
    m2 += x * x;
  }
  // variance of a symmetric triangle on [-h, h] is h^2/6
  CHECK(m2 / 20000.0 == doctest::Approx(0.25 / 6.0).epsilon(0.05));
}

TEST_CASE("table CSV") {
  const auto dir = testing::temp_dir("freq_csv");
  testing::write_file(dir / "g.csv", "omega,density\n-1,0\n0,1\n1,0\n");
  const auto g = FrequencyDensity::load_csv(dir / "g.csv");
  CHECK(g.kind() == FrequencyKind::table);
  CHECK(g.density(0.0) == doctest::Approx(1.0));
  testing::write_file(dir / "noheader.csv", "-1,0\n0,1\n1,0\n");
  CHECK_THROWS_AS(FrequencyDensity::load_csv(dir / "noheader.csv"), Error);
  CHECK_THROWS_AS(FrequencyDensity::load_csv(dir / "missing.csv"), Error);
}
