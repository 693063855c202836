// Exercises the shared library through its C interface only.
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "kslab/kslab.h"

namespace {

int failures = 0;

void expect(bool ok, const char* what) {
  if (!ok) {
    std::fprintf(stderr, "FAIL: %s (last error: %s)\n", what, ks_last_error());
    ++failures;
  }
}

}  // namespace

int main() {
  expect(std::strlen(ks_version()) > 0, "version string");
  expect(std::string(ks_status_name(KS_ERR_CONFIG)) == "config", "status name");

  ks_frequency* g = nullptr;
  expect(ks_frequency_uniform(0.1, &g) == KS_OK, "uniform density");
  double M = 0;
  expect(ks_frequency_support_bound(g, &M) == KS_OK && M == 0.1, "support bound");
  ks_frequency* bad = nullptr;
  expect(ks_frequency_uniform(-1.0, &bad) == KS_ERR_INVALID_ARGUMENT && bad == nullptr, "negative halfwidth rejected");
  expect(std::strlen(ks_last_error()) > 0, "error message set");

  ks_kinetic* s = nullptr;
  expect(ks_kinetic_create_cosine(g, 128, 4, 2.0, 0.2, &s) == KS_OK, "create kinetic");
  double R = 0, phi = 0, m0 = 0, m1 = 0, t = 0, dt = 0;
  expect(ks_kinetic_order(s, &R, &phi) == KS_OK && std::abs(R - 0.2) < 1e-3, "initial order");
  expect(ks_kinetic_total_mass(s, &m0) == KS_OK, "mass");
  expect(ks_kinetic_cfl_dt(s, &dt) == KS_OK && dt > 0, "cfl dt");
  expect(ks_kinetic_step(s, 100.0) == KS_ERR_CFL, "oversized step rejected");
  expect(ks_kinetic_advance(s, 2.0) == KS_OK, "advance");
  expect(ks_kinetic_time(s, &t) == KS_OK && std::abs(t - 2.0) < 1e-12, "time lands on t_end");
  expect(ks_kinetic_total_mass(s, &m1) == KS_OK && std::abs(m1 - m0) < 1e-12, "mass conserved");
  double R2 = 0;
  ks_kinetic_order(s, &R2, &phi);
  expect(R2 > R, "order grows");
  double mass = 0;
  expect(ks_kinetic_interval_mass(s, "Iplus(0.5)", &mass) == KS_OK && mass > 0 && mass < 1, "interval mass");
  expect(ks_kinetic_interval_mass(s, "Iplus", &mass) == KS_ERR_CONFIG, "bad interval label");
  expect(ks_kinetic_set_scheme(s, 7, 0.5) == KS_ERR_INVALID_ARGUMENT, "bad scheme");
  ks_kinetic_free(s);

  const double pi = std::acos(-1.0);
  const double th[3] = {0.0, pi / 2, pi};
  const double om[3] = {0.0, 0.0, 0.0};
  ks_particles* p = nullptr;
  expect(ks_particles_create(th, om, 3, 1.0, &p) == KS_OK, "create particles");
  double r = 0, V = 0;
  expect(ks_particles_order(p, &r, &phi) == KS_OK && std::abs(r - 1.0 / 3.0) < 1e-14, "particle order");
  expect(ks_particles_potential(p, &V) == KS_OK && std::abs(V - 4.0 / 3.0) < 1e-13,
         "particle potential");
  expect(ks_particles_step(p, 0.01) == KS_OK, "particle step");
  double out[3];
  expect(ks_particles_thetas(p, out, 3) == KS_OK && out[0] > 0 && out[2] < pi, "phases move together");
  expect(ks_particles_thetas(p, out, 2) == KS_ERR_INVALID_ARGUMENT, "short buffer rejected");
  ks_particles_free(p);
  expect(ks_particles_create(th, om, 0, 1.0, &p) == KS_ERR_INVALID_ARGUMENT, "empty ensemble rejected");

  double v = 0;
  expect(ks_r_infinity(0.01, 1.0, &v) == KS_OK && std::abs(v - (1.01 - std::sqrt(0.0401))) < 1e-14,
         "r_infinity");
  expect(ks_mstar(0.1, 1.2, &v) == KS_OK && v < 1.0, "mstar");
  expect(ks_mstar(0.1, 0.5, &v) == KS_ERR_PRECONDITION, "mstar window");
  int found = -1;
  expect(ks_equilibrium(g, 10.0, &found, &v) == KS_OK && found == 1 && v > 0.99, "equilibrium");

  ks_config* cfg = nullptr;
  expect(ks_config_parse("{\"grid\": {\"n_theta\": 8}}", nullptr, &cfg) == KS_OK, "parse config");
  expect(ks_config_validate(cfg) == KS_ERR_CONFIG, "n_theta below 16 rejected");
  expect(std::string(ks_last_error()).find("grid.n_theta") != std::string::npos, "error names field");
  ks_config_free(cfg);
  expect(ks_config_parse("{\"bogus\": 1}", nullptr, &cfg) == KS_ERR_CONFIG, "unknown key");
  expect(ks_config_parse("{\"K\": 3, \"output\": \"x\"}", nullptr, &cfg) == KS_OK, "parse config");
  expect(std::string(ks_config_output(cfg)) == "x", "output dir");
  size_t need = 0;
  expect(ks_config_to_json(cfg, nullptr, 0, &need) == KS_OK && need > 0, "json length query");
  std::vector<char> buf(need + 1);
  expect(ks_config_to_json(cfg, buf.data(), buf.size(), &need) == KS_OK, "json text");
  ks_config* again = nullptr;
  expect(ks_config_parse(buf.data(), nullptr, &again) == KS_OK, "canonical json parses");
  ks_config_free(again);
  ks_config_free(cfg);
  expect(ks_run_verify("nope", nullptr, nullptr, nullptr) == KS_ERR_CONFIG, "unknown suite");
  ks_config_free(nullptr);

  ks_frequency_free(g);
  std::printf("%s\n", failures == 0 ? "capi ok" : "capi FAILED");
  return failures == 0 ? 0 : 1;
}
