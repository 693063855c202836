#include <doctest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "kslab/experiment.hpp"

using namespace kslab;

namespace {

ExperimentConfig small_config() {
  return parse_config(R"j({
    "model": "both",
    "frequency": {"type": "uniform", "halfwidth": 0.05},
    "initial": {"type": "von_mises", "concentration": 2.0, "center": 1.0},
    "K": 2.0,
    "grid": {"n_theta": 64, "n_omega": 3, "n_particles": 50},
    "time": {"t_end": 1.0, "sample_every": 0.1},
    "scheme": "upwind",
    "diagnostics": {"intervals": ["Iplus(0.3)"], "gamma_minus": 1.2,
                    "hypotheses": {"mu": 0.001, "gamma": 1.45, "kappa": 0.7, "eps0": 0.2, "gamma0": 1.1}},
    "seed": 3
  })j");
}

std::string error_of(const std::string& text) {
  try {
    validate_config(parse_config(text));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config round trip") {
  const auto c = small_config();
  CHECK(c.model == ModelKind::both);
  CHECK(c.scheme == Scheme::upwind);
  CHECK(c.grid.n_theta == 64);
  REQUIRE(c.diagnostics.hypotheses.kappa.has_value());
  CHECK(*c.diagnostics.hypotheses.kappa == 0.7);
  CHECK(parse_config(config_to_json(c)) == c);
  const auto d = parse_config("{}");
  CHECK(parse_config(config_to_json(d)) == d);
  auto list = parse_config(R"j({"K": [1, 2.5]})j");
  CHECK(list.K_is_list);
  CHECK(list.K == std::vector<double>{1.0, 2.5});
  CHECK(parse_config(config_to_json(list)) == list);
}

TEST_CASE("config errors name the field") {
  CHECK(error_of(R"j({"grid": {"n_theta": 8}})j").find("grid.n_theta") != std::string::npos);
  CHECK(error_of(R"j({"grid": {"n_thetas": 64}})j").find("unknown key 'grid.n_thetas'") != std::string::npos);
  CHECK(error_of(R"j({"time": {"t_end": "long"}})j").find("time.t_end") != std::string::npos);
  CHECK(error_of(R"j({"diagnostics": {"intervals": ["Icross(0.1)"]}})j").find("diagnostics.intervals") !=
        std::string::npos);
  CHECK_FALSE(error_of(R"j({"model": "fluid"})j").empty());
  CHECK_FALSE(error_of("{not json").empty());
}

TEST_CASE("simulate writes reproducible outputs") {
  const auto c = small_config();
  const auto a = testing::temp_dir("sim_a");
  const auto b = testing::temp_dir("sim_b");
  const int rc = cmd_simulate(c, a);
  CHECK(rc == 0);
  CHECK(cmd_simulate(c, b) == rc);
  for (const char* f : {"config.json", "trajectory.csv", "particles.csv", "bounds.json", "summary.json", "plot.gp"}) {
    INFO(f);
    REQUIRE(std::filesystem::exists(a / f));
  }
  for (const char* f : {"trajectory.csv", "particles.csv"}) CHECK(testing::read_file(a / f) == testing::read_file(b / f));

  const auto traj = testing::read_file(a / "trajectory.csv");
  std::istringstream in(traj);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("t,dt,R,phi,phi_defined,mass_Iplus(0.3)", 0) == 0);
  CHECK(header.back() == '\r');
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  CHECK(rows == 11);

  const auto summary = nlohmann::json::parse(testing::read_file(a / "summary.json"));
  CHECK(summary["K"] == 2.0);
  CHECK(std::abs(summary["kinetic"]["total_mass_drift"].get<double>()) <= 1e-12);
  CHECK(summary["hypotheses"]["parameters_complete"] == true);
}

TEST_CASE("sweep") {
  auto single = parse_config(R"j({"K": 1.0, "grid": {"n_theta": 64, "n_omega": 1}})j");
  CHECK_THROWS_AS(cmd_sweep(single, testing::temp_dir("sweep_single"), 1), Error);

  auto c = parse_config(R"j({"frequency": {"type": "dirac"}, "K": [1.0, 2.0, 4.0],
                            "initial": {"amplitude": 0.3},
                            "grid": {"n_theta": 128, "n_omega": 1},
                            "time": {"t_end": 20.0, "sample_every": 0.5}})j");
  const auto one = testing::temp_dir("sweep_1");
  const auto many = testing::temp_dir("sweep_3");
  CHECK(cmd_sweep(c, one, 1) == 0);
  CHECK(cmd_sweep(c, many, 3) == 0);
  CHECK(testing::read_file(one / "sweep.csv") == testing::read_file(many / "sweep.csv"));
  const auto j = nlohmann::json::parse(testing::read_file(one / "sweep.json"));
  REQUIRE(j["rows"].size() == 3);
  for (const auto& r : j["rows"]) CHECK(r["final_R"].get<double>() >= 0.99);
}

TEST_CASE("equilibrium command") {
  auto c = parse_config(R"j({"frequency": {"type": "uniform", "halfwidth": 1.0}, "K": [1.0, 5.0]})j");
  const auto dir = testing::temp_dir("equilibrium");
  cmd_equilibrium(c, dir);
  const auto j = nlohmann::json::parse(testing::read_file(dir / "equilibrium.json"));
  const auto text = j.dump();
  CHECK(text.find("no solution at R=1 probe") != std::string::npos);
}

TEST_CASE("csv numbers") {
  CHECK(csv_number(0.1) == "0.10000000000000001");
  CHECK(csv_number(2.0) == "2");
}
