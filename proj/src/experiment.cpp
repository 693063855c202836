#include "kslab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kslab/common.hpp"
#include "kslab/constants.hpp"
#include "kslab/diagnostics.hpp"
#include "kslab/particle.hpp"
#include "kslab/verify.hpp"

namespace kslab {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::config, msg); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      config_error("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

std::string field(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

double get_number(const json& j, const std::string& where, const char* key, double def) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_number()) config_error(field(where, key) + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) config_error(field(where, key) + ": must be finite");
  return x;
}

std::size_t get_count(const json& j, const std::string& where, const char* key, std::size_t def) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    config_error(field(where, key) + ": expected a nonnegative integer");
  return v.get<std::size_t>();
}

std::string get_string(const json& j, const std::string& where, const char* key, const std::string& def) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_string()) config_error(field(where, key) + ": expected a string");
  return v.get<std::string>();
}

std::optional<double> get_optional(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  return get_number(j, where, key, 0.0);
}

const char* model_name(ModelKind m) {
  switch (m) {
    case ModelKind::kinetic: return "kinetic";
    case ModelKind::particle: return "particle";
    case ModelKind::both: return "both";
  }
  return "kinetic";
}

bool runs_kinetic(const ExperimentConfig& c) { return c.model != ModelKind::particle; }
bool runs_particles(const ExperimentConfig& c) { return c.model != ModelKind::kinetic; }

std::filesystem::path resolve(const ExperimentConfig& c, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || c.base_dir.empty() ? path : c.base_dir / path;
}

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
}

void echo_config(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  write_text(dir / "config.json", cfg.source_text.empty() ? config_to_json(cfg) : cfg.source_text);
}

std::string header_line(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + csv_text(cols[i]);
  return s + "\r\n";
}

std::string number_line(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + csv_number(v[i]);
  return s + "\r\n";
}

std::function<double(double)> theta_profile(const InitialSpec& in) {
  const double c0 = in.center;
  if (in.type == "cosine") {
    const double a = in.amplitude;
    return [a, c0](double th) { return (1.0 + 2.0 * a * std::cos(th - c0)) / kTwoPi; };
  }
  if (in.type == "von_mises") {
    const double k = in.concentration;
    // exp(k cos) / (2 pi I0(k)), scaled by exp(-k) to stay finite
    const double norm = kTwoPi * std::cyl_bessel_i(0.0, k) * std::exp(-k);
    return [k, c0, norm](double th) { return std::exp(k * (std::cos(th - c0) - 1.0)) / norm; };
  }
  if (in.type == "uniform") return [](double) { return 1.0 / kTwoPi; };
  config_error("initial.type '" + in.type + "' has no closed-form phase profile");
}

DiagnosticsConfig diagnostics_config(const ExperimentConfig& cfg) {
  DiagnosticsConfig d;
  for (const auto& s : cfg.diagnostics.intervals) d.intervals.push_back(parse_interval(s));
  d.lambda_delta = cfg.diagnostics.lambda_delta;
  d.gamma_plus = cfg.diagnostics.gamma_plus;
  d.gamma_minus = cfg.diagnostics.gamma_minus;
  d.sandwich_gamma = cfg.diagnostics.sandwich_gamma;
  d.step.scheme = cfg.scheme;
  d.step.cfl = cfg.time.cfl;
  d.step.dt_max = cfg.time.dt_max;
  return d;
}

ParticleState make_particles(const ExperimentConfig& cfg, const FrequencyDensity& g, double K) {
  if (!cfg.initial.particles_path.empty()) return load_particles_csv(resolve(cfg, cfg.initial.particles_path), K);
  return sample_particles(theta_profile(cfg.initial), sample(g, cfg.grid.n_particles, cfg.seed), K, cfg.seed + 1);
}

struct ParticleSample {
  double t, r, phi, D, V;
  std::vector<BoundCheck> checks;
};

ParticleSample particle_sample(const ParticleState& ps) {
  const OrderParams op = particle_order(ps);
  ParticleSample s{ps.t, op.R, op.phi, phase_diameter(ps), particle_potential(ps), {}};
  s.checks.push_back({"order_at_most_one", 1.0 + 1e-12 - s.r, s.r <= 1.0 + 1e-12});
  if (s.D < kPi) {
    const double m = s.r - std::cos(0.5 * s.D) + 1e-12;
    s.checks.push_back({"order_vs_diameter", m, m >= 0.0});
  }
  return s;
}

std::vector<ParticleSample> run_particles(ParticleState& ps, const TimeSpec& ts, const LogFn& log) {
  std::vector<ParticleSample> out;
  out.push_back(particle_sample(ps));
  const auto n_samples = static_cast<std::size_t>(std::llround(ts.t_end / ts.sample_every));
  const auto sub = static_cast<std::size_t>(std::ceil(ts.sample_every / ts.particle_dt - 1e-9));
  const double dt = ts.sample_every / static_cast<double>(sub);
  for (std::size_t i = 1; i <= n_samples; ++i) {
    for (std::size_t q = 0; q < sub; ++q) particle_step(ps, dt);
    ps.t = static_cast<double>(i) * ts.sample_every;
    out.push_back(particle_sample(ps));
  }
  if (log) log("particles: N=" + std::to_string(ps.size()) + " final r=" + csv_number(out.back().r));
  return out;
}

std::string particle_csv(const std::vector<ParticleSample>& v) {
  std::string s = header_line({"t", "r", "phi", "D", "V_p"});
  for (const auto& p : v) s += number_line({p.t, p.r, p.phi, p.D, p.V});
  return s;
}

ordered_json check_summary(const std::map<std::string, std::pair<double, std::size_t>>& worst,
                           const std::map<std::string, bool>& passes) {
  ordered_json j = ordered_json::object();
  for (const auto& [name, wc] : worst)
    j[name] = {{"pass", passes.at(name)}, {"min_margin", wc.first}, {"count", wc.second}};
  return j;
}

struct CheckTally {
  std::map<std::string, std::pair<double, std::size_t>> worst;
  std::map<std::string, bool> pass;
  ordered_json rows = ordered_json::array();

  void add(double t, const std::vector<BoundCheck>& checks, const char* source) {
    for (const auto& c : checks) {
      auto [it, fresh] = worst.try_emplace(c.name, c.margin, 0);
      if (!fresh) it->second.first = std::min(it->second.first, c.margin);
      ++it->second.second;
      auto [pit, pfresh] = pass.try_emplace(c.name, c.pass);
      if (!pfresh) pit->second = pit->second && c.pass;
      rows.push_back({{"t", t}, {"source", source}, {"name", c.name}, {"margin", c.margin}, {"pass", c.pass}});
    }
  }
  bool all_pass() const {
    return std::all_of(pass.begin(), pass.end(), [](const auto& p) { return p.second; });
  }
};

ordered_json rate_json(const std::vector<double>& t, const std::vector<double>& v, double ta, double tb) {
  try {
    const RateFit f = fit_exponential_rate(t, v, ta, tb);
    return {{"slope", f.slope}, {"r2", f.r2}, {"t_a", f.t_a}, {"t_b", f.t_b}, {"samples", f.n}, {"shrunk", f.shrunk}};
  } catch (const Error& e) {
    return {{"error", e.what()}};
  }
}

ordered_json hypothesis_json(const ExperimentConfig& cfg, double K, double M, double R0) {
  const auto& h = cfg.diagnostics.hypotheses;
  HypothesisInput in;
  in.K = K;
  in.M = M;
  in.R0 = R0;
  in.mu = h.mu.value_or(0.0);
  in.gamma = h.gamma.value_or(0.0);
  in.kappa = h.kappa.value_or(0.0);
  in.eps0 = h.eps0.value_or(0.0);
  in.gamma0 = h.gamma0.value_or(0.0);
  const HypothesisReport rep = hypothesis_check(in);
  ordered_json checks = ordered_json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name},
                      {"group", c.group},
                      {"lhs", c.lhs},
                      {"rhs", c.rhs},
                      {"margin", c.margin},
                      {"pass", c.pass},
                      {"note", c.note}});
  ordered_json groups = ordered_json::object();
  for (const char* g : {"concentration", "framework", "practical"}) groups[g] = rep.group_passes(g);
  const bool complete = h.mu && h.gamma && h.kappa && h.eps0 && h.gamma0;
  return {{"parameters_complete", complete},
          {"inputs",
           {{"K", K}, {"M", M}, {"R0", R0}, {"mu", in.mu}, {"gamma", in.gamma}, {"kappa", in.kappa},
            {"eps0", in.eps0}, {"gamma0", in.gamma0}}},
          {"groups", groups},
          {"checks", checks}};
}

std::string plot_script(const DiagnosticsConfig& d, std::size_t n_omega, bool kinetic, bool particles_file) {
  std::ostringstream s;
  s << "# gnuplot script; run from this directory: gnuplot -p plot.gp\n"
    << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set xlabel 't'\n";
  if (!kinetic) {
    s << "set multiplot layout 2,1\n"
      << "set ylabel 'r'\nplot 'trajectory.csv' using 't':'r' with lines title 'r(t)'\n"
      << "set ylabel 'V_p'\nplot 'trajectory.csv' using 't':'V_p' with lines title 'V_p(t)'\n"
      << "unset multiplot\n";
    return s.str();
  }
  s << "set multiplot layout 3,1\n"
    << "set ylabel 'R'\nplot 'trajectory.csv' using 't':'R' with lines title 'R(t)'";
  if (particles_file) s << ", 'particles.csv' using 't':'r' with lines title 'r(t), particles'";
  s << "\nset ylabel 'mass'\nplot 'trajectory.csv' using 't':'mass_Lplus_pi3' with lines title 'M(L+(pi/3))'";
  for (const auto& iv : d.intervals)
    s << ", '' using 't':'mass_" << iv.name() << "' with lines title 'M(" << iv.name() << ")'";
  s << "\nset ylabel 'L2 mass'\nset logscale y\nplot 'trajectory.csv' using 't':'lambda' with lines title 'Lambda'";
  s << ", '' using 't':'gamma_minus' with lines title 'Gamma-'";
  if (d.gamma_plus > 0.0)
    for (std::size_t k = 0; k < n_omega; ++k)
      s << ", '' using 't':'gamma_plus_" << k << "' with lines title 'Gamma+ slice " << k << "'";
  s << "\nunset logscale y\nunset multiplot\n";
  return s.str();
}

ordered_json hypotheses_to_json(const HypothesisSpec& h) {
  ordered_json j = ordered_json::object();
  if (h.mu) j["mu"] = *h.mu;
  if (h.gamma) j["gamma"] = *h.gamma;
  if (h.kappa) j["kappa"] = *h.kappa;
  if (h.eps0) j["eps0"] = *h.eps0;
  if (h.gamma0) j["gamma0"] = *h.gamma0;
  return j;
}

void check_angle_param(double v, const char* name, bool allow_off) {
  if (allow_off && v <= 0.0) return;
  if (!(v > 0.0 && v < kPi / 2.0))
    config_error(std::string("diagnostics.") + name + ": must be in (0, pi/2)" + (allow_off ? " or <= 0 to disable" : ""));
}

}  // namespace

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return model == o.model && frequency == o.frequency && initial == o.initial && K == o.K &&
         K_is_list == o.K_is_list && grid == o.grid && time == o.time && scheme == o.scheme &&
         diagnostics == o.diagnostics && characteristics == o.characteristics && seed == o.seed &&
         output == o.output;
}

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  c.base_dir = base_dir;
  c.source_text = json_text;
  check_keys(j, "", {"model", "frequency", "initial", "K", "grid", "time", "scheme", "diagnostics",
                     "characteristics", "seed", "output"});

  const std::string model = get_string(j, "", "model", "kinetic");
  if (model == "kinetic") c.model = ModelKind::kinetic;
  else if (model == "particle") c.model = ModelKind::particle;
  else if (model == "both") c.model = ModelKind::both;
  else config_error("model: expected kinetic, particle or both, got '" + model + "'");

  if (j.contains("frequency")) {
    const auto& f = j.at("frequency");
    check_keys(f, "frequency", {"type", "halfwidth", "path"});
    c.frequency.type = get_string(f, "frequency", "type", "dirac");
    c.frequency.halfwidth = get_number(f, "frequency", "halfwidth", 0.0);
    c.frequency.path = get_string(f, "frequency", "path", "");
  }
  if (j.contains("initial")) {
    const auto& f = j.at("initial");
    check_keys(f, "initial", {"type", "amplitude", "concentration", "center", "path", "particles_path"});
    c.initial.type = get_string(f, "initial", "type", c.initial.type);
    c.initial.amplitude = get_number(f, "initial", "amplitude", c.initial.amplitude);
    c.initial.concentration = get_number(f, "initial", "concentration", c.initial.concentration);
    c.initial.center = get_number(f, "initial", "center", c.initial.center);
    c.initial.path = get_string(f, "initial", "path", "");
    c.initial.particles_path = get_string(f, "initial", "particles_path", "");
  }
  if (j.contains("K")) {
    const auto& k = j.at("K");
    if (k.is_array()) {
      c.K.clear();
      c.K_is_list = true;
      for (const auto& x : k) {
        if (!x.is_number()) config_error("K: list entries must be numbers");
        c.K.push_back(x.get<double>());
      }
    } else if (k.is_number()) {
      c.K = {k.get<double>()};
    } else {
      config_error("K: expected a number or a list of numbers");
    }
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    check_keys(g, "grid", {"n_theta", "n_omega", "n_particles"});
    c.grid.n_theta = get_count(g, "grid", "n_theta", c.grid.n_theta);
    c.grid.n_omega = get_count(g, "grid", "n_omega", c.grid.n_omega);
    c.grid.n_particles = get_count(g, "grid", "n_particles", c.grid.n_particles);
  }
  if (j.contains("time")) {
    const auto& t = j.at("time");
    check_keys(t, "time", {"t_end", "sample_every", "cfl", "dt_max", "particle_dt"});
    c.time.t_end = get_number(t, "time", "t_end", c.time.t_end);
    c.time.sample_every = get_number(t, "time", "sample_every", c.time.sample_every);
    c.time.cfl = get_number(t, "time", "cfl", c.time.cfl);
    c.time.dt_max = get_number(t, "time", "dt_max", c.time.dt_max);
    c.time.particle_dt = get_number(t, "time", "particle_dt", c.time.particle_dt);
  }
  const std::string scheme = get_string(j, "", "scheme", "muscl");
  if (scheme == "muscl") c.scheme = Scheme::muscl;
  else if (scheme == "upwind") c.scheme = Scheme::upwind;
  else config_error("scheme: expected muscl or upwind, got '" + scheme + "'");

  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    check_keys(d, "diagnostics",
               {"intervals", "lambda_delta", "gamma_plus", "gamma_minus", "sandwich_gamma", "hypotheses"});
    if (d.contains("intervals")) {
      if (!d.at("intervals").is_array()) config_error("diagnostics.intervals: expected a list of strings");
      for (const auto& s : d.at("intervals")) {
        if (!s.is_string()) config_error("diagnostics.intervals: expected a list of strings");
        c.diagnostics.intervals.push_back(s.get<std::string>());
      }
    }
    c.diagnostics.lambda_delta = get_number(d, "diagnostics", "lambda_delta", c.diagnostics.lambda_delta);
    c.diagnostics.gamma_plus = get_number(d, "diagnostics", "gamma_plus", 0.0);
    c.diagnostics.gamma_minus = get_number(d, "diagnostics", "gamma_minus", 0.0);
    c.diagnostics.sandwich_gamma = get_number(d, "diagnostics", "sandwich_gamma", 0.0);
    if (d.contains("hypotheses")) {
      const auto& h = d.at("hypotheses");
      const std::string w = "diagnostics.hypotheses";
      check_keys(h, w, {"mu", "gamma", "kappa", "eps0", "gamma0"});
      c.diagnostics.hypotheses.mu = get_optional(h, w, "mu");
      c.diagnostics.hypotheses.gamma = get_optional(h, w, "gamma");
      c.diagnostics.hypotheses.kappa = get_optional(h, w, "kappa");
      c.diagnostics.hypotheses.eps0 = get_optional(h, w, "eps0");
      c.diagnostics.hypotheses.gamma0 = get_optional(h, w, "gamma0");
    }
  }
  if (j.contains("characteristics")) {
    const auto& ch = j.at("characteristics");
    check_keys(ch, "characteristics", {"starts", "count", "t0", "t1", "dt"});
    if (ch.contains("starts")) {
      for (const auto& p : ch.at("starts")) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
          config_error("characteristics.starts: expected [theta, omega] pairs");
        c.characteristics.starts.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
    }
    c.characteristics.count = get_count(ch, "characteristics", "count", 0);
    c.characteristics.t0 = get_optional(ch, "characteristics", "t0");
    c.characteristics.t1 = get_optional(ch, "characteristics", "t1");
    c.characteristics.dt = get_number(ch, "characteristics", "dt", c.characteristics.dt);
  }
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned()) config_error("seed: expected a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  c.output = get_string(j, "", "output", c.output);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["model"] = model_name(c.model);
  ordered_json f = {{"type", c.frequency.type}};
  if (c.frequency.type == "uniform" || c.frequency.halfwidth != 0.0) f["halfwidth"] = c.frequency.halfwidth;
  if (!c.frequency.path.empty()) f["path"] = c.frequency.path;
  j["frequency"] = f;
  ordered_json in = {{"type", c.initial.type},
                     {"amplitude", c.initial.amplitude},
                     {"concentration", c.initial.concentration},
                     {"center", c.initial.center}};
  if (!c.initial.path.empty()) in["path"] = c.initial.path;
  if (!c.initial.particles_path.empty()) in["particles_path"] = c.initial.particles_path;
  j["initial"] = in;
  if (c.K_is_list) j["K"] = c.K;
  else j["K"] = c.K.empty() ? 0.0 : c.K.front();
  j["grid"] = {{"n_theta", c.grid.n_theta}, {"n_omega", c.grid.n_omega}, {"n_particles", c.grid.n_particles}};
  j["time"] = {{"t_end", c.time.t_end},
               {"sample_every", c.time.sample_every},
               {"cfl", c.time.cfl},
               {"dt_max", c.time.dt_max},
               {"particle_dt", c.time.particle_dt}};
  j["scheme"] = c.scheme == Scheme::muscl ? "muscl" : "upwind";
  j["diagnostics"] = {{"intervals", c.diagnostics.intervals},
                      {"lambda_delta", c.diagnostics.lambda_delta},
                      {"gamma_plus", c.diagnostics.gamma_plus},
                      {"gamma_minus", c.diagnostics.gamma_minus},
                      {"sandwich_gamma", c.diagnostics.sandwich_gamma},
                      {"hypotheses", hypotheses_to_json(c.diagnostics.hypotheses)}};
  ordered_json ch = {{"starts", ordered_json::array()}, {"count", c.characteristics.count}, {"dt", c.characteristics.dt}};
  for (const auto& [th, om] : c.characteristics.starts) ch["starts"].push_back({th, om});
  if (c.characteristics.t0) ch["t0"] = *c.characteristics.t0;
  if (c.characteristics.t1) ch["t1"] = *c.characteristics.t1;
  j["characteristics"] = ch;
  j["seed"] = c.seed;
  j["output"] = c.output;
  return j.dump(2) + "\n";
}

void validate_config(const ExperimentConfig& c) {
  if (c.K.empty()) config_error("K: at least one value required");
  for (double k : c.K)
    if (!std::isfinite(k) || k < 0.0) config_error("K: values must be finite and >= 0");
  if (c.grid.n_theta < 16) config_error("grid.n_theta: must be >= 16, got " + std::to_string(c.grid.n_theta));
  if (c.grid.n_omega < 1) config_error("grid.n_omega: must be >= 1");
  if (runs_particles(c) && c.initial.particles_path.empty() && c.grid.n_particles < 1)
    config_error("grid.n_particles: must be >= 1");
  if (!(c.time.t_end > 0.0)) config_error("time.t_end: must be > 0");
  if (!(c.time.sample_every > 0.0) || c.time.sample_every > c.time.t_end)
    config_error("time.sample_every: must be in (0, t_end]");
  if (!(c.time.cfl > 0.0 && c.time.cfl <= 1.0)) config_error("time.cfl: must be in (0, 1]");
  if (!(c.time.dt_max > 0.0)) config_error("time.dt_max: must be > 0");
  if (!(c.time.particle_dt > 0.0)) config_error("time.particle_dt: must be > 0");

  const auto& f = c.frequency;
  if (f.type == "uniform") {
    if (!(f.halfwidth > 0.0)) config_error("frequency.halfwidth: must be > 0 for a uniform density");
  } else if (f.type == "table") {
    if (f.path.empty()) config_error("frequency.path: required for a table density");
  } else if (f.type != "dirac") {
    config_error("frequency.type: expected dirac, uniform or table, got '" + f.type + "'");
  }

  const auto& in = c.initial;
  if (in.type == "cosine") {
    if (std::abs(in.amplitude) > 0.5) config_error("initial.amplitude: |a| <= 1/2 keeps the profile nonnegative");
  } else if (in.type == "von_mises") {
    if (!(in.concentration >= 0.0 && in.concentration <= 500.0))
      config_error("initial.concentration: must be in [0, 500]");
  } else if (in.type == "csv") {
    if (in.path.empty()) config_error("initial.path: required for csv initial data");
    if (runs_particles(c) && in.particles_path.empty())
      config_error("initial.particles_path: required for particles when initial.type is csv");
  } else if (in.type != "uniform") {
    config_error("initial.type: expected cosine, von_mises, uniform or csv, got '" + in.type + "'");
  }

  for (const auto& s : c.diagnostics.intervals) {
    try {
      parse_interval(s).validate();
    } catch (const Error& e) {
      config_error("diagnostics.intervals: " + std::string(e.what()));
    }
  }
  check_angle_param(c.diagnostics.lambda_delta, "lambda_delta", true);
  check_angle_param(c.diagnostics.gamma_plus, "gamma_plus", true);
  check_angle_param(c.diagnostics.gamma_minus, "gamma_minus", true);
  check_angle_param(c.diagnostics.sandwich_gamma, "sandwich_gamma", true);

  const auto& ch = c.characteristics;
  if (!(ch.dt > 0.0)) config_error("characteristics.dt: must be > 0");
  for (const auto& t : {ch.t0, ch.t1})
    if (t && (*t < 0.0 || *t > c.time.t_end)) config_error("characteristics.t0/t1: must lie in [0, t_end]");
}

FrequencyDensity make_frequency(const ExperimentConfig& c) {
  try {
    if (c.frequency.type == "uniform") return FrequencyDensity::uniform(c.frequency.halfwidth);
    if (c.frequency.type == "table") return FrequencyDensity::load_csv(resolve(c, c.frequency.path));
    return FrequencyDensity::dirac();
  } catch (const Error& e) {
    config_error(std::string("frequency: ") + e.what());
  }
}

KineticState make_kinetic_state(const ExperimentConfig& c, const FrequencyDensity& g, double K) {
  auto nodes = g.quadrature_nodes(c.grid.n_omega);
  KineticState s = [&] {
    if (c.initial.type == "csv") return load_initial_csv(resolve(c, c.initial.path), PhaseGrid(c.grid.n_theta), nodes, K);
    const auto prof = theta_profile(c.initial);
    return KineticState::from_profile(PhaseGrid(c.grid.n_theta), nodes, K,
                                      [&prof](double th, double) { return prof(th); });
  }();
  s.set_support_bound(g.support_bound());
  return s;
}

int cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, const LogFn& log) {
  validate_config(cfg);
  if (cfg.K.size() != 1) config_error("K: simulate takes a single value; use sweep for a list");
  const double K = cfg.K.front();
  const FrequencyDensity g = make_frequency(cfg);
  const DiagnosticsConfig dcfg = diagnostics_config(cfg);
  prepare_dir(out_dir);
  echo_config(cfg, out_dir);

  ordered_json summary;
  summary["model"] = model_name(cfg.model);
  summary["K"] = K;
  summary["M"] = g.support_bound();
  summary["frequency"] = g.describe();
  summary["seed"] = cfg.seed;
  CheckTally tally;

  std::vector<DiagnosticsRecord> recs;
  if (runs_kinetic(cfg)) {
    KineticState s = make_kinetic_state(cfg, g, K);
    const double mass0 = s.total_mass();
    if (log) log("kinetic: n_theta=" + std::to_string(s.n_theta()) + " n_omega=" + std::to_string(s.n_omega()) +
                 " K=" + csv_number(K) + " t_end=" + csv_number(cfg.time.t_end));
    recs = run_with_diagnostics(s, cfg.time.t_end, cfg.time.sample_every, dcfg);
    std::string csv = header_line(record_columns(dcfg, s.n_omega()));
    for (const auto& r : recs) {
      csv += number_line(record_row(r));
      tally.add(r.t, r.checks, "kinetic");
    }
    write_text(out_dir / "trajectory.csv", csv);

    const auto& last = recs.back();
    std::vector<double> t, lam, gm;
    for (const auto& r : recs) {
      t.push_back(r.t);
      lam.push_back(r.lambda);
      gm.push_back(r.gamma_minus);
    }
    ordered_json rates = ordered_json::object();
    const double t_end = t.back();
    if (dcfg.lambda_delta > 0.0) rates["lambda_second_half"] = rate_json(t, lam, 0.5 * t_end, t_end);
    if (dcfg.gamma_minus > 0.0) rates["gamma_minus_second_half"] = rate_json(t, gm, 0.5 * t_end, t_end);
    if (dcfg.gamma_plus > 0.0) {
      ordered_json per = ordered_json::array();
      for (std::size_t k = 0; k < s.n_omega(); ++k) {
        std::vector<double> v;
        for (const auto& r : recs) v.push_back(r.gamma_plus[k]);
        per.push_back(rate_json(t, v, 0.0, t_end));
      }
      rates["gamma_plus_per_slice"] = per;
    }
    ordered_json masses = ordered_json::object();
    for (std::size_t i = 0; i < dcfg.intervals.size(); ++i) masses[dcfg.intervals[i].name()] = last.masses[i];
    masses["Lplus(pi/3)"] = last.mass_lplus_pi3;
    summary["kinetic"] = {{"final_t", last.t},
                          {"final_R", last.R},
                          {"final_phi", last.phi},
                          {"final_masses", masses},
                          {"total_mass_drift", s.total_mass() - mass0},
                          {"samples", recs.size()},
                          {"fitted_rates", rates}};
    if (K > 0.0) summary["r_infinity"] = r_infinity(g.support_bound(), K);
    summary["hypotheses"] = hypothesis_json(cfg, K, g.support_bound(), recs.front().R);
    if (log) log("kinetic: final R=" + csv_number(last.R));
  }

  if (runs_particles(cfg)) {
    ParticleState ps = make_particles(cfg, g, K);
    ps.validate();
    const auto samples = run_particles(ps, cfg.time, log);
    for (const auto& p : samples) tally.add(p.t, p.checks, "particle");
    const bool both = cfg.model == ModelKind::both;
    write_text(out_dir / (both ? "particles.csv" : "trajectory.csv"), particle_csv(samples));
    ordered_json pj = {{"N", ps.size()}, {"final_r", samples.back().r}, {"final_D", samples.back().D}};
    if (both) {
      double gap = 0.0;
      for (std::size_t i = 0; i < std::min(samples.size(), recs.size()); ++i)
        gap = std::max(gap, std::abs(samples[i].r - recs[i].R));
      pj["max_gap_to_kinetic_R"] = gap;
    } else {
      summary["hypotheses"] = hypothesis_json(cfg, K, g.support_bound(), samples.front().r);
    }
    summary["particles"] = pj;
  }

  const bool ok = tally.all_pass();
  summary["invariants"] = check_summary(tally.worst, tally.pass);
  summary["all_checks_pass"] = ok;
  write_json(out_dir / "bounds.json", {{"summary", check_summary(tally.worst, tally.pass)}, {"records", tally.rows}});
  write_json(out_dir / "summary.json", summary);
  write_text(out_dir / "plot.gp", plot_script(dcfg, cfg.grid.n_omega, runs_kinetic(cfg), cfg.model == ModelKind::both));
  if (log) {
    for (const auto& [name, p] : tally.pass)
      if (!p) log("bound check failed: " + name + " (min margin " + csv_number(tally.worst.at(name).first) + ")");
    log(std::string("simulate: ") + (ok ? "all bound checks pass" : "some bound checks failed") + ", output in " +
        out_dir.string());
  }
  return ok ? 0 : 1;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, unsigned threads,
              const LogFn& log) {
  validate_config(cfg);
  if (cfg.K.size() < 2) config_error("K: sweep needs a list of at least 2 values");
  if (cfg.model == ModelKind::particle) config_error("model: sweep runs the kinetic model");
  const FrequencyDensity g = make_frequency(cfg);
  const DiagnosticsConfig dcfg = diagnostics_config(cfg);
  prepare_dir(out_dir);
  prepare_dir(out_dir / "runs");
  echo_config(cfg, out_dir);

  struct Row {
    double K = 0.0;
    bool ok = false;
    double R = 0.0, rinf = 0.0, gap = 0.0, mass = 0.0;
    std::string error;
  };
  std::vector<Row> rows(cfg.K.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  const unsigned n_workers = std::max(1u, std::min<unsigned>(threads ? threads : std::thread::hardware_concurrency(), static_cast<unsigned>(rows.size())));
  auto worker = [&] {
#ifdef _OPENMP
    if (n_workers > 1) omp_set_num_threads(1);
#endif
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      Row& row = rows[i];
      row.K = cfg.K[i];
      try {
        KineticState s = make_kinetic_state(cfg, g, row.K);
        const auto recs = run_with_diagnostics(s, cfg.time.t_end, cfg.time.sample_every, dcfg);
        std::string csv = header_line(record_columns(dcfg, s.n_omega()));
        for (const auto& r : recs) csv += number_line(record_row(r));
        write_text(out_dir / "runs" / ("trajectory_" + std::to_string(i) + ".csv"), csv);
        row.R = recs.back().R;
        row.rinf = row.K > 0.0 ? r_infinity(g.support_bound(), row.K) : std::nan("");
        row.gap = row.R - row.rinf;
        row.mass = dcfg.intervals.empty() ? recs.back().mass_lplus_pi3 : recs.back().masses.front();
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      if (log) {
        std::lock_guard<std::mutex> lk(log_mu);
        log("sweep: K=" + csv_number(row.K) +
            (row.ok ? " final R=" + csv_number(row.R) + " gap=" + csv_number(row.gap) : " failed: " + row.error));
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<const Row*> sorted;
  for (const auto& r : rows)
    if (r.ok) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const Row* a, const Row* b) { return a->K < b->K; });
  bool r_increasing = true, mass_increasing = true, gap_finite = true;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!std::isfinite(sorted[i]->gap)) gap_finite = false;
    if (i == 0) continue;
    if (sorted[i]->R < sorted[i - 1]->R - 1e-9) r_increasing = false;
    if (sorted[i]->mass < sorted[i - 1]->mass - 1e-9) mass_increasing = false;
  }
  const bool all_ok = sorted.size() == rows.size();

  std::string csv = header_line({"K", "status", "final_R", "r_infinity", "gap", "final_mass", "error"});
  ordered_json jr = ordered_json::array();
  const std::string mass_name = dcfg.intervals.empty() ? "Lplus(pi/3)" : dcfg.intervals.front().name();
  for (const auto& r : rows) {
    csv += csv_number(r.K) + "," + (r.ok ? "ok" : "failed") + "," +
           (r.ok ? csv_number(r.R) + "," + csv_number(r.rinf) + "," + csv_number(r.gap) + "," + csv_number(r.mass)
                 : std::string(",,,")) +
           "," + csv_text(r.error) + "\r\n";
    ordered_json e = {{"K", r.K}, {"status", r.ok ? "ok" : "failed"}};
    if (r.ok) {
      e["final_R"] = r.R;
      e["r_infinity"] = r.rinf;
      e["gap"] = r.gap;
      e["final_mass"] = r.mass;
    } else {
      e["error"] = r.error;
    }
    jr.push_back(e);
  }
  write_text(out_dir / "sweep.csv", csv);
  write_json(out_dir / "sweep.json", {{"M", g.support_bound()},
                                      {"mass_interval", mass_name},
                                      {"rows", jr},
                                      {"flags",
                                       {{"all_runs_ok", all_ok},
                                        {"final_R_nondecreasing_in_K", r_increasing},
                                        {"final_mass_nondecreasing_in_K", mass_increasing},
                                        {"gap_finite", gap_finite}}}});
  if (log)
    log(std::string("sweep: final R ") + (r_increasing ? "nondecreasing" : "not monotone") + " in K; " +
        std::to_string(sorted.size()) + "/" + std::to_string(rows.size()) + " runs ok");
  return all_ok ? 0 : 1;
}

int cmd_equilibrium(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, const LogFn& log) {
  const FrequencyDensity g = make_frequency(cfg);
  for (double k : cfg.K)
    if (!(k > 0.0) || !std::isfinite(k)) config_error("K: equilibrium needs values > 0");
  prepare_dir(out_dir);
  echo_config(cfg, out_dir);
  std::string csv = header_line({"K", "found", "R", "residual", "H_at_one", "margin_sqrt_bound",
                                 "margin_support_bound", "message"});
  ordered_json rows = ordered_json::array();
  for (double K : cfg.K) {
    const EquilibriumResult e = equilibrium_R(g, K);
    csv += csv_number(K) + "," + (e.found ? "1" : "0") + "," + csv_number(e.R) + "," + csv_number(e.residual) + "," +
           csv_number(e.H_at_one) + "," + csv_number(e.margin_sqrt_bound) + "," + csv_number(e.margin_support_bound) +
           "," + csv_text(e.message) + "\r\n";
    ordered_json r = {{"K", K}, {"found", e.found}, {"H_at_one", e.H_at_one}, {"message", e.message}};
    if (e.found) {
      r["R"] = e.R;
      r["residual"] = e.residual;
      r["margin_sqrt_bound"] = e.margin_sqrt_bound;
      r["margin_support_bound"] = e.margin_support_bound;
    }
    rows.push_back(r);
    if (log)
      log("K=" + csv_number(K) + (e.found ? "  R_inf=" + csv_number(e.R) + "  residual=" + csv_number(e.residual)
                                          : "  no solution") +
          (e.message.empty() ? "" : "  (" + e.message + ")"));
  }
  write_text(out_dir / "equilibrium.csv", csv);
  write_json(out_dir / "equilibrium.json", {{"frequency", g.describe()}, {"rows", rows}});
  return 0;
}

int cmd_characteristics(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, const LogFn& log) {
  validate_config(cfg);
  if (cfg.K.size() != 1) config_error("K: characteristics takes a single value");
  if (cfg.model == ModelKind::particle) config_error("model: characteristics need the kinetic model");
  const double K = cfg.K.front();
  const FrequencyDensity g = make_frequency(cfg);
  const auto& ch = cfg.characteristics;
  if (ch.starts.empty() && ch.count == 0) config_error("characteristics: give starts or a count");
  prepare_dir(out_dir);
  echo_config(cfg, out_dir);

  KineticState s = make_kinetic_state(cfg, g, K);
  DiagnosticsConfig dcfg = diagnostics_config(cfg);
  const auto recs = run_with_diagnostics(s, cfg.time.t_end, cfg.time.sample_every, dcfg);
  OrderSeries series;
  std::string traj = header_line({"t", "R", "phi"});
  for (const auto& r : recs) {
    series.push(r.t, r.R, r.phi);
    traj += number_line({r.t, r.R, r.phi});
  }
  write_text(out_dir / "trajectory.csv", traj);

  auto starts = ch.starts;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double M = g.support_bound();
  for (std::size_t i = 0; i < ch.count; ++i) {
    const double th = kTwoPi * unit(rng);
    starts.emplace_back(th, M * (2.0 * unit(rng) - 1.0));
  }
  const double t0 = ch.t0.value_or(0.0);
  const double t1 = ch.t1.value_or(series.t.back());
  std::string csv = header_line({"id", "omega", "t", "theta", "relative_phase", "cos_relative"});
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto path = characteristic(series, K, starts[i].first, starts[i].second, t0, t1, ch.dt);
    for (std::size_t q = 0; q < path.t.size(); ++q) {
      double R;
      double phi;
      series.at(path.t[q], R, phi);
      const double rel = wrap_signed(path.theta[q] - phi);
      csv += std::to_string(i) + "," + number_line({starts[i].second, path.t[q], path.theta[q], rel, std::cos(rel)});
    }
  }
  write_text(out_dir / "characteristics.csv", csv);
  if (log) log("characteristics: " + std::to_string(starts.size()) + " paths on [" + csv_number(t0) + ", " +
               csv_number(t1) + "], output in " + out_dir.string());
  return 0;
}

int cmd_verify(const std::string& suite, const std::filesystem::path& out_dir, const LogFn& log) {
  suite_criteria(suite);
  const SuiteReport rep = run_suite(suite, [&](const CriterionResult& r) {
    if (log) log(format_result_line(r));
  });
  std::size_t passed = 0;
  ordered_json results = ordered_json::array();
  for (const auto& r : rep.results) {
    passed += r.pass ? 1 : 0;
    ordered_json m = ordered_json::object();
    for (const auto& [k, v] : r.metrics) m[k] = v;
    results.push_back(
        {{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"seconds", r.seconds}, {"detail", r.detail}, {"metrics", m}});
  }
  if (log)
    log(std::to_string(passed) + "/" + std::to_string(rep.results.size()) + " criteria passed in " +
        [&] {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.2f", rep.seconds);
          return std::string(buf);
        }() + " s");
  if (!out_dir.empty()) {
    prepare_dir(out_dir);
    write_json(out_dir / "verify.json",
               {{"suite", suite}, {"all_pass", rep.all_pass()}, {"seconds", rep.seconds}, {"results", results}});
  }
  return rep.all_pass() ? 0 : 1;
}

}  // namespace kslab
