#include "kslab/kslab.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <new>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kslab/common.hpp"
#include "kslab/constants.hpp"
#include "kslab/diagnostics.hpp"
#include "kslab/experiment.hpp"
#include "kslab/frequency.hpp"
#include "kslab/kinetic.hpp"
#include "kslab/order.hpp"
#include "kslab/particle.hpp"

struct ks_config {
  kslab::ExperimentConfig cfg;
};

struct ks_frequency {
  kslab::FrequencyDensity g;
};

struct ks_kinetic {
  kslab::KineticState s;
  kslab::StepOptions opt;
};

struct ks_particles {
  kslab::ParticleState p;
};

namespace {

thread_local std::string g_last_error;

ks_status status_of(kslab::ErrorCode c) {
  switch (c) {
    case kslab::ErrorCode::invalid_argument: return KS_ERR_INVALID_ARGUMENT;
    case kslab::ErrorCode::precondition: return KS_ERR_PRECONDITION;
    case kslab::ErrorCode::cfl_violation: return KS_ERR_CFL;
    case kslab::ErrorCode::numerical: return KS_ERR_NUMERICAL;
    case kslab::ErrorCode::io: return KS_ERR_IO;
    case kslab::ErrorCode::config: return KS_ERR_CONFIG;
    case kslab::ErrorCode::no_solution: return KS_ERR_NO_SOLUTION;
  }
  return KS_ERR_INTERNAL;
}

template <class F>
ks_status guard(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const kslab::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return KS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return KS_ERR_INTERNAL;
  }
}

ks_status fail(ks_status s, const char* msg) {
  g_last_error = msg;
  return s;
}

#define KS_REQUIRE(cond, msg) \
  if (!(cond)) return fail(KS_ERR_INVALID_ARGUMENT, msg)

kslab::LogFn make_log(ks_log_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const std::string& line) { fn(line.c_str(), user); };
}

ks_status run_status(int rc) { return rc == 0 ? KS_OK : KS_CRITERION_FAILED; }

}  // namespace

extern "C" {

const char* ks_version(void) { return "1.0.0"; }

const char* ks_status_name(ks_status s) {
  switch (s) {
    case KS_OK: return "ok";
    case KS_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case KS_ERR_PRECONDITION: return "precondition";
    case KS_ERR_CFL: return "cfl_violation";
    case KS_ERR_NUMERICAL: return "numerical";
    case KS_ERR_IO: return "io";
    case KS_ERR_CONFIG: return "config";
    case KS_ERR_NO_SOLUTION: return "no_solution";
    case KS_CRITERION_FAILED: return "criterion_failed";
    case KS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* ks_last_error(void) { return g_last_error.c_str(); }

ks_status ks_config_load(const char* path, ks_config** out) {
  KS_REQUIRE(path && out, "ks_config_load: null argument");
  *out = nullptr;
  return guard([&] {
    *out = new ks_config{kslab::load_config(path)};
    return KS_OK;
  });
}

ks_status ks_config_parse(const char* json_text, const char* base_dir, ks_config** out) {
  KS_REQUIRE(json_text && out, "ks_config_parse: null argument");
  *out = nullptr;
  return guard([&] {
    *out = new ks_config{kslab::parse_config(json_text, base_dir ? base_dir : "")};
    return KS_OK;
  });
}

void ks_config_free(ks_config* cfg) { delete cfg; }

ks_status ks_config_validate(const ks_config* cfg) {
  KS_REQUIRE(cfg, "ks_config_validate: null config");
  return guard([&] {
    kslab::validate_config(cfg->cfg);
    return KS_OK;
  });
}

ks_status ks_config_set_seed(ks_config* cfg, uint64_t seed) {
  KS_REQUIRE(cfg, "ks_config_set_seed: null config");
  cfg->cfg.seed = seed;
  return KS_OK;
}

const char* ks_config_output(const ks_config* cfg) {
  if (!cfg) return "";
  return cfg->cfg.output.c_str();
}

ks_status ks_config_to_json(const ks_config* cfg, char* buf, size_t cap, size_t* needed) {
  KS_REQUIRE(cfg, "ks_config_to_json: null config");
  return guard([&] {
    const std::string s = kslab::config_to_json(cfg->cfg);
    if (needed) *needed = s.size();
    if (buf && cap > 0) {
      const size_t n = std::min(cap - 1, s.size());
      s.copy(buf, n);
      buf[n] = '\0';
    }
    return KS_OK;
  });
}

ks_status ks_run_simulate(const ks_config* cfg, const char* out_dir, ks_log_fn log, void* user) {
  KS_REQUIRE(cfg && out_dir, "ks_run_simulate: null argument");
  return guard([&] { return run_status(kslab::cmd_simulate(cfg->cfg, out_dir, make_log(log, user))); });
}

ks_status ks_run_sweep(const ks_config* cfg, const char* out_dir, unsigned threads, ks_log_fn log, void* user) {
  KS_REQUIRE(cfg && out_dir, "ks_run_sweep: null argument");
  return guard([&] { return run_status(kslab::cmd_sweep(cfg->cfg, out_dir, threads, make_log(log, user))); });
}

ks_status ks_run_equilibrium(const ks_config* cfg, const char* out_dir, ks_log_fn log, void* user) {
  KS_REQUIRE(cfg && out_dir, "ks_run_equilibrium: null argument");
  return guard([&] { return run_status(kslab::cmd_equilibrium(cfg->cfg, out_dir, make_log(log, user))); });
}

ks_status ks_run_characteristics(const ks_config* cfg, const char* out_dir, ks_log_fn log, void* user) {
  KS_REQUIRE(cfg && out_dir, "ks_run_characteristics: null argument");
  return guard([&] { return run_status(kslab::cmd_characteristics(cfg->cfg, out_dir, make_log(log, user))); });
}

ks_status ks_run_verify(const char* suite, const char* out_dir, ks_log_fn log, void* user) {
  KS_REQUIRE(suite, "ks_run_verify: null suite");
  return guard([&] {
    return run_status(kslab::cmd_verify(suite, out_dir ? out_dir : "", make_log(log, user)));
  });
}

ks_status ks_set_threads(unsigned threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(static_cast<int>(threads));
#else
  (void)threads;
#endif
  return KS_OK;
}

ks_status ks_frequency_dirac(ks_frequency** out) {
  KS_REQUIRE(out, "ks_frequency_dirac: null argument");
  *out = nullptr;
  return guard([&] {
    *out = new ks_frequency{kslab::FrequencyDensity::dirac()};
    return KS_OK;
  });
}

ks_status ks_frequency_uniform(double halfwidth, ks_frequency** out) {
  KS_REQUIRE(out, "ks_frequency_uniform: null argument");
  *out = nullptr;
  return guard([&] {
    *out = new ks_frequency{kslab::FrequencyDensity::uniform(halfwidth)};
    return KS_OK;
  });
}

ks_status ks_frequency_table(const double* omegas, const double* densities, size_t n, ks_frequency** out) {
  KS_REQUIRE(omegas && densities && out, "ks_frequency_table: null argument");
  *out = nullptr;
  return guard([&] {
    *out = new ks_frequency{kslab::FrequencyDensity::table({omegas, omegas + n}, {densities, densities + n})};
    return KS_OK;
  });
}

void ks_frequency_free(ks_frequency* g) { delete g; }

ks_status ks_frequency_support_bound(const ks_frequency* g, double* M) {
  KS_REQUIRE(g && M, "ks_frequency_support_bound: null argument");
  *M = g->g.support_bound();
  return KS_OK;
}

ks_status ks_kinetic_create_cosine(const ks_frequency* g, size_t n_theta, size_t n_omega, double K, double amplitude,
                                   ks_kinetic** out) {
  KS_REQUIRE(g && out, "ks_kinetic_create_cosine: null argument");
  *out = nullptr;
  return guard([&] {
    if (!(std::abs(amplitude) <= 0.5))
      throw kslab::Error(kslab::ErrorCode::invalid_argument, "amplitude must satisfy |a| <= 1/2");
    auto s = kslab::KineticState::from_profile(kslab::PhaseGrid(n_theta), g->g.quadrature_nodes(n_omega), K,
                                               [amplitude](double th, double) {
                                                 return (1.0 + 2.0 * amplitude * std::cos(th)) / kslab::kTwoPi;
                                               });
    s.set_support_bound(g->g.support_bound());
    *out = new ks_kinetic{std::move(s), {}};
    return KS_OK;
  });
}

void ks_kinetic_free(ks_kinetic* s) { delete s; }

ks_status ks_kinetic_set_scheme(ks_kinetic* s, int scheme, double cfl) {
  KS_REQUIRE(s, "ks_kinetic_set_scheme: null state");
  KS_REQUIRE(scheme == 0 || scheme == 1, "ks_kinetic_set_scheme: scheme must be 0 (upwind) or 1 (MUSCL)");
  KS_REQUIRE(cfl > 0.0 && cfl <= 1.0, "ks_kinetic_set_scheme: cfl must be in (0, 1]");
  s->opt.scheme = scheme == 0 ? kslab::Scheme::upwind : kslab::Scheme::muscl;
  s->opt.cfl = cfl;
  return KS_OK;
}

ks_status ks_kinetic_step(ks_kinetic* s, double dt) {
  KS_REQUIRE(s, "ks_kinetic_step: null state");
  return guard([&] {
    kslab::step(s->s, dt, s->opt.scheme);
    return KS_OK;
  });
}

ks_status ks_kinetic_advance(ks_kinetic* s, double t_end) {
  KS_REQUIRE(s, "ks_kinetic_advance: null state");
  return guard([&] {
    if (t_end > s->s.t()) kslab::run(s->s, t_end, t_end - s->s.t(), s->opt, {});
    else if (t_end < s->s.t())
      throw kslab::Error(kslab::ErrorCode::invalid_argument, "t_end precedes the state time");
    return KS_OK;
  });
}

ks_status ks_kinetic_cfl_dt(const ks_kinetic* s, double* dt) {
  KS_REQUIRE(s && dt, "ks_kinetic_cfl_dt: null argument");
  return guard([&] {
    *dt = kslab::cfl_dt(s->s, s->opt.cfl, s->opt.dt_max);
    return KS_OK;
  });
}

ks_status ks_kinetic_order(const ks_kinetic* s, double* R, double* phi) {
  KS_REQUIRE(s && R && phi, "ks_kinetic_order: null argument");
  return guard([&] {
    const auto op = kslab::global_order(s->s);
    *R = op.R;
    *phi = op.phi;
    return KS_OK;
  });
}

ks_status ks_kinetic_time(const ks_kinetic* s, double* t) {
  KS_REQUIRE(s && t, "ks_kinetic_time: null argument");
  *t = s->s.t();
  return KS_OK;
}

ks_status ks_kinetic_total_mass(const ks_kinetic* s, double* mass) {
  KS_REQUIRE(s && mass, "ks_kinetic_total_mass: null argument");
  *mass = s->s.total_mass();
  return KS_OK;
}

ks_status ks_kinetic_interval_mass(const ks_kinetic* s, const char* interval, double* mass) {
  KS_REQUIRE(s && interval && mass, "ks_kinetic_interval_mass: null argument");
  return guard([&] {
    const auto iv = kslab::parse_interval(interval);
    iv.validate();
    *mass = kslab::interval_mass(s->s, iv);
    return KS_OK;
  });
}

ks_status ks_particles_create(const double* thetas, const double* omegas, size_t n, double K, ks_particles** out) {
  KS_REQUIRE(thetas && omegas && out, "ks_particles_create: null argument");
  *out = nullptr;
  return guard([&] {
    kslab::ParticleState p;
    p.thetas.assign(thetas, thetas + n);
    p.omegas.assign(omegas, omegas + n);
    p.K = K;
    p.validate();
    *out = new ks_particles{std::move(p)};
    return KS_OK;
  });
}

void ks_particles_free(ks_particles* p) { delete p; }

ks_status ks_particles_step(ks_particles* p, double dt) {
  KS_REQUIRE(p, "ks_particles_step: null state");
  KS_REQUIRE(std::isfinite(dt), "ks_particles_step: dt must be finite");
  return guard([&] {
    kslab::particle_step(p->p, dt);
    return KS_OK;
  });
}

ks_status ks_particles_order(const ks_particles* p, double* r, double* phi) {
  KS_REQUIRE(p && r && phi, "ks_particles_order: null argument");
  const auto op = kslab::particle_order(p->p);
  *r = op.R;
  *phi = op.phi;
  return KS_OK;
}

ks_status ks_particles_potential(const ks_particles* p, double* V) {
  KS_REQUIRE(p && V, "ks_particles_potential: null argument");
  *V = kslab::particle_potential(p->p);
  return KS_OK;
}

ks_status ks_particles_thetas(const ks_particles* p, double* out, size_t n) {
  KS_REQUIRE(p && out, "ks_particles_thetas: null argument");
  KS_REQUIRE(n >= p->p.size(), "ks_particles_thetas: buffer too small");
  std::copy(p->p.thetas.begin(), p->p.thetas.end(), out);
  return KS_OK;
}

ks_status ks_r_infinity(double M, double K, double* out) {
  KS_REQUIRE(out, "ks_r_infinity: null argument");
  return guard([&] {
    *out = kslab::r_infinity(M, K);
    return KS_OK;
  });
}

ks_status ks_mstar(double eps0, double gamma0, double* out) {
  KS_REQUIRE(out, "ks_mstar: null argument");
  return guard([&] {
    *out = kslab::mstar(eps0, gamma0);
    return KS_OK;
  });
}

ks_status ks_equilibrium(const ks_frequency* g, double K, int* found, double* R) {
  KS_REQUIRE(g && found && R, "ks_equilibrium: null argument");
  return guard([&] {
    const auto e = kslab::equilibrium_R(g->g, K);
    *found = e.found ? 1 : 0;
    *R = e.R;
    return KS_OK;
  });
}

}  // extern "C"
