/* C interface to the kslab library. All functions return a ks_status;
 * on failure ks_last_error() describes the error of the calling thread.
 * Handles are opaque and owned by the caller; free them with the matching
 * *_free function (NULL is accepted). */
#ifndef KSLAB_H
#define KSLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define KS_API __declspec(dllexport)
#else
#define KS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ks_status {
  KS_OK = 0,
  KS_ERR_INVALID_ARGUMENT = 1,
  KS_ERR_PRECONDITION = 2,
  KS_ERR_CFL = 3,
  KS_ERR_NUMERICAL = 4,
  KS_ERR_IO = 5,
  KS_ERR_CONFIG = 6,
  KS_ERR_NO_SOLUTION = 7,
  /* a run completed but a bound check or acceptance criterion failed */
  KS_CRITERION_FAILED = 20,
  KS_ERR_INTERNAL = 99
} ks_status;

typedef void (*ks_log_fn)(const char* line, void* user);

KS_API const char* ks_version(void);
KS_API const char* ks_status_name(ks_status s);
/* Message of the last failed call on this thread, "" if none. */
KS_API const char* ks_last_error(void);

/* ---- experiment configs and commands ---- */

typedef struct ks_config ks_config;

KS_API ks_status ks_config_load(const char* path, ks_config** out);
/* base_dir resolves relative paths inside the config; may be NULL. */
KS_API ks_status ks_config_parse(const char* json_text, const char* base_dir, ks_config** out);
KS_API void ks_config_free(ks_config* cfg);
KS_API ks_status ks_config_validate(const ks_config* cfg);
KS_API ks_status ks_config_set_seed(ks_config* cfg, uint64_t seed);
/* Output directory named in the config. */
KS_API const char* ks_config_output(const ks_config* cfg);
/* Canonical JSON. Writes at most cap bytes including the terminator and
 * stores the full length (without terminator) in *needed when non-NULL. */
KS_API ks_status ks_config_to_json(const ks_config* cfg, char* buf, size_t cap, size_t* needed);

KS_API ks_status ks_run_simulate(const ks_config* cfg, const char* out_dir, ks_log_fn log, void* user);
KS_API ks_status ks_run_sweep(const ks_config* cfg, const char* out_dir, unsigned threads, ks_log_fn log,
                              void* user);
KS_API ks_status ks_run_equilibrium(const ks_config* cfg, const char* out_dir, ks_log_fn log, void* user);
KS_API ks_status ks_run_characteristics(const ks_config* cfg, const char* out_dir, ks_log_fn log, void* user);
/* out_dir may be NULL to skip verify.json. */
KS_API ks_status ks_run_verify(const char* suite, const char* out_dir, ks_log_fn log, void* user);
/* Caps OpenMP threads for later runs; 0 keeps the runtime default. */
KS_API ks_status ks_set_threads(unsigned threads);

/* ---- frequency densities ---- */

typedef struct ks_frequency ks_frequency;

KS_API ks_status ks_frequency_dirac(ks_frequency** out);
KS_API ks_status ks_frequency_uniform(double halfwidth, ks_frequency** out);
KS_API ks_status ks_frequency_table(const double* omegas, const double* densities, size_t n, ks_frequency** out);
KS_API void ks_frequency_free(ks_frequency* g);
KS_API ks_status ks_frequency_support_bound(const ks_frequency* g, double* M);

/* ---- kinetic solver ---- */

typedef struct ks_kinetic ks_kinetic;

/* Cell averages of (1 + 2a cos theta)/2pi on every frequency slice. */
KS_API ks_status ks_kinetic_create_cosine(const ks_frequency* g, size_t n_theta, size_t n_omega, double K,
                                          double amplitude, ks_kinetic** out);
KS_API void ks_kinetic_free(ks_kinetic* s);
/* 0 = upwind, 1 = MUSCL. */
KS_API ks_status ks_kinetic_set_scheme(ks_kinetic* s, int scheme, double cfl);
KS_API ks_status ks_kinetic_step(ks_kinetic* s, double dt);
KS_API ks_status ks_kinetic_advance(ks_kinetic* s, double t_end);
KS_API ks_status ks_kinetic_cfl_dt(const ks_kinetic* s, double* dt);
KS_API ks_status ks_kinetic_order(const ks_kinetic* s, double* R, double* phi);
KS_API ks_status ks_kinetic_time(const ks_kinetic* s, double* t);
KS_API ks_status ks_kinetic_total_mass(const ks_kinetic* s, double* mass);
/* Mass of the moving arc named like "Iplus(0.2)" or "Lplus(1.1)". */
KS_API ks_status ks_kinetic_interval_mass(const ks_kinetic* s, const char* interval, double* mass);

/* ---- finite-N Kuramoto ---- */

typedef struct ks_particles ks_particles;

KS_API ks_status ks_particles_create(const double* thetas, const double* omegas, size_t n, double K,
                                     ks_particles** out);
KS_API void ks_particles_free(ks_particles* p);
KS_API ks_status ks_particles_step(ks_particles* p, double dt);
KS_API ks_status ks_particles_order(const ks_particles* p, double* r, double* phi);
KS_API ks_status ks_particles_potential(const ks_particles* p, double* V);
KS_API ks_status ks_particles_thetas(const ks_particles* p, double* out, size_t n);

/* ---- closed-form constants ---- */

KS_API ks_status ks_r_infinity(double M, double K, double* out);
KS_API ks_status ks_mstar(double eps0, double gamma0, double* out);
/* *found is 0 when no fixed point exists; *R is then unspecified. */
KS_API ks_status ks_equilibrium(const ks_frequency* g, double K, int* found, double* R);

#ifdef __cplusplus
}
#endif

#endif
