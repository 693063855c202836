// Command-line front end; talks to the library only through kslab.h.
#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "kslab/kslab.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;

void print_line(const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

int exit_code(ks_status s) {
  if (s == KS_OK) return kExitOk;
  if (s != KS_CRITERION_FAILED) std::fprintf(stderr, "error (%s): %s\n", ks_status_name(s), ks_last_error());
  if (s == KS_ERR_CONFIG || s == KS_ERR_INVALID_ARGUMENT) return kExitConfig;
  return kExitFailed;
}

struct Options {
  std::string config;
  std::string out;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string suite = "all";
};

using Command = ks_status (*)(const ks_config*, const char*, const Options&);

int with_config(const Options& o, Command cmd) {
  ks_config* cfg = nullptr;
  ks_status s = ks_config_load(o.config.c_str(), &cfg);
  if (s != KS_OK) return exit_code(s == KS_ERR_IO ? KS_ERR_CONFIG : s);
  if (o.seed_set) ks_config_set_seed(cfg, o.seed);
  const std::string out = o.out.empty() ? ks_config_output(cfg) : o.out;
  s = cmd(cfg, out.c_str(), o);
  ks_config_free(cfg);
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kuramoto-Sakaguchi kinetic and particle experiments"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", o.config, "experiment config (JSON)");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (default: the config's output field)");
    sub->add_option("--threads", o.threads, "worker threads (0 = runtime default)");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { o.seed = v, o.seed_set = true; }, "override the config seed");
  };

  auto* simulate = app.add_subcommand("simulate", "run one kinetic and/or particle simulation");
  add_common(simulate, true);
  auto* sweep = app.add_subcommand("sweep", "one kinetic run per K in the config's K list");
  add_common(sweep, true);
  auto* verify = app.add_subcommand("verify", "run a pinned acceptance suite");
  add_common(verify, false);
  verify->add_option("--suite", o.suite, "thm31, thm32, thm33, gradient, conservation, barriers, equilibrium, all");
  auto* equilibrium = app.add_subcommand("equilibrium", "fixed points of the self-consistency map per K");
  add_common(equilibrium, true);
  auto* characteristics = app.add_subcommand("characteristics", "trace characteristics on a recorded run");
  add_common(characteristics, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  ks_set_threads(o.threads);

  if (*simulate)
    return with_config(o, [](const ks_config* c, const char* out, const Options&) {
      return ks_run_simulate(c, out, print_line, nullptr);
    });
  if (*sweep)
    return with_config(o, [](const ks_config* c, const char* out, const Options& opt) {
      return ks_run_sweep(c, out, opt.threads, print_line, nullptr);
    });
  if (*equilibrium)
    return with_config(o, [](const ks_config* c, const char* out, const Options&) {
      return ks_run_equilibrium(c, out, print_line, nullptr);
    });
  if (*characteristics)
    return with_config(o, [](const ks_config* c, const char* out, const Options&) {
      return ks_run_characteristics(c, out, print_line, nullptr);
    });
  if (*verify) {
    const ks_status s = ks_run_verify(o.suite.c_str(), o.out.empty() ? nullptr : o.out.c_str(), print_line, nullptr);
    return exit_code(s);
  }
  return kExitConfig;
}
