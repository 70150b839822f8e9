// Experiment runner: co-propagates exact and mean-field fermion dynamics and
// audits the identities, inequalities, and error bounds the library tracks.
//
//   evap simulate   --config run.ini [--out DIR] [--seed S] [--workers W]
//   evap audit      --config run.ini ...
//   evap fdll-check [--config run.ini] ...
//   evap bounds     --config run.ini ...
//
// Exit status is 0 iff every enabled assertion suite passed; failures are
// listed on stderr, one line each.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "evap/config.hpp"
#include "evap/scenarios.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* opt = cmd->add_option("--config", flags.config_path, "run configuration file");
  if (config_required) opt->required();
  cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", flags.seed, "random seed (overrides config)");
  cmd->add_option("--workers", flags.workers, "worker threads (overrides config)");
}

int run(const std::string& scenario, const CommonFlags& flags) {
  evap::RunConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = evap::RunConfig::from_file(flags.config_path);
  }
  if (!cfg.config_echo.empty() && cfg.scenario != scenario &&
      cfg.config_echo.find("scenario") != std::string::npos) {
    throw evap::Error("config requests scenario '" + cfg.scenario +
                      "' but the subcommand is '" + scenario + "'");
  }
  cfg.scenario = scenario;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
  if (flags.workers >= 1) cfg.workers = flags.workers;

  const evap::ScenarioResult result = evap::run_scenario(cfg);
  for (const std::string& f : result.output_files) {
    std::printf("wrote %s\n", f.c_str());
  }
  if (!result.failures.empty()) {
    std::fprintf(stderr, "%zu check(s) failed:\n", result.failures.size());
    for (const std::string& f : result.failures) {
      std::fprintf(stderr, "  FAIL: %s\n", f.c_str());
    }
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact-vs-TDHF fermion dynamics and certification harness"};
  app.require_subcommand(1);

  CommonFlags simulate_flags, audit_flags, fdll_flags, bounds_flags;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "co-propagate exact and TDHF dynamics, write diagnostics");
  add_common(simulate, simulate_flags, true);
  CLI::App* audit =
      app.add_subcommand("audit", "random-instance inequality suites");
  add_common(audit, audit_flags, true);
  CLI::App* fdll = app.add_subcommand(
      "fdll-check", "radial decomposition tables and reconstruction errors");
  add_common(fdll, fdll_flags, false);
  CLI::App* bounds =
      app.add_subcommand("bounds", "theorem right-hand sides over a parameter grid");
  add_common(bounds, bounds_flags, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return run("simulate", simulate_flags);
    if (audit->parsed()) return run("audit", audit_flags);
    if (fdll->parsed()) return run("fdll-check", fdll_flags);
    if (bounds->parsed()) return run("bounds", bounds_flags);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
