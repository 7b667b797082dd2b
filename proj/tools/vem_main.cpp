// Command-line driver: `vem run <problem>` and `vem validate <problem>`.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vem/run_config.hpp"
#include "vem/runner.hpp"

namespace {

struct Overrides {
  std::string problem;
  std::string config_path;
  std::optional<std::string> out;
  std::optional<int> n;
  std::optional<double> tau_max;
  std::optional<std::string> transport;
  std::optional<std::string> mode;
  std::optional<double> rel_tol;
  std::optional<double> abs_tol;
};

void add_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("problem,--problem", o.problem,
                  "example1 | example2 | cov-demo");
  cmd->add_option("--config", o.config_path, "key = value config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--n", o.n, "number of grid nodes");
  cmd->add_option("--tau-max", o.tau_max, "final variation time");
  cmd->add_option("--transport", o.transport,
                  "move nodes with a free terminal time")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--mode", o.mode, "starting field")
      ->check(CLI::IsMember({"arbitrary", "feasible-start"}));
  cmd->add_option("--rel-tol", o.rel_tol, "integrator relative tolerance");
  cmd->add_option("--abs-tol", o.abs_tol, "integrator absolute tolerance");
}

vem::RunConfig build_config(const Overrides& o) {
  std::optional<vem::ProblemKind> kind;
  if (!o.problem.empty()) {
    kind = vem::parse_problem_kind(o.problem);
    if (!kind) throw std::invalid_argument("unknown problem '" + o.problem + "'");
  }
  vem::RunConfig c;
  if (!o.config_path.empty()) {
    c = vem::load_run_config(o.config_path,
                             kind.value_or(vem::ProblemKind::kExample1));
    if (kind && *kind != c.problem) {
      throw std::invalid_argument("problem on the command line differs from " +
                                  o.config_path);
    }
  } else if (kind) {
    c = vem::RunConfig::defaults(*kind);
  } else {
    throw std::invalid_argument("no problem given (use a positional name, "
                                "--problem or --config)");
  }
  if (o.out) c.out_dir = *o.out;
  if (o.n) c.N = *o.n;
  if (o.tau_max) c.integrator.tau_max = *o.tau_max;
  if (o.transport) c.moving_grid = *o.transport == "on";
  if (o.mode) {
    c.mode = *o.mode == "arbitrary" ? vem::StartMode::kArbitrary
                                    : vem::StartMode::kFeasibleStart;
  }
  if (o.rel_tol) c.integrator.rel_tol = *o.rel_tol;
  if (o.abs_tol) c.integrator.abs_tol = *o.abs_tol;
  // Snapshots past a shortened horizon are dropped rather than rejected.
  auto& snaps = c.integrator.snapshot_times;
  std::erase_if(snaps, [&](double s) { return s > c.integrator.tau_max; });
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variation evolving solver for optimal control problems"};
  app.require_subcommand(1);

  Overrides run_opts, validate_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "solve and write CSV/JSON");
  add_flags(run_cmd, run_opts);
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "list config violations without running");
  add_flags(validate_cmd, validate_opts);

  CLI11_PARSE(app, argc, argv);

  const bool validating = validate_cmd->parsed();
  vem::RunConfig config;
  try {
    config = build_config(validating ? validate_opts : run_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  const auto violations = vem::validate(config);
  if (validating) {
    for (const auto& v : violations) std::cout << v << '\n';
    if (violations.empty()) std::cout << "ok\n";
    return violations.empty() ? 0 : 1;
  }
  if (!violations.empty()) {
    for (const auto& v : violations) std::cerr << "invalid config: " << v << '\n';
    return 1;
  }
  try {
    return vem::run(config, std::cout).exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
