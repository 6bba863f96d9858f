#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>

#include "phifix/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fixed point solver and measure-of-noncompactness toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  phifix::cli::GlobalOptions opts;
  app.add_option("--out", opts.out_dir, "directory for reports and CSV output");

  std::string verify_path;
  CLI::App* verify = app.add_subcommand("verify", "check the solvability hypotheses");
  verify->add_option("spec", verify_path, "spec file (JSON)")->required();

  std::string solve_path;
  bool force = false;
  CLI::App* solve = app.add_subcommand("solve", "verify, then run the damped iteration");
  solve->add_option("spec", solve_path, "spec file (JSON)")->required();
  solve->add_flag("--force", force, "skip verification and solve anyway (certificate 'none')");

  std::string mnc_path;
  int suite_cases = 0;
  std::uint64_t mnc_seed = 2024;
  CLI::App* mnc = app.add_subcommand("mnc", "evaluate set descriptors or run the axiom suite");
  mnc->add_option("spec", mnc_path, "spec file with an 'mnc' block");
  mnc->add_option("--suite", suite_cases, "run this many random property cases instead");
  mnc->add_option("--seed", mnc_seed, "seed for --suite");

  int steps = 100;
  std::uint64_t ce_seed = 2024;
  CLI::App* ce = app.add_subcommand("counterexample", "shift-on-the-simplex demonstration");
  ce->add_option("--steps", steps, "iteration steps for the orbit residuals");
  ce->add_option("--seed", ce_seed, "seed for the sampled checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  using namespace phifix::cli;
  if (*verify) return run_guarded([&] { return cmd_verify(verify_path, opts); });
  if (*solve) return run_guarded([&] { return cmd_solve(solve_path, force, opts); });
  if (*mnc) {
    if (suite_cases > 0)
      return run_guarded([&] { return cmd_mnc_suite(suite_cases, mnc_seed, opts); });
    if (mnc_path.empty()) {
      std::fprintf(stderr, "input error: mnc needs a spec file or --suite N\n");
      return 2;
    }
    return run_guarded([&] { return cmd_mnc_file(mnc_path, opts); });
  }
  return run_guarded([&] { return cmd_counterexample(steps, ce_seed, opts); });
}
