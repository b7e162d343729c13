#include <iostream>

#include "CLI11.hpp"
#include "pepforge/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pep: worst-case analysis of first-order methods via performance estimation"};
  app.require_subcommand(1);

  pepforge::CommandOptions opts;
  double tol_gap = 0.0, tol_feas = 0.0;
  std::string path;

  auto add_common = [&](CLI::App* sub, const char* what) {
    sub->add_option("file", path, what)->required();
    sub->add_option("--out", opts.out, "output path (default: scenario output section, else stdout)");
    sub->add_option("--tol-gap", tol_gap, "relative duality-gap tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--tol-feas", tol_feas, "relative feasibility tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", opts.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
  };

  auto* solve = app.add_subcommand("solve", "solve one scenario and verify its worst case");
  auto* sweep = app.add_subcommand("sweep", "step-size or spectral-gap sweep to CSV");
  auto* region = app.add_subcommand("region", "two-point interpolation region scan to CSV");
  auto* verify = app.add_subcommand("verify", "re-verify a result record and its instance file");
  auto* exp = app.add_subcommand("export-sdp", "write the compiled SDP in SDPA sparse format");
  add_common(solve, "scenario file");
  add_common(sweep, "scenario file");
  add_common(region, "scenario file");
  add_common(verify, "result record (JSON)");
  add_common(exp, "scenario file");

  CLI11_PARSE(app, argc, argv);
  if (tol_gap > 0.0) opts.tol_gap = tol_gap;
  if (tol_feas > 0.0) opts.tol_feas = tol_feas;

  try {
    if (*solve) return pepforge::cmd_solve(path, opts, std::cout, std::cerr);
    if (*sweep) return pepforge::cmd_sweep(path, opts, std::cout, std::cerr);
    if (*region) return pepforge::cmd_region(path, opts, std::cout, std::cerr);
    if (*verify) return pepforge::cmd_verify(path, opts, std::cout, std::cerr);
    if (*exp) return pepforge::cmd_export_sdp(path, opts, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "pep: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
