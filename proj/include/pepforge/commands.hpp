#pragma once

// Library side of the `pep` command-line tool. Each command returns a process
// exit code; the run_* helpers return the underlying rows so tests can assert
// on them without going through files.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pepforge/recover.hpp"
#include "pepforge/scenario.hpp"
#include "pepforge/sdp.hpp"

namespace pepforge {

/// Solve, and (when optimal) recover and verify the worst-case instance.
struct PepResult {
  sdp::SdpSolution solution;
  std::optional<WorstCaseInstance> instance;
  std::optional<VerificationReport> report;
  Certification certification = Certification::numerical_failure;
  std::string reason;

  double value() const { return solution.value(); }
  bool optimal() const { return solution.status == sdp::Status::optimal; }
};

sdp::SolveOptions solve_options(const Tolerances& tol);

PepResult solve_pep(const PepProblem& p, const Tolerances& tol, bool recover = true);

struct HSweepRow {
  double h = 0.0;
  double classical_bound = 0.0;
  std::optional<PepResult> relaxed, tight;
};

struct LambdaSweepRow {
  double lambda = 0.0;
  PepResult spectral;
  std::optional<PepResult> fixed;  // absent when the supplied W is invalid at this lambda
  std::string fixed_note;
  double recovery_residual = -1.0;  // -1 when no recovery was attempted
  // Fixed-matrix PEP re-solved with the matrix recovered from the spectral
  // worst case; present only at certified points.
  std::optional<PepResult> recovered_fixed;
};

struct RegionCell {
  double g2 = 0.0, f2 = 0.0;
  bool relaxed = false, tight = false;
};

/// Grid points are solved on `jobs` threads; results are independent of jobs.
std::vector<HSweepRow> run_h_sweep(const Scenario& s, int jobs = 1);
std::vector<LambdaSweepRow> run_lambda_sweep(const Scenario& s, int jobs = 1);
std::vector<RegionCell> run_region(const Scenario& s);

/// Closed-form feasibility of the two-point data under the discretized
/// (relaxed) and exact smooth convex conditions.
RegionCell classify_region_point(const RegionSpec& r, double g2, double f2, double tol = 1e-9);

void write_h_sweep_csv(std::ostream& os, const std::vector<HSweepRow>& rows);
void write_lambda_sweep_csv(std::ostream& os, const std::vector<LambdaSweepRow>& rows);
void write_region_csv(std::ostream& os, const std::vector<RegionCell>& cells);

/// Formats with 12 significant digits.
std::string format_number(double v);

struct CommandOptions {
  std::optional<std::string> out;
  std::optional<double> tol_gap;
  std::optional<double> tol_feas;
  int jobs = 1;
};

int cmd_solve(const std::string& scenario_path, const CommandOptions& opts, std::ostream& out, std::ostream& log);
int cmd_sweep(const std::string& scenario_path, const CommandOptions& opts, std::ostream& out, std::ostream& log);
int cmd_region(const std::string& scenario_path, const CommandOptions& opts, std::ostream& out, std::ostream& log);
int cmd_verify(const std::string& record_path, const CommandOptions& opts, std::ostream& out, std::ostream& log);
int cmd_export_sdp(const std::string& scenario_path, const CommandOptions& opts, std::ostream& out, std::ostream& log);

}  // namespace pepforge
