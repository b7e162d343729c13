#include "pepforge/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace pepforge {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

// JSON numbers carry the same 12 significant digits as the CSV files.
json num(double v) {
  if (!std::isfinite(v)) return format_number(v);
  return std::stod(format_number(v));
}

}  // namespace

sdp::SolveOptions solve_options(const Tolerances& tol) {
  sdp::SolveOptions o;
  o.gap_tol = tol.gap;
  o.feas_tol = tol.feas;
  o.max_iter = tol.max_iter;
  return o;
}

PepResult solve_pep(const PepProblem& p, const Tolerances& tol, bool recover) {
  PepResult r;
  const sdp::CompiledSdp compiled = sdp::compile(p.problem);
  r.solution = sdp::solve(compiled.sdp, solve_options(tol));
  if (!r.optimal()) {
    r.certification = Certification::numerical_failure;
    r.reason = "solver stopped with status " + sdp::to_string(r.solution.status);
    return r;
  }
  bool exact = true;
  for (const auto& rec : p.records) exact = exact && rec.exact;
  if (!recover) {
    r.certification = Certification::upper_bound_only;
    r.reason = exact ? "upper bound only: instance not verified" : "upper bound only: relaxation in use";
    return r;
  }
  // A low-rank factor is tried first; if truncation costs too much accuracy
  // the full-rank factor (still a valid instance, just in more dimensions) is
  // used instead.
  for (double rank_tol : {tol.rank, 1e-14}) {
    try {
      WorstCaseInstance inst = recover_instance(p.problem, compiled, r.solution, rank_tol);
      VerificationReport rep = verify_instance(inst, p, tol.verify, tol.network);
      const bool better = !r.report || rep.certification != Certification::numerical_failure;
      if (better) {
        r.instance = std::move(inst);
        r.report = std::move(rep);
      }
    } catch (const RecoveryError& e) {
      if (!r.report) r.reason = e.what();
    }
    if (r.report && r.report->certification != Certification::numerical_failure) break;
  }
  if (r.report) {
    r.certification = r.report->certification;
    r.reason = r.report->reason;
  } else {
    r.certification = Certification::numerical_failure;
  }
  return r;
}

// --------------------------------------------------------------------- sweeps

namespace {

template <class F>
void parallel_for(std::size_t n, int jobs, F&& body) {
  const int threads = std::max(1, jobs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long k = 0; k < static_cast<long>(n); ++k) body(static_cast<std::size_t>(k));
}

PepResult failed(const std::string& why) {
  PepResult r;
  r.certification = Certification::numerical_failure;
  r.reason = why;
  return r;
}

}  // namespace

std::vector<HSweepRow> run_h_sweep(const Scenario& s, int jobs) {
  if (s.kind != MethodKind::gradient) throw ScenarioError("h sweeps need a gradient method");
  const std::vector<double> grid = s.sweep.grid();
  std::vector<HSweepRow> rows(grid.size());
  const double L = s.gradient.family.L;
  bool want_relaxed = false, want_tight = false;
  for (Representation r : s.representations) (r == Representation::tight ? want_tight : want_relaxed) = true;

  parallel_for(grid.size(), jobs, [&](std::size_t k) {
    HSweepRow& row = rows[k];
    row.h = grid[k];
    row.classical_bound = classical_bound(s.gradient.N, row.h, L, s.gradient.R);
    MethodSpec spec = s.gradient;
    spec.steps = {row.h / L};
    auto run = [&](Representation rep) {
      try {
        return solve_pep(build_gradient_method(spec, rep), s.tol, rep == Representation::tight);
      } catch (const std::exception& e) {
        return failed(e.what());
      }
    };
    if (want_relaxed) row.relaxed = run(Representation::relaxed);
    if (want_tight) row.tight = run(Representation::tight);
  });
  return rows;
}

std::vector<LambdaSweepRow> run_lambda_sweep(const Scenario& s, int jobs) {
  if (s.kind != MethodKind::dgd) throw ScenarioError("lambda sweeps need a dgd method");
  const std::vector<double> grid = s.sweep.grid();
  std::vector<LambdaSweepRow> rows(grid.size());
  parallel_for(grid.size(), jobs, [&](std::size_t k) {
    LambdaSweepRow& row = rows[k];
    row.lambda = grid[k];
    DgdSpec spec = s.dgd;
    spec.lam = row.lambda;
    try {
      row.spectral = solve_pep(build_dgd_spectral(spec), s.tol, true);
      if (row.spectral.report && row.spectral.report->network)
        row.recovery_residual = row.spectral.report->network->residual;
    } catch (const std::exception& e) {
      row.spectral = failed(e.what());
    }
    if (row.spectral.certification == Certification::certified_tight && row.spectral.report->network) {
      try {
        const Eigen::MatrixXd Wr = project_network_matrix(row.spectral.report->network->W, row.lambda);
        row.recovered_fixed = solve_pep(build_dgd_fixed_matrix(spec, Wr), s.tol, false);
      } catch (const std::exception& e) {
        row.recovered_fixed = failed(e.what());
      }
    }
    const Eigen::MatrixXd W = s.network_matrix ? *s.network_matrix : default_network_matrix(spec.agents, row.lambda);
    PepProblem fixed;
    try {
      fixed = build_dgd_fixed_matrix(spec, W);
    } catch (const ModelError& e) {
      row.fixed_note = "invalid-matrix";
      return;
    }
    try {
      row.fixed = solve_pep(fixed, s.tol, true);
    } catch (const std::exception& e) {
      row.fixed = failed(e.what());
    }
  });
  return rows;
}

RegionCell classify_region_point(const RegionSpec& r, double g2, double f2, double tol) {
  std::vector<NumericTriple> data(2);
  data[0] = {Eigen::VectorXd::Constant(1, r.x1), Eigen::VectorXd::Constant(1, r.g1), r.f1, "1"};
  data[1] = {Eigen::VectorXd::Constant(1, r.x2), Eigen::VectorXd::Constant(1, g2), f2, "2"};
  RegionCell c;
  c.g2 = g2;
  c.f2 = f2;
  c.relaxed = check_numeric(data, ClassSpec::relaxed_smooth_convex(r.L), tol).feasible;
  c.tight = check_numeric(data, ClassSpec::smooth_convex(r.L), tol).feasible;
  return c;
}

std::vector<RegionCell> run_region(const Scenario& s) {
  if (s.kind != MethodKind::region) throw ScenarioError("region scans need method type region");
  std::vector<RegionCell> out;
  const std::vector<double> gs = s.sweep.grid(), fs = s.sweep.f_grid();
  out.reserve(gs.size() * fs.size());
  for (double g2 : gs)
    for (double f2 : fs) out.push_back(classify_region_point(s.region, g2, f2));
  return out;
}

// ------------------------------------------------------------------------ CSV

namespace {

std::string status_of(const std::optional<PepResult>& r) {
  return r ? sdp::to_string(r->solution.status) : "";
}

std::string value_of(const std::optional<PepResult>& r) {
  return r ? format_number(r->value()) : "";
}

}  // namespace

void write_h_sweep_csv(std::ostream& os, const std::vector<HSweepRow>& rows) {
  os << "# pep-forge schema v1\n";
  os << "h,classical_bound,relaxed_value,relaxed_status,tight_value,tight_status,tight_certification\n";
  for (const auto& r : rows) {
    os << format_number(r.h) << ',' << format_number(r.classical_bound) << ',' << value_of(r.relaxed) << ','
       << status_of(r.relaxed) << ',' << value_of(r.tight) << ',' << status_of(r.tight) << ','
       << (r.tight ? to_string(r.tight->certification) : "") << "\n";
  }
}

void write_lambda_sweep_csv(std::ostream& os, const std::vector<LambdaSweepRow>& rows) {
  os << "# pep-forge schema v1\n";
  os << "lambda,spectral_value,spectral_status,spectral_certification,fixed_value,fixed_status,recovery_residual,"
        "recovered_fixed_value\n";
  for (const auto& r : rows) {
    os << format_number(r.lambda) << ',' << format_number(r.spectral.value()) << ','
       << sdp::to_string(r.spectral.solution.status) << ',' << to_string(r.spectral.certification) << ','
       << value_of(r.fixed) << ',' << (r.fixed ? status_of(r.fixed) : r.fixed_note) << ','
       << (r.recovery_residual >= 0.0 ? format_number(r.recovery_residual) : "") << ',' << value_of(r.recovered_fixed)
       << "\n";
  }
}

void write_region_csv(std::ostream& os, const std::vector<RegionCell>& cells) {
  os << "# pep-forge schema v1\n";
  os << "g2,f2,relaxed,tight\n";
  for (const auto& c : cells)
    os << format_number(c.g2) << ',' << format_number(c.f2) << ',' << (c.relaxed ? 1 : 0) << ',' << (c.tight ? 1 : 0)
       << "\n";
}

// ------------------------------------------------------------------- commands

namespace {

Scenario load_with_overrides(const std::string& path, const CommandOptions& opts) {
  Scenario s = load_scenario(path);
  if (opts.tol_gap) s.tol.gap = *opts.tol_gap;
  if (opts.tol_feas) s.tol.feas = *opts.tol_feas;
  return s;
}

// Writes through `fn` to `path`, or to `fallback` when path is empty.
template <class F>
void emit(const std::string& path, std::ostream& fallback, F&& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  std::ofstream f(path);
  if (!f) throw ScenarioError("cannot write '" + path + "'");
  fn(f);
}

Representation single_representation(const Scenario& s) {
  // "both" solves the tight problem; the relaxed one only matters in sweeps.
  for (Representation r : s.representations)
    if (r == Representation::tight) return r;
  return s.representations.front();
}

json metadata_json(const PepProblem& p) {
  json m = json::object();
  for (const auto& [k, v] : p.metadata) m[k] = v;
  return m;
}

json verification_json(const VerificationReport& rep) {
  json j;
  j["certification"] = to_string(rep.certification);
  j["reason"] = rep.reason;
  j["max_residual"] = num(rep.max_residual);
  j["objective_error"] = num(rep.objective_error);
  j["tolerance"] = num(rep.tolerance);
  if (rep.network) {
    json n;
    n["success"] = rep.network->success;
    n["underdetermined"] = rep.network->underdetermined;
    n["residual"] = num(rep.network->residual);
    n["message"] = rep.network->message;
    json W = json::array();
    for (Eigen::Index r = 0; r < rep.network->W.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < rep.network->W.cols(); ++c) row.push_back(num(rep.network->W(r, c)));
      W.push_back(row);
    }
    n["W"] = W;
    j["network"] = n;
  }
  return j;
}

}  // namespace

int cmd_solve(const std::string& scenario_path, const CommandOptions& opts, std::ostream& out, std::ostream& log) {
  const Scenario s = load_with_overrides(scenario_path, opts);
  const Representation rep = single_representation(s);
  const PepProblem p = build_problem(s, rep);
  const PepResult r = solve_pep(p, s.tol, true);

  const std::string json_path = opts.out ? *opts.out : s.output.json;
  std::string instance_path = s.output.instance;
  if (instance_path.empty() && !json_path.empty()) instance_path = json_path + ".instance.txt";

  json rec;
  rec["schema"] = "pep-forge result v1";
  rec["value"] = num(r.value());
  rec["status"] = sdp::to_string(r.solution.status);
  rec["gap"] = num(r.solution.gap);
  rec["primal_infeasibility"] = num(r.solution.primal_infeasibility);
  rec["dual_infeasibility"] = num(r.solution.dual_infeasibility);
  rec["iterations"] = r.solution.iterations;
  rec["certification"] = to_string(r.certification);
  rec["reason"] = r.reason;
  rec["representation"] = to_string(rep);
  rec["metadata"] = metadata_json(p);
  if (r.report) rec["verification"] = verification_json(*r.report);
  if (r.instance && !instance_path.empty()) {
    std::ofstream f(instance_path);
    if (!f) throw ScenarioError("cannot write instance file '" + instance_path + "'");
    write_instance(f, *r.instance, r.report ? &*r.report : nullptr);
    rec["instance"] = instance_path;
  } else {
    rec["instance"] = nullptr;
  }
  rec["scenario"] = s.source;

  emit(json_path, out, [&](std::ostream& os) { os << rec.dump(2) << "\n"; });
  log << "value " << format_number(r.value()) << " (" << sdp::to_string(r.solution.status) << ", "
      << to_string(r.certification) << ")\n";
  return r.optimal() ? 0 : 2;
}

int cmd_sweep(const std::string& scenario_path, const CommandOptions& opts, std::ostream& out, std::ostream& log) {
  const Scenario s = load_with_overrides(scenario_path, opts);
  const std::string csv_path = opts.out ? *opts.out : s.output.csv;
  std::string summary_path = s.output.summary;
  if (summary_path.empty() && !csv_path.empty()) summary_path = csv_path + ".summary.json";

  json summary;
  summary["schema"] = "pep-forge summary v1";
  bool all_optimal = true;

  if (s.sweep.axis == SweepAxis::h) {
    const auto rows = run_h_sweep(s, opts.jobs);
    emit(csv_path, out, [&](std::ostream& os) { write_h_sweep_csv(os, rows); });
    summary["axis"] = "h";
    summary["N"] = s.gradient.N;
    for (const char* which : {"tight", "relaxed"}) {
      const bool tight = std::string(which) == "tight";
      double best = kInf, best_h = 0.0, at_one = std::nan("");
      int bad = 0, count = 0;
      for (const auto& r : rows) {
        const auto& res = tight ? r.tight : r.relaxed;
        if (!res) continue;
        ++count;
        if (!res->optimal()) {
          ++bad;
          continue;
        }
        if (res->value() < best) best = res->value(), best_h = r.h;
        if (std::abs(r.h - 1.0) < 1e-12) at_one = res->value();
      }
      if (count == 0) continue;
      all_optimal = all_optimal && bad == 0;
      json j;
      j["argmin_h"] = num(best_h);
      j["min_value"] = num(best);
      j["non_optimal_points"] = bad;
      if (!std::isnan(at_one)) {
        j["value_at_h1"] = num(at_one);
        j["ratio_h1_over_min"] = num(at_one / best);
      }
      summary[which] = j;
      log << which << ": argmin h = " << format_number(best_h) << ", min value " << format_number(best) << "\n";
    }
  } else if (s.sweep.axis == SweepAxis::lambda) {
    const auto rows = run_lambda_sweep(s, opts.jobs);
    emit(csv_path, out, [&](std::ostream& os) { write_lambda_sweep_csv(os, rows); });
    bool monotone = true, ordered = true;
    int certified = 0;
    double max_gap = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      all_optimal = all_optimal && rows[k].spectral.optimal();
      if (k > 0 && rows[k].spectral.optimal() && rows[k - 1].spectral.optimal() &&
          rows[k].spectral.value() < rows[k - 1].spectral.value() - 1e-6 * (1.0 + std::abs(rows[k].spectral.value())))
        monotone = false;
      if (rows[k].fixed && rows[k].fixed->optimal() && rows[k].spectral.optimal() &&
          rows[k].fixed->value() > rows[k].spectral.value() + 1e-6 * (1.0 + std::abs(rows[k].spectral.value())))
        ordered = false;
      if (rows[k].spectral.certification == Certification::certified_tight) ++certified;
      if (rows[k].recovered_fixed && rows[k].recovered_fixed->optimal())
        max_gap = std::max(max_gap, std::abs(rows[k].recovered_fixed->value() - rows[k].spectral.value()) /
                                        (1.0 + std::abs(rows[k].spectral.value())));
    }
    summary["recovered_fixed_max_relative_gap"] = max_gap;
    summary["axis"] = "lambda";
    summary["spectral_nondecreasing"] = monotone;
    summary["fixed_below_spectral"] = ordered;
    summary["certified_points"] = certified;
    summary["network_matrix"] = s.network_matrix ? "supplied" : "default spectrum {1, lambda, -lambda, ...}";
    log << "spectral nondecreasing: " << (monotone ? "yes" : "no") << ", fixed <= spectral: " << (ordered ? "yes" : "no")
        << ", certified points: " << certified << "\n";
  } else {
    throw ScenarioError("scenario has no h or lambda sweep axis");
  }
  summary["metadata"] = s.kind == MethodKind::dgd ? metadata_json(build_dgd_spectral(s.dgd))
                                                   : metadata_json(build_gradient_method(s.gradient));
  if (!summary_path.empty()) emit(summary_path, out, [&](std::ostream& os) { os << summary.dump(2) << "\n"; });
  return all_optimal ? 0 : 2;
}

int cmd_region(const std::string& scenario_path, const CommandOptions& opts, std::ostream& out, std::ostream& log) {
  const Scenario s = load_with_overrides(scenario_path, opts);
  const auto cells = run_region(s);
  std::size_t grey = 0, black = 0;
  for (const auto& c : cells) grey += c.relaxed, black += c.tight;
  emit(opts.out ? *opts.out : s.output.csv, out, [&](std::ostream& os) { write_region_csv(os, cells); });
  log << cells.size() << " cells: " << grey << " relaxed-feasible, " << black << " exactly interpolable\n";
  return 0;
}

int cmd_verify(const std::string& record_path, const CommandOptions& opts, std::ostream& out, std::ostream& log) {
  std::ifstream in(record_path);
  if (!in) throw ScenarioError("cannot open result record '" + record_path + "'");
  json rec;
  try {
    rec = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("malformed result record: ") + e.what());
  }
  if (!rec.contains("scenario") || !rec.contains("instance"))
    throw ScenarioError("result record lacks the scenario or instance entry");
  if (rec["instance"].is_null()) throw ScenarioError("result record has no instance file");

  std::filesystem::path inst_path = rec["instance"].get<std::string>();
  if (!std::filesystem::exists(inst_path)) {
    const auto alt = std::filesystem::path(record_path).parent_path() / inst_path.filename();
    if (std::filesystem::exists(alt)) inst_path = alt;
  }
  std::ifstream inst_in(inst_path);
  if (!inst_in) throw ScenarioError("missing instance file '" + inst_path.string() + "'");
  const WorstCaseInstance inst = read_instance(inst_in);

  Scenario s = parse_scenario(rec["scenario"]);
  if (opts.tol_gap) s.tol.gap = *opts.tol_gap;
  if (opts.tol_feas) s.tol.feas = *opts.tol_feas;
  const Representation rep = representation_from_string(rec.value("representation", "tight"));
  const PepProblem p = build_problem(s, rep);
  const VerificationReport report = verify_instance(inst, p, s.tol.verify, s.tol.network);

  out << "certification: " << to_string(report.certification) << "\n";
  out << "reason: " << report.reason << "\n";
  out << "value: " << format_number(inst.value) << "\n";
  out << "max residual: " << format_number(report.max_residual) << " (tolerance " << format_number(report.tolerance)
      << ")\n";
  out << "objective error: " << format_number(report.objective_error) << "\n";
  for (const auto& r : report.records)
    out << "record " << r.name << ": " << (r.exact ? "exact" : "relaxed") << ", max residual "
        << format_number(r.report.max_residual) << "\n";
  if (report.network) {
    out << "network matrix: " << (report.network->success ? "recovered" : "not recovered") << " ("
        << report.network->message << ")\n";
    if (report.network->success) {
      out << "spectral bound exact at lambda = " << format_number(s.dgd.lam) << "\n";
    }
  }
  log << "verified " << inst_path.string() << "\n";
  return report.certification == Certification::numerical_failure ? 3 : 0;
}

int cmd_export_sdp(const std::string& scenario_path, const CommandOptions& opts, std::ostream& out, std::ostream& log) {
  const Scenario s = load_with_overrides(scenario_path, opts);
  const PepProblem p = build_problem(s, single_representation(s));
  const sdp::CompiledSdp c = sdp::compile(p.problem);
  emit(opts.out ? *opts.out : s.output.sdpa, out, [&](std::ostream& os) { sdp::write_sdpa(os, c.sdp); });
  log << c.sdp.row_count() << " equality rows, " << c.sdp.blocks.size() << " blocks\n";
  return 0;
}

}  // namespace pepforge
