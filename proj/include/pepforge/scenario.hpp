#pragma once

// Scenario files: JSON documents with top-level keys `method`, `family`,
// `representation`, `sweep`, `output` and `tolerances`. Parsing is strict:
// unknown keys and ill-typed values are rejected with the offending field
// path (and the line number for syntax errors).

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pepforge/algos.hpp"
#include "pepforge/scheme.hpp"

namespace pepforge {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MethodKind { gradient, dgd, custom, region };
enum class SweepAxis { none, h, lambda, region };

struct Tolerances {
  double gap = 1e-8;
  double feas = 1e-8;
  int max_iter = 200;
  double verify = 1e-6;
  double network = 1e-5;
  double rank = 1e-7;
};

struct SweepSpec {
  SweepAxis axis = SweepAxis::none;
  double from = 0.0, to = 0.0, step = 0.0;       // h, lambda, or g2 for regions
  double f_from = 0.0, f_to = 0.0, f_step = 0.0;  // regions only

  /// Grid values from + k * step, k = 0..round((to - from) / step).
  std::vector<double> grid() const;
  std::vector<double> f_grid() const;
};

/// Anchors for the two-point region scan.
struct RegionSpec {
  double x1 = 0.0, x2 = 1.0, g1 = 1.0, f1 = 0.0, L = 1.0;
};

struct OutputSpec {
  std::string csv, json, instance, summary, sdpa;
};

struct Scenario {
  MethodKind kind = MethodKind::gradient;
  MethodSpec gradient;
  DgdSpec dgd;
  std::optional<Eigen::MatrixXd> network_matrix;  // fixed W for lambda sweeps; default generator otherwise
  SchemeConfig custom;
  RegionSpec region;
  std::vector<Representation> representations{Representation::tight};
  SweepSpec sweep;
  OutputSpec output;
  Tolerances tol;
  nlohmann::json source;  // the document as read, embedded in result records
};

Scenario parse_scenario(const std::string& text);
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);

ClassSpec parse_family(const nlohmann::json& j, const std::string& where);

/// The single problem a scenario describes (gradient, DGD spectral or custom),
/// for the given representation.
PepProblem build_problem(const Scenario& s, Representation rep);

}  // namespace pepforge
