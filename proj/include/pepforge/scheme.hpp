#pragma once

// Generic fixed-step schemes described as data: a list of oracles, a list of
// steps that query them or form affine combinations, stationarity conditions
// at x* = 0, initial conditions and an objective. Scenario files map onto
// SchemeConfig one to one (see scenario.hpp).

#include <string>
#include <utility>
#include <vector>

#include "pepforge/algos.hpp"
#include "pepforge/classes.hpp"

namespace pepforge {

/// Ordered affine combination of named vectors.
using Combination = std::vector<std::pair<std::string, double>>;

enum class OracleKind { function, operator_, linear, network };

struct SchemeOracle {
  std::string name;
  OracleKind kind = OracleKind::function;
  ClassSpec spec;     // function and operator oracles
  double L = 1.0;     // linear: operator norm bound
  double lam = 0.0;   // network: spectral bound
  int agents = 2;     // network: inputs per consensus call
};

enum class StepOp {
  gradient,   // name := gradient of oracle at `at`
  prox,       // name := at - step * g with g a subgradient at name (implicit step)
  combine,    // name := at
  apply,      // name := M at
  adjoint,    // name := M^T at
  evaluate,   // name := Q(at) for an operator oracle
  consensus,  // outputs := network mixing of inputs
};

struct SchemeStep {
  std::string name;
  StepOp op = StepOp::combine;
  std::string oracle;
  Combination at;
  double step = 0.0;
  std::vector<Combination> inputs;    // consensus
  std::vector<std::string> outputs;   // consensus
};

/// sum of the stationary gradients of `oracles` at x* vanishes, or lies in
/// the kernel of M^T when `through` names a linear oracle.
struct Stationarity {
  std::vector<std::string> oracles;
  std::string through;
};

struct InitialCondition {
  Combination expr;
  double radius = 1.0;
};

enum class SchemeObjective { function_gap, norm_sq };

struct SchemeConfig {
  std::vector<SchemeOracle> oracles;
  std::vector<std::string> seeds;
  std::vector<SchemeStep> steps;
  std::vector<Stationarity> stationary;
  std::vector<InitialCondition> initial;
  SchemeObjective objective = SchemeObjective::function_gap;
  std::vector<std::string> objective_oracles;  // function_gap
  Combination objective_at;                    // function_gap point or norm_sq vector
};

/// Throws ModelError on undeclared names, unknown oracles, a missing
/// stationarity condition for a function_gap objective, and similar misuse.
PepProblem build_custom_method(const SchemeConfig& config);

}  // namespace pepforge
