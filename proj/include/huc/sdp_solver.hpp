#pragma once

#include <string>
#include <vector>

#include "huc/defaults.hpp"
#include "huc/sdp_problem.hpp"

namespace huc {

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit, NumError };

std::string to_string(SolveStatus s);

struct SolverOptions {
  double tol = defaults::kSolverTol;
  int max_iter = defaults::kSolverMaxIter;
  bool verbose = false;
};

// One line per interior-point iteration, kept for diagnostics and for the
// weak-duality-at-every-iterate property checks.
struct IterStat {
  double mu = 0.0;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double primal_res = 0.0;  // relative
  double dual_res = 0.0;    // relative
  // |y^T r_p| + |R_d . X|: the infeasibility correction in the identity
  // pobj - dobj = X.S + w.z - y^T r_p + R_d.X  (X.S + w.z >= 0 always).
  double duality_correction = 0.0;
};

struct SdpSolution {
  SolveStatus status = SolveStatus::NumError;
  std::vector<SymMatrix> block_values;   // original block dimensions
  std::vector<double> var_values;        // nonneg scalar variables
  std::vector<double> dual_eq;           // multipliers, eq constraint order
  std::vector<double> dual_ineq;         // multipliers, ineq constraint order
  double objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
  double gap = 0.0;         // relative duality gap at exit
  double primal_res = 0.0;  // relative primal residual at exit
  double dual_res = 0.0;    // relative dual residual at exit
  double wall_time_s = 0.0;
  std::vector<IterStat> trace;
};

SdpSolution solve(const SdpBlockProblem& prob, const SolverOptions& opts = {});

// Pure linear problems reuse the same engine restricted to the nonnegative
// orthant.
struct LpProblem {
  std::vector<std::string> vars;  // nonnegative
  std::vector<double> costs;
  struct Row {
    std::string name;
    std::vector<SdpBlockProblem::LinTerm> terms;
    double rhs = 0.0;
    bool equality = false;  // false: <=
  };
  std::vector<Row> rows;
};

struct LpSolution {
  SolveStatus status = SolveStatus::NumError;
  std::vector<double> values;
  std::vector<double> duals;  // row order
  double objective = 0.0;
  int iterations = 0;
};

LpSolution solve_lp(const LpProblem& prob, const SolverOptions& opts = {});

}  // namespace huc
