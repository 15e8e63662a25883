#pragma once

#include <optional>
#include <string>
#include <vector>

#include "huc/model.hpp"
#include "huc/rankred.hpp"
#include "huc/relaxation.hpp"
#include "huc/reopt.hpp"
#include "huc/rounding.hpp"

namespace huc {

struct PipelineOptions {
  double solver_tol = defaults::kSolverTol;
  int solver_max_iter = defaults::kSolverMaxIter;
  double eps_bin = defaults::kEpsBin;
  int stall_budget = defaults::kStallBudget;  // rank reduction extra iterations
  bool xdiag_cut = true;
  int node_budget = defaults::kNodeBudget;          // exact search
  double time_budget_s = defaults::kTimeBudgetSec;  // exact search
  bool verbose = false;
};

struct StageTimings {
  double relax_s = 0.0;
  double round_s = 0.0;
  double reopt_s = 0.0;
  double rankred_s = 0.0;
};

struct HucSolution {
  std::string method;  // "sdp", "rh" or "bnb"
  CommitmentSchedule schedule;
  std::vector<std::vector<double>> p;  // [t][h], MW
  std::vector<std::vector<double>> q;  // [t][h], MVAr
  std::vector<std::vector<double>> e;  // [t][bus], p.u.
  std::vector<std::vector<double>> f;
  double objective = 0.0;    // $
  double lower_bound = 0.0;  // relaxation value
  double gap = 0.0;          // objective - lower_bound
  StageTimings timings;
  double total_time_s = 0.0;
  bool certified = true;  // exact search proved optimality within budget
  int nodes = 0;          // search nodes (exact) or MILP nodes (heuristic)
  std::vector<RankReductionReport> rank_reports;  // per hour (heuristic only)
};

// Water cost plus startup cost of a schedule at the given dispatch.
double schedule_cost(const HucInstance& inst, const CommitmentSchedule& schedule,
                     const std::vector<std::vector<double>>& p);

// Relaxation value only (the lower bound).
double solve_relaxation_bound(const HucInstance& inst,
                              const PipelineOptions& opts = {});

// The rounding heuristic end to end: relax, classify, aggregate, commitment
// MILP, dispatch re-optimization, per-hour rank reduction. The reported
// objective is recomputed from the final primal quantities.
HucSolution solve_rounding_heuristic(const HucInstance& inst,
                                     const PipelineOptions& opts = {});

// Exact reference: best-first branch-and-bound pinning commitment diagonals,
// bounds from the relaxation at every node.
HucSolution solve_exact_bnb(const HucInstance& inst,
                            const PipelineOptions& opts = {});

// Per-hour constraint stencils for rank reduction: every equality plus every
// inequality active at the solution, restricted to the hour's block; the
// hour's objective stencil is included so the water cost is preserved.
ConstraintSet constraint_set_for_hour(const OpfProblem& opf, const SdpSolution& sol,
                                      int t, double active_tol = defaults::kActiveTol);
ConstraintSet constraint_set_for_hour(const OpfProblem& opf,
                                      const std::vector<SymMatrix>& z_blocks,
                                      int t, double active_tol = defaults::kActiveTol);

// Benchmark harness: one row per instance, objective/gap/time per method.
struct BenchEntry {
  std::string method;
  bool ok = false;
  std::string error;
  double objective = 0.0;
  double gap_abs = 0.0;  // vs the relaxation value
  double gap_rel = 0.0;
  double time_s = 0.0;
  int nodes = 0;
  bool certified = true;
};

struct BenchRow {
  std::string name;
  double relaxation_value = 0.0;
  std::vector<BenchEntry> entries;
  // commitments on which the exact and heuristic schedules differ
  std::optional<int> schedule_hamming;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::string to_text() const;
  std::string to_json() const;  // machine-readable, schema in the README
};

struct BenchInstance {
  std::string name;
  HucInstance instance;
};

BenchReport bench(const std::vector<BenchInstance>& instances,
                  const std::vector<std::string>& methods,
                  const PipelineOptions& opts = {}, int jobs = 1);

}  // namespace huc
