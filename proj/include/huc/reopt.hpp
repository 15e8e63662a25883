#pragma once

#include <vector>

#include "huc/model.hpp"
#include "huc/rounding.hpp"
#include "huc/sdp_problem.hpp"
#include "huc/sdp_solver.hpp"

namespace huc {

// Dispatch re-optimization with the commitment fixed: one PSD block per hour
// over z = (1, p_1..p_H, q_1..q_H, e_1..e_B, f_1..f_B). Equalities: corner,
// power balance, slack voltage, energy targets. Inequalities: generation
// ranges of the chosen configurations, reservoir bounds, line flows,
// voltage boxes.
struct OpfProblem {
  SdpBlockProblem prob;
  CommitmentSchedule schedule;
  int horizon = 0;
  int n_plants = 0;
  int n_buses = 0;

  int block_dim() const { return 1 + 2 * n_plants + 2 * n_buses; }
  int hour_block(int t) const { return t; }
  int p_idx(int h) const { return 1 + h; }
  int q_idx(int h) const { return 1 + n_plants + h; }
  int e_idx(int i) const { return 1 + 2 * n_plants + i; }
  int f_idx(int i) const { return 1 + 2 * n_plants + n_buses + i; }
};

// Throws ValidationError if the schedule violates uniqueness/startup rows.
OpfProblem build_opf(const HucInstance& inst, const CommitmentSchedule& schedule);

struct OpfSolution {
  SolveStatus status = SolveStatus::NumError;
  double objective = 0.0;          // water cost ($); startup costs excluded
  std::vector<SymMatrix> z_blocks; // one per hour, full rank as solved
  std::vector<std::vector<double>> p;  // [t][h], MW
  std::vector<std::vector<double>> q;  // [t][h], MVAr
  std::vector<std::vector<double>> e;  // [t][bus], p.u. (rank-1 factor)
  std::vector<std::vector<double>> f;
  double balance_residual = 0.0;   // AC balance mismatch of the rank-1 point
  int iterations = 0;
  double wall_time_s = 0.0;
};

// Solves the OPF. Infeasible means the rounded schedule admits no AC-feasible
// dispatch; the binding rows are named in the thrown SolverError.
OpfSolution solve_opf(const HucInstance& inst, const OpfProblem& opf,
                      const SolverOptions& opts = {});

// Max AC power-balance mismatch (p.u.) of voltages/injections extracted from
// the rank-1 approximation of each hour block.
double rank1_balance_residual(const HucInstance& inst, const OpfProblem& opf,
                              const std::vector<SymMatrix>& z_blocks);

// Voltages from the dominant eigenvector of the (e,f) principal sub-block,
// sign fixed by the slack bus. The voltage part couples to the corner only
// through quadratic forms, so its sign relative to the corner is free until
// rank reduction merges the two; reading the sub-block is exact either way.
void extract_voltages(const HucInstance& inst, const OpfProblem& opf,
                      const SymMatrix& z, std::vector<double>& e,
                      std::vector<double>& f);

}  // namespace huc
