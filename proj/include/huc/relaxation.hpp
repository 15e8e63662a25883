#pragma once

#include <vector>

#include "huc/model.hpp"
#include "huc/sdp_problem.hpp"
#include "huc/sdp_solver.hpp"

namespace huc {

struct RelaxOptions {
  // Redundant per-block cut (commitment diagonal <= 1), implied by the
  // uniqueness rows; kept as an explicit strengthening, toggleable.
  bool xdiag_cut = true;
};

// The commitment relaxation: one 3x3 PSD block per (hour, plant,
// configuration) over (dP, x, dQ), one PSD voltage block of size 2*N_B per
// hour over (e, f), and one nonnegative startup variable per (hour, plant).
struct Relaxation {
  SdpBlockProblem prob;
  int horizon = 0;
  int n_buses = 0;
  std::vector<int> config_count;   // per plant
  std::vector<int> config_offset;  // prefix sums
  int total_configs = 0;

  int x_block(int t, int h, int u) const {
    return t * total_configs + config_offset[h] + u;
  }
  int v_block(int t) const { return horizon * total_configs + t; }
  int y_var(int t, int h) const {
    return t * static_cast<int>(config_count.size()) + h;
  }
};

Relaxation build_relaxation(const HucInstance& inst, const RelaxOptions& opts = {});

// Equality pin on the commitment diagonal of one 3x3 block; the exact
// branch-and-bound adds these at its nodes.
SdpBlockProblem::Constraint pin_commitment(const Relaxation& rel, int t, int h,
                                           int u, double value);

struct RelaxationSolution {
  SolveStatus status = SolveStatus::NumError;
  double objective = 0.0;
  // raw blocks (3x3 per (t,h,u); 2*N_B per hour), solver layout
  std::vector<SymMatrix> blocks;
  // extracted values, indexed [t][h][u] / [t][h] / [t][bus]
  std::vector<std::vector<std::vector<double>>> x_frac;
  std::vector<std::vector<std::vector<double>>> dp;
  std::vector<std::vector<std::vector<double>>> dq;
  std::vector<std::vector<double>> startups;  // y values
  std::vector<std::vector<double>> dispatch;  // sum_u (dp + p_min * x), MW
  std::vector<std::vector<double>> volt_e;    // dominant factor of each hour block
  std::vector<std::vector<double>> volt_f;
  double uniqueness_violation = 0.0;  // max |sum_u x - 1|
  double range_violation = 0.0;       // max distance of x outside [0,1]
  int iterations = 0;
  double wall_time_s = 0.0;
};

// Reads commitments from the block diagonals, deviations from the cross
// terms, and per-hour voltages from the dominant eigenvector of each voltage
// block. Throws SolverError unless the solve ended Optimal (or IterLimit
// within usable accuracy).
RelaxationSolution extract(const SdpSolution& sol, const Relaxation& rel,
                           const HucInstance& inst);

}  // namespace huc
