#pragma once

#include <string>
#include <vector>

#include "huc/symmat.hpp"

namespace huc {

// Stencils whose Frobenius products with Z must stay fixed during rank
// reduction: power-balance forms, line-flow forms, and pinning forms
// (slack voltage, corner, promoted active inequalities, preserved linear
// functionals such as the objective).
struct ConstraintSet {
  enum class Kind { Balance, Flow, Pin };
  struct Stencil {
    std::string label;
    Kind kind = Kind::Pin;
    SymMatrix m;
    double target = 0.0;  // value M . Z must keep
  };
  std::vector<Stencil> items;
};

struct RankReductionReport {
  enum class Termination { Rank1, StalledSZero, IterBudget };
  Termination termination = Termination::IterBudget;
  int iterations = 0;                 // steps attempted (successful + stalled)
  std::vector<int> rank_trajectory;   // starts at the input rank
  SymMatrix final_z;
  std::vector<double> residuals;      // max |M.Z - target| after each iteration
  double max_residual = 0.0;
};

// Iterative rank reduction: factor Z = R R^T, compress the stencils onto the
// factor, pick a PSD combination S of the null-space directions, and step
// Z <- R (I + w S) R^T with w = -1/lambda_max(S), which keeps Z PSD, keeps
// every stencil product fixed, and removes at least one rank. Stalls (no
// nonzero PSD combination) retry with a rotated accumulation order and are
// limited by `extra_iters`.
RankReductionReport reduce(const SymMatrix& z, const ConstraintSet& cons,
                           int extra_iters = defaults::kStallBudget);

// Greedy pairwise accumulation of a PSD matrix from a list of directions
// (each tried with both signs). `rotate` shifts the processing order.
// Returns the zero matrix when no nonzero PSD combination is found.
SymMatrix find_psd_combination(const std::vector<SymMatrix>& basis, int rotate = 0);

// w = -1/lambda_max(S): I + w S is PSD and singular. Throws on S == 0.
double step_scale(const SymMatrix& s);

}  // namespace huc
