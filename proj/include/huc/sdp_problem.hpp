#pragma once

#include <string>
#include <vector>

#include "huc/symmat.hpp"

namespace huc {

// Block-structured conic program:
//
//   min  sum_j C_j . X_j + c^T w
//   s.t. sum_j A_ij . X_j + d_i^T w  =  b_i   (equalities)
//        sum_j A_ij . X_j + d_i^T w  <= b_i   (inequalities)
//        X_j PSD, w >= 0
//
// Coefficient matrices are stored per constraint as (block, SymMatrix) terms;
// scalar variables enter through (var, coeff) terms.
struct SdpBlockProblem {
  struct Block {
    std::string name;
    int dim = 0;
  };
  struct BlockTerm {
    int block = 0;
    SymMatrix coeff;
  };
  struct LinTerm {
    int var = 0;
    double coeff = 0.0;
  };
  struct Constraint {
    std::string name;
    std::vector<BlockTerm> terms;     // at most one term per block, sorted by block
    std::vector<LinTerm> lin_terms;   // sorted by var
    double rhs = 0.0;
  };

  std::vector<Block> blocks;
  std::vector<std::string> nonneg_vars;
  std::vector<BlockTerm> objective;     // at most one term per block
  std::vector<double> objective_lin;    // size nonneg_vars.size() (empty = zeros)
  std::vector<Constraint> eq_constraints;
  std::vector<Constraint> ineq_constraints;  // sense <=

  int block_index(const std::string& name) const;
  int var_index(const std::string& name) const;

  // Checks dimension consistency and name uniqueness; throws ValidationError.
  void validate() const;
};

// Value of the left-hand side of a constraint at given block/vector values.
double evaluate_constraint(const SdpBlockProblem::Constraint& c,
                           const std::vector<SymMatrix>& block_values,
                           const std::vector<double>& var_values);

double evaluate_objective(const SdpBlockProblem& prob,
                          const std::vector<SymMatrix>& block_values,
                          const std::vector<double>& var_values);

// Plain-text sparse exchange format (SDPA-flavoured, documented in the
// README): header with block dims and senses, rhs line, then one
// "row block i j value" entry per nonzero. Row 0 is the objective; block 0
// is the scalar part (i = variable index, j ignored).
void write_problem_text(const SdpBlockProblem& prob, const std::string& path);
SdpBlockProblem read_problem_text(const std::string& path);

}  // namespace huc
