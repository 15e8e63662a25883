#pragma once

// Central table of numeric defaults. Every tolerance used anywhere in the
// library is defined here and overridable through the CLI.
namespace huc::defaults {

// Factorization residual bound: ||R R^T - M||_max <= eps_chol * max(1, ||M||_max).
inline constexpr double kEpsChol = 1e-10;
// Numerical rank: eigenvalues above eps_rank * lambda_max count.
inline constexpr double kEpsRank = 1e-8;
// PSD tolerance: lambda_min >= -eps_psd * lambda_max accepted as PSD.
inline constexpr double kEpsPsd = 1e-8;
// Null space: singular values below eps_null * sigma_max treated as zero.
inline constexpr double kEpsNull = 1e-9;
// Interior-point termination (relative gap and residuals).
inline constexpr double kSolverTol = 1e-8;
inline constexpr int kSolverMaxIter = 200;
// Commitment fractionality classification.
inline constexpr double kEpsBin = 1e-4;
// Feasibility checks on extracted relaxation values.
inline constexpr double kEpsFeas = 1e-6;
// Rank reduction: extra stall iterations and bisection tolerance.
inline constexpr int kStallBudget = 3;
inline constexpr double kBisectTol = 1e-6;
// Inequality activity threshold (slack below this promotes to equality).
inline constexpr double kActiveTol = 1e-6;
// Branch-and-bound budgets.
inline constexpr int kNodeBudget = 10000;
inline constexpr double kTimeBudgetSec = 600.0;
// Volume conversion: hm^3 accumulated by 1 m^3/s over one hour.
inline constexpr double kTheta = 0.0036;

}  // namespace huc::defaults
