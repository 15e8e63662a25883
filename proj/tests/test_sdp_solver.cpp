#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "huc/sdp_solver.hpp"

using namespace huc;

namespace {

SdpBlockProblem::Constraint make_con(const std::string& name, int block,
                                     const SymMatrix& coeff, double rhs) {
  SdpBlockProblem::Constraint c;
  c.name = name;
  c.terms.push_back({block, coeff});
  c.rhs = rhs;
  return c;
}

// Random strictly feasible SDP with a known complementary optimal pair:
// X* = U diag(pos,0) U^T, S* = U diag(0,pos) U^T, C = sum y_i A_i + S*,
// b = A(X*). Optimal value is C . X* = b^T y*.
struct OracleProblem {
  SdpBlockProblem prob;
  double opt = 0.0;
};

OracleProblem make_oracle(std::mt19937_64& rng, bool with_lp) {
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> dim_d(2, 5);
  OracleProblem out;
  const int nblocks = 1 + static_cast<int>(rng() % 2);
  std::vector<Eigen::MatrixXd> xstar, sstar;
  for (int bj = 0; bj < nblocks; ++bj) {
    const int n = dim_d(rng);
    out.prob.blocks.push_back({"b" + std::to_string(bj), n});
    Eigen::MatrixXd raw(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) raw(i, j) = g(rng);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    const Eigen::MatrixXd u = qr.householderQ();
    const int k = 1 + static_cast<int>(rng() % (n - 1));
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(n), ds = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < k; ++i) dx(i) = 0.5 + std::abs(g(rng));
    for (int i = k; i < n; ++i) ds(i) = 0.5 + std::abs(g(rng));
    xstar.push_back(u * dx.asDiagonal() * u.transpose());
    sstar.push_back(u * ds.asDiagonal() * u.transpose());
  }
  int nlp = 0;
  std::vector<double> wstar, zstar;
  if (with_lp) {
    nlp = 1 + static_cast<int>(rng() % 3);
    for (int v = 0; v < nlp; ++v) {
      out.prob.nonneg_vars.push_back("w" + std::to_string(v));
      if (rng() % 2) {
        wstar.push_back(0.5 + std::abs(g(rng)));
        zstar.push_back(0.0);
      } else {
        wstar.push_back(0.0);
        zstar.push_back(0.5 + std::abs(g(rng)));
      }
    }
  }
  const int m = 3 + static_cast<int>(rng() % 4);
  std::vector<double> ystar(m);
  std::vector<Eigen::MatrixXd> csum(nblocks);
  for (int bj = 0; bj < nblocks; ++bj) csum[bj] = sstar[bj];
  std::vector<double> clin(nlp, 0.0);
  for (int v = 0; v < nlp; ++v) clin[v] = zstar[v];
  for (int i = 0; i < m; ++i) {
    ystar[i] = g(rng);
    SdpBlockProblem::Constraint c;
    c.name = "c" + std::to_string(i);
    double rhs = 0.0;
    for (int bj = 0; bj < nblocks; ++bj) {
      const int n = out.prob.blocks[bj].dim;
      SymMatrix a(n);
      for (int p = 0; p < n; ++p)
        for (int q = p; q < n; ++q) a.set(p, q, g(rng));
      rhs += frobenius(a, SymMatrix::from_dense_symmetrized(xstar[bj]));
      csum[bj] += ystar[i] * a.dense();
      c.terms.push_back({bj, a});
    }
    for (int v = 0; v < nlp; ++v) {
      const double dv = g(rng);
      c.lin_terms.push_back({v, dv});
      rhs += dv * wstar[v];
      clin[v] += ystar[i] * dv;
    }
    c.rhs = rhs;
    out.prob.eq_constraints.push_back(std::move(c));
  }
  for (int bj = 0; bj < nblocks; ++bj)
    out.prob.objective.push_back({bj, SymMatrix::from_dense_symmetrized(csum[bj])});
  out.prob.objective_lin = clin;
  for (int i = 0; i < m; ++i) out.opt += ystar[i] * out.prob.eq_constraints[i].rhs;
  return out;
}

}  // namespace

TEST_CASE("symmetry-forced optimum") {
  // min -2 X_12  s.t. trace X = 1, X psd (2x2)  ->  -1 at X = [[.5,.5],[.5,.5]]
  SdpBlockProblem prob;
  prob.blocks.push_back({"x", 2});
  SymMatrix c(2);
  c.set(0, 1, -1.0);  // C . X = -2 X_12
  prob.objective.push_back({0, c});
  prob.eq_constraints.push_back(make_con("trace", 0, SymMatrix::identity(2), 1.0));
  const SdpSolution sol = solve(prob);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(sol.block_values[0](0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(sol.block_values[0](0, 1) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("diagonal split") {
  // min X_11 s.t. X_11 + X_22 = 1 -> 0
  SdpBlockProblem prob;
  prob.blocks.push_back({"x", 2});
  SymMatrix c(2);
  c.set(0, 0, 1.0);
  prob.objective.push_back({0, c});
  prob.eq_constraints.push_back(make_con("split", 0, SymMatrix::identity(2), 1.0));
  const SdpSolution sol = solve(prob);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("oracle-constructed problems") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 25; ++trial) {
    const OracleProblem op = make_oracle(rng, trial % 2 == 1);
    const SdpSolution sol = solve(op.prob);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const double err = std::abs(sol.objective - op.opt) /
                       std::max(1.0, std::abs(op.opt));
    CHECK(err < 1e-7);
    // weak duality at every iterate, up to the infeasibility correction
    for (const IterStat& it : sol.trace)
      CHECK(it.primal_obj - it.dual_obj >=
            -(it.duality_correction + 1e-9 * (1.0 + std::abs(it.primal_obj))));
  }
}

TEST_CASE("row permutation invariance") {
  std::mt19937_64 rng(77);
  const OracleProblem op = make_oracle(rng, true);
  SolverOptions opts;
  opts.tol = 1e-10;
  const SdpSolution a = solve(op.prob, opts);
  SdpBlockProblem permuted = op.prob;
  std::reverse(permuted.eq_constraints.begin(), permuted.eq_constraints.end());
  const SdpSolution b = solve(permuted, opts);
  REQUIRE(a.status == SolveStatus::Optimal);
  REQUIRE(b.status == a.status);
  CHECK(std::abs(a.objective - b.objective) <=
        1e-9 * std::max(1.0, std::abs(a.objective)));
}

TEST_CASE("complementarity at optimum") {
  std::mt19937_64 rng(99);
  const OracleProblem op = make_oracle(rng, false);
  const SdpSolution sol = solve(op.prob);
  REQUIRE(sol.status == SolveStatus::Optimal);
  // X . S = pobj - dobj at a primal/dual feasible point
  const double comp = std::abs(sol.objective - sol.dual_objective);
  int ntot = 0;
  for (const auto& b : op.prob.blocks) ntot += b.dim;
  CHECK(comp <= ntot * defaults::kSolverTol * 100.0 *
                    std::max(1.0, std::abs(sol.objective)));
}

TEST_CASE("facial reduction handles zero pins") {
  // pin X_22 = 0 on a 2x2 block; the remaining 1x1 problem stays strictly
  // feasible and solvable
  SdpBlockProblem prob;
  prob.blocks.push_back({"x", 2});
  SymMatrix c(2);
  c.set(0, 0, 1.0);
  c.set(1, 1, 1.0);
  prob.objective.push_back({0, c});
  SymMatrix pin(2);
  pin.set(1, 1, 1.0);
  prob.eq_constraints.push_back(make_con("pin", 0, pin, 0.0));
  SymMatrix diag0(2);
  diag0.set(0, 0, 1.0);
  prob.eq_constraints.push_back(make_con("fix", 0, diag0, 2.0));
  const SdpSolution sol = solve(prob);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(sol.block_values[0](1, 1) == 0.0);
  CHECK(sol.block_values[0](0, 1) == 0.0);

  // negative diagonal pin is infeasible
  SdpBlockProblem bad = prob;
  bad.eq_constraints[0].rhs = -1.0;
  CHECK(solve(bad).status == SolveStatus::Infeasible);
}

TEST_CASE("lp basics") {
  LpProblem lp;
  lp.vars = {"x"};
  lp.costs = {1.0};
  lp.rows.push_back({"lb", {{0, -1.0}}, -3.0, false});  // -x <= -3  i.e. x >= 3
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(sol.values[0] == doctest::Approx(3.0).epsilon(1e-6));

  LpProblem lp2;
  lp2.vars = {"x"};
  lp2.costs = {-1.0};
  lp2.rows.push_back({"ub", {{0, 1.0}}, 1.0, false});
  const LpSolution sol2 = solve_lp(lp2);
  REQUIRE(sol2.status == SolveStatus::Optimal);
  CHECK(sol2.objective == doctest::Approx(-1.0).epsilon(1e-7));

  LpProblem bad;
  bad.vars = {"x"};
  bad.costs = {0.0};
  bad.rows.push_back({"lb", {{0, -1.0}}, -2.0, false});  // x >= 2
  bad.rows.push_back({"ub", {{0, 1.0}}, 1.0, false});    // x <= 1
  CHECK(solve_lp(bad).status == SolveStatus::Infeasible);

  LpProblem unb;
  unb.vars = {"x"};
  unb.costs = {-1.0};
  unb.rows.push_back({"lb", {{0, -1.0}}, 0.0, false});
  CHECK(solve_lp(unb).status == SolveStatus::Unbounded);
}

TEST_CASE("problem text roundtrip") {
  std::mt19937_64 rng(42);
  const OracleProblem op = make_oracle(rng, true);
  SdpBlockProblem with_ineq = op.prob;
  // turn the last equality into <= (relaxes the problem but keeps it valid)
  with_ineq.ineq_constraints.push_back(with_ineq.eq_constraints.back());
  with_ineq.eq_constraints.pop_back();
  const std::string path = "roundtrip_problem.txt";
  write_problem_text(with_ineq, path);
  const SdpBlockProblem reread = read_problem_text(path);
  const SdpSolution a = solve(with_ineq);
  const SdpSolution b = solve(reread);
  REQUIRE(a.status == SolveStatus::Optimal);
  REQUIRE(b.status == SolveStatus::Optimal);
  CHECK(std::abs(a.objective - b.objective) <=
        1e-8 * std::max(1.0, std::abs(a.objective)));
}
