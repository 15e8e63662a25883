#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "huc/errors.hpp"
#include "huc/fixture.hpp"
#include "huc/pipeline.hpp"
#include "huc/relaxation.hpp"
#include "huc/reopt.hpp"
#include "test_support.hpp"

using namespace huc;

namespace {

int count_prefix(const std::vector<SdpBlockProblem::Constraint>& cs,
                 const std::string& prefix) {
  int n = 0;
  for (const auto& c : cs)
    if (c.name.rfind(prefix, 0) == 0) ++n;
  return n;
}

HucInstance load_fixture(const std::string& preset) {
  const auto [np, hp] = write_fixture(fixture_preset(preset), ".");
  return load_instance(np, hp);
}

}  // namespace

TEST_CASE("block layout on a one-bus one-plant instance") {
  HucInstance inst = testing::tiny_instance(1, 2);
  // collapse to a single bus: move all load to bus 1 and drop bus 2
  inst.network.buses.resize(1);
  inst.network.lines.clear();
  inst.network.buses[0].p_load = {0.5};
  inst.network.buses[0].q_load = {0.15};
  // single-bus graph is trivially connected
  inst.validate();
  const Relaxation rel = build_relaxation(inst);
  REQUIRE(rel.prob.blocks.size() == 3);  // 2 commitment blocks + 1 voltage block
  CHECK(rel.prob.blocks[rel.x_block(0, 0, 0)].dim == 3);
  CHECK(rel.prob.blocks[rel.x_block(0, 0, 1)].dim == 3);
  CHECK(rel.prob.blocks[rel.v_block(0)].dim == 2);
  CHECK(count_prefix(rel.prob.eq_constraints, "uniq") == 1);
}

TEST_CASE("constraint counts match closed forms") {
  const HucInstance inst = load_fixture("medium");
  const int T = inst.horizon;
  const int nh = static_cast<int>(inst.plants.size());
  const int nb = static_cast<int>(inst.network.buses.size());
  const int nl = static_cast<int>(inst.network.lines.size());
  int k = 0;
  for (const auto& p : inst.plants) k += static_cast<int>(p.configs.size());

  const Relaxation rel = build_relaxation(inst);
  CHECK(static_cast<int>(rel.prob.blocks.size()) == T * k + T);
  CHECK(static_cast<int>(rel.prob.nonneg_vars.size()) == T * nh);
  const int expected_eq = 2 * T * nb + T * nh + 2 * T + (nh - 1);
  CHECK(static_cast<int>(rel.prob.eq_constraints.size()) == expected_eq);
  const int expected_ineq =
      7 * T * k + 2 * T * nl + 2 * T * (nb - 1) + 2 * T * nh + T * nh;
  CHECK(static_cast<int>(rel.prob.ineq_constraints.size()) == expected_ineq);
  CHECK(count_prefix(rel.prob.ineq_constraints, "flow") == 2 * T * nl);
  CHECK(count_prefix(rel.prob.ineq_constraints, "startup") == T * nh);

  // the diagonal cut is toggleable
  RelaxOptions no_cut;
  no_cut.xdiag_cut = false;
  const Relaxation rel2 = build_relaxation(inst, no_cut);
  CHECK(static_cast<int>(rel2.prob.ineq_constraints.size()) ==
        expected_ineq - T * k);
}

TEST_CASE("one startup row per hour and plant") {
  const HucInstance inst = testing::tiny_instance(2, 2);
  const Relaxation rel = build_relaxation(inst);
  CHECK(count_prefix(rel.prob.ineq_constraints, "startup") == 2);
  // hour-1 row carries the initial configuration on the rhs
  for (const auto& c : rel.prob.ineq_constraints)
    if (c.name == "startup_1_1") CHECK(c.rhs == 1.0);
}

TEST_CASE("extraction round-trips a rank-1 feasible block") {
  const HucInstance inst = testing::tiny_instance(1, 2);
  const Relaxation rel = build_relaxation(inst);
  SdpSolution sol;
  sol.status = SolveStatus::Optimal;
  for (const auto& b : rel.prob.blocks) sol.block_values.emplace_back(b.dim);
  sol.var_values.assign(rel.prob.nonneg_vars.size(), 0.0);
  // configuration 1 committed at dP = 10: block = outer((10, 1, 3))
  const double xi[3] = {10.0, 1.0, 3.0};
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j)
      sol.block_values[rel.x_block(0, 0, 0)].set(i, j, xi[i] * xi[j]);
  // voltage block from a known vector
  const int nb = 2;
  const double v[4] = {1.0, 0.98, 0.0, -0.02};
  for (int i = 0; i < 2 * nb; ++i)
    for (int j = i; j < 2 * nb; ++j)
      sol.block_values[rel.v_block(0)].set(i, j, v[i] * v[j]);

  const RelaxationSolution rsol = extract(sol, rel, inst);
  CHECK(rsol.x_frac[0][0][0] == doctest::Approx(1.0));
  CHECK(rsol.x_frac[0][0][1] == doctest::Approx(0.0));
  CHECK(rsol.dp[0][0][0] == doctest::Approx(10.0));
  CHECK(rsol.dq[0][0][0] == doctest::Approx(3.0));
  // dispatch = dP + p_min * x = 10 + 20
  CHECK(rsol.dispatch[0][0] == doctest::Approx(30.0));
  // voltages recovered up to global sign, fixed by the slack entry
  for (int i = 0; i < nb; ++i) {
    CHECK(rsol.volt_e[0][i] == doctest::Approx(v[i]).epsilon(1e-9));
    CHECK(rsol.volt_f[0][i] == doctest::Approx(v[nb + i]).epsilon(1e-9));
  }
  CHECK(rsol.uniqueness_violation == doctest::Approx(0.0));
}

TEST_CASE("lift of machine-verified feasible points satisfies every row") {
  const HucInstance inst = load_fixture("small");
  const Relaxation rel = build_relaxation(inst);

  // feasible points found by fixing a schedule and re-optimizing dispatch;
  // each is verified against the original model by independent arithmetic
  // before it is lifted
  int tested = 0;
  const int nh = static_cast<int>(inst.plants.size());
  std::vector<std::vector<int>> cfgs = {{1, 1}, {2, 2}, {2, 1}, {1, 2}};
  for (const auto& flat : cfgs) {
    std::vector<std::vector<int>> cfg(inst.horizon, std::vector<int>(nh));
    for (int t = 0; t < inst.horizon; ++t)
      for (int h = 0; h < nh; ++h) cfg[t][h] = flat[h];
    CommitmentSchedule sched = CommitmentSchedule::from_configs(cfg, inst);
    OpfProblem opf = build_opf(inst, sched);
    OpfSolution osol;
    try {
      osol = solve_opf(inst, opf);
    } catch (const SolverError&) {
      continue;  // schedule infeasible; not a candidate point
    }
    if (osol.balance_residual > 1e-7) continue;  // not rank-1 clean
    testing::Point pt{sched, osol.p, osol.q, osol.e, osol.f};
    const double viol = testing::max_violation(inst, pt);
    if (viol > 1e-7) continue;
    ++tested;
    const testing::Lift lift = testing::lift_point(inst, rel, pt);
    CHECK(testing::lift_violation(rel, lift) <= 1e-9);
  }
  CHECK(tested >= 2);
}

TEST_CASE("relaxation value lower-bounds every feasible point's cost") {
  const HucInstance inst = load_fixture("small");
  const PipelineOptions opts;
  const double bound = solve_relaxation_bound(inst, opts);

  std::vector<std::vector<int>> cfg(inst.horizon,
                                    std::vector<int>(inst.plants.size(), 1));
  const CommitmentSchedule sched = CommitmentSchedule::from_configs(cfg, inst);
  try {
    const OpfProblem opf = build_opf(inst, sched);
    const OpfSolution osol = solve_opf(inst, opf);
    const double cost = schedule_cost(inst, sched, osol.p);
    CHECK(bound <= cost + 1e-6 * std::max(1.0, std::abs(cost)));
  } catch (const SolverError&) {
    // all-ones schedule infeasible on this fixture; nothing to compare
  }
}
