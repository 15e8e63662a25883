#pragma once

#include <vector>

#include "huc/model.hpp"
#include "huc/relaxation.hpp"

namespace huc {

// Partition of the relaxed commitments at tolerance eps_bin:
// x >= 1 - eps_bin  -> fixed_on, x <= eps_bin -> fixed_off, else fractional.
// A (t,h) pair holding a fixed_on member has every other member demoted to
// fixed_off, so each pair is either decided or fully undecided.
struct CommitmentSets {
  struct Item {
    int t = 0, h = 0, u = 0;  // 0-based
    auto operator<=>(const Item&) const = default;
  };
  std::vector<Item> fractional;
  std::vector<Item> fixed_on;
  std::vector<Item> fixed_off;
};

CommitmentSets classify(const RelaxationSolution& relax,
                        double eps_bin = defaults::kEpsBin);

// Aggregated active dispatch per (t,h): sum_u (dP + p_min x), the datum the
// commitment MILP is built around.
std::vector<std::vector<double>> aggregate_dispatch(const RelaxationSolution& relax,
                                                    const HucInstance& inst);

// Chosen configuration (1-based) and startup counts per (t,h).
struct CommitmentSchedule {
  std::vector<std::vector<int>> config;      // [t][h]
  std::vector<std::vector<double>> startups; // [t][h]

  // startups recomputed from config deltas and initial configurations
  static CommitmentSchedule from_configs(std::vector<std::vector<int>> config,
                                         const std::vector<int>& initial_config);
  static CommitmentSchedule from_configs(std::vector<std::vector<int>> config,
                                         const HucInstance& inst);
  void validate(const HucInstance& inst) const;  // uniqueness + startup rows
};

// Binary program over the undecided commitments: per undecided (t,h) a
// uniqueness row over the candidates able to carry the aggregated dispatch,
// water cost coefficients priced at that dispatch, startup rows linking
// consecutive hours with decided hours entering as constants.
struct MilpProblem {
  struct Binary {
    CommitmentSets::Item item;
    double cost = 0.0;  // water cost of running this candidate at the dispatch
  };
  std::vector<Binary> binaries;
  int horizon = 0;
  int n_plants = 0;
  std::vector<double> startup_cost;           // per plant
  std::vector<std::vector<int>> decided;      // [t][h], 0 = undecided, else config
  std::vector<int> initial_config;            // per plant
};

MilpProblem build_commitment_milp(const HucInstance& inst,
                                  const CommitmentSets& sets,
                                  const std::vector<std::vector<double>>& dispatch);

struct MilpResult {
  CommitmentSchedule schedule;
  double objective = 0.0;  // water cost over binaries + all startup costs
  int nodes = 0;
};

// Best-first branch-and-bound on the most fractional binary, bounds from
// the plain LP relaxation, deterministic lexicographic tie-breaks.
MilpResult solve_commitment_milp(const MilpProblem& milp);

// Exact objective of a full assignment of the MILP's binaries (used by the
// solver for incumbents and by enumeration checks).
double milp_objective(const MilpProblem& milp, const std::vector<int>& chosen);

// Schedule when nothing is fractional: read directly from fixed_on.
CommitmentSchedule schedule_from_sets(const CommitmentSets& sets,
                                      const HucInstance& inst);

}  // namespace huc
