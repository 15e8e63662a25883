#include "huc/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

#include "huc/errors.hpp"
#include "huc/sdp_solver.hpp"

namespace huc {

CommitmentSets classify(const RelaxationSolution& relax, double eps_bin) {
  CommitmentSets sets;
  const int T = static_cast<int>(relax.x_frac.size());
  for (int t = 0; t < T; ++t) {
    const int nh = static_cast<int>(relax.x_frac[t].size());
    for (int h = 0; h < nh; ++h) {
      const auto& xs = relax.x_frac[t][h];
      int on = -1;
      for (size_t u = 0; u < xs.size(); ++u)
        if (xs[u] >= 1.0 - eps_bin) on = static_cast<int>(u);
      for (size_t u = 0; u < xs.size(); ++u) {
        const CommitmentSets::Item item{t, h, static_cast<int>(u)};
        if (on >= 0) {
          (static_cast<int>(u) == on ? sets.fixed_on : sets.fixed_off).push_back(item);
        } else if (xs[u] <= eps_bin) {
          sets.fixed_off.push_back(item);
        } else {
          sets.fractional.push_back(item);
        }
      }
    }
  }
  return sets;
}

std::vector<std::vector<double>> aggregate_dispatch(const RelaxationSolution& relax,
                                                    const HucInstance& inst) {
  const int T = static_cast<int>(relax.x_frac.size());
  std::vector<std::vector<double>> out(T);
  for (int t = 0; t < T; ++t) {
    const int nh = static_cast<int>(relax.x_frac[t].size());
    out[t].assign(nh, 0.0);
    for (int h = 0; h < nh; ++h)
      for (size_t u = 0; u < relax.x_frac[t][h].size(); ++u)
        out[t][h] += relax.dp[t][h][u] +
                     inst.plants[h].configs[u].p_min * relax.x_frac[t][h][u];
  }
  return out;
}

CommitmentSchedule CommitmentSchedule::from_configs(
    std::vector<std::vector<int>> config, const std::vector<int>& initial_config) {
  CommitmentSchedule s;
  s.config = std::move(config);
  const int T = static_cast<int>(s.config.size());
  const int nh = static_cast<int>(initial_config.size());
  s.startups.assign(T, std::vector<double>(nh, 0.0));
  for (int h = 0; h < nh; ++h) {
    int prev = initial_config[h];
    for (int t = 0; t < T; ++t) {
      s.startups[t][h] = std::max(0, s.config[t][h] - prev);
      prev = s.config[t][h];
    }
  }
  return s;
}

CommitmentSchedule CommitmentSchedule::from_configs(
    std::vector<std::vector<int>> config, const HucInstance& inst) {
  std::vector<int> init;
  for (const auto& p : inst.plants) init.push_back(p.initial_config);
  return from_configs(std::move(config), init);
}

void CommitmentSchedule::validate(const HucInstance& inst) const {
  if (static_cast<int>(config.size()) != inst.horizon)
    throw ValidationError("schedule horizon mismatch");
  for (int t = 0; t < inst.horizon; ++t) {
    if (config[t].size() != inst.plants.size())
      throw ValidationError("schedule plant count mismatch");
    for (size_t h = 0; h < inst.plants.size(); ++h) {
      const int u = config[t][h];
      if (u < 1 || u > static_cast<int>(inst.plants[h].configs.size()))
        throw ValidationError("schedule config out of range at t=" +
                              std::to_string(t + 1) + " h=" + std::to_string(h + 1));
      const int prev = t == 0 ? inst.plants[h].initial_config : config[t - 1][h];
      if (startups[t][h] < std::max(0, u - prev) - 1e-9)
        throw ValidationError("startup count below configuration increase at t=" +
                              std::to_string(t + 1) + " h=" + std::to_string(h + 1));
    }
  }
}

CommitmentSchedule schedule_from_sets(const CommitmentSets& sets,
                                      const HucInstance& inst) {
  std::vector<std::vector<int>> cfg(inst.horizon,
                                    std::vector<int>(inst.plants.size(), 0));
  for (const auto& it : sets.fixed_on) cfg[it.t][it.h] = it.u + 1;
  for (const auto& row : cfg)
    for (int v : row)
      if (v == 0)
        throw ValidationError("schedule_from_sets: undecided commitment present");
  return CommitmentSchedule::from_configs(std::move(cfg), inst);
}

MilpProblem build_commitment_milp(const HucInstance& inst,
                                  const CommitmentSets& sets,
                                  const std::vector<std::vector<double>>& dispatch) {
  MilpProblem milp;
  milp.horizon = inst.horizon;
  milp.n_plants = static_cast<int>(inst.plants.size());
  milp.decided.assign(inst.horizon, std::vector<int>(milp.n_plants, 0));
  for (const auto& it : sets.fixed_on) milp.decided[it.t][it.h] = it.u + 1;
  for (const auto& p : inst.plants) {
    milp.startup_cost.push_back(p.startup_cost);
    milp.initial_config.push_back(p.initial_config);
  }

  // candidate filter: the config's power range must cover the aggregated
  // dispatch (up to rounding dust)
  std::map<std::pair<int, int>, int> candidates_at;
  for (const auto& it : sets.fractional) {
    const UnitConfigCurve& c = inst.plants[it.h].configs[it.u];
    const double pstar = dispatch[it.t][it.h];
    const double tol = 1e-9 * std::max(1.0, std::abs(pstar));
    if (pstar < c.p_min - tol || pstar > c.p_min + c.dp_max + tol) continue;
    const double p_eval = std::clamp(pstar, c.p_min, c.p_min + c.dp_max);
    milp.binaries.push_back(
        {it, inst.plants[it.h].water_value * inst.theta * water_discharge(c, p_eval)});
    candidates_at[{it.t, it.h}]++;
  }
  // every undecided (t,h) must retain at least one candidate
  std::map<std::pair<int, int>, bool> undecided;
  for (const auto& it : sets.fractional) undecided[{it.t, it.h}] = true;
  for (const auto& [th, flag] : undecided)
    if (candidates_at.find(th) == candidates_at.end())
      throw InfeasibleRoundingError(
          th.first, th.second,
          "no candidate configuration covers dispatch " +
              std::to_string(dispatch[th.first][th.second]) + " MW at t=" +
              std::to_string(th.first + 1) + " h=" + std::to_string(th.second + 1));
  return milp;
}

double milp_objective(const MilpProblem& milp, const std::vector<int>& chosen) {
  double water = 0.0;
  // chosen[k] = 1 selects binary k
  std::vector<std::vector<int>> cfg(milp.horizon,
                                    std::vector<int>(milp.n_plants, 0));
  for (int t = 0; t < milp.horizon; ++t)
    for (int h = 0; h < milp.n_plants; ++h) cfg[t][h] = milp.decided[t][h];
  for (size_t k = 0; k < milp.binaries.size(); ++k) {
    if (!chosen[k]) continue;
    water += milp.binaries[k].cost;
    cfg[milp.binaries[k].item.t][milp.binaries[k].item.h] =
        milp.binaries[k].item.u + 1;
  }
  double startup = 0.0;
  for (int h = 0; h < milp.n_plants; ++h) {
    int prev = milp.initial_config[h];
    for (int t = 0; t < milp.horizon; ++t) {
      startup += milp.startup_cost[h] * std::max(0, cfg[t][h] - prev);
      prev = cfg[t][h];
    }
  }
  return water + startup;
}

namespace {

// LP relaxation of the commitment program: binaries in [0,1] with
// uniqueness rows, plus one startup variable and linking row per (t,h).
LpProblem milp_lp(const MilpProblem& milp) {
  LpProblem lp;
  const int nbin = static_cast<int>(milp.binaries.size());
  for (int k = 0; k < nbin; ++k) {
    const auto& it = milp.binaries[k].item;
    lp.vars.push_back("x_" + std::to_string(it.t + 1) + "_" +
                      std::to_string(it.h + 1) + "_" + std::to_string(it.u + 1));
    lp.costs.push_back(milp.binaries[k].cost);
  }
  std::vector<std::vector<int>> yvar(milp.horizon, std::vector<int>(milp.n_plants));
  for (int t = 0; t < milp.horizon; ++t)
    for (int h = 0; h < milp.n_plants; ++h) {
      yvar[t][h] = static_cast<int>(lp.vars.size());
      lp.vars.push_back("y_" + std::to_string(t + 1) + "_" + std::to_string(h + 1));
      lp.costs.push_back(milp.startup_cost[h]);
    }

  for (int k = 0; k < nbin; ++k) {
    LpProblem::Row ub;
    ub.name = lp.vars[k] + "_ub";
    ub.terms.push_back({k, 1.0});
    ub.rhs = 1.0;
    lp.rows.push_back(std::move(ub));
  }
  // uniqueness over the candidates of each undecided (t,h)
  std::map<std::pair<int, int>, std::vector<int>> members;
  for (int k = 0; k < nbin; ++k)
    members[{milp.binaries[k].item.t, milp.binaries[k].item.h}].push_back(k);
  for (const auto& [th, ks] : members) {
    LpProblem::Row row;
    row.name = "uniq_" + std::to_string(th.first + 1) + "_" +
               std::to_string(th.second + 1);
    for (int k : ks) row.terms.push_back({k, 1.0});
    row.rhs = 1.0;
    row.equality = true;
    lp.rows.push_back(std::move(row));
  }
  // startup linking rows: units(t) - units(t-1) <= y_t with decided hours
  // contributing constants on the right-hand side
  for (int t = 0; t < milp.horizon; ++t)
    for (int h = 0; h < milp.n_plants; ++h) {
      LpProblem::Row row;
      row.name = "startup_" + std::to_string(t + 1) + "_" + std::to_string(h + 1);
      double rhs = 0.0;
      if (milp.decided[t][h] > 0)
        rhs -= milp.decided[t][h];
      else
        for (int k : members.count({t, h}) ? members[{t, h}] : std::vector<int>{})
          row.terms.push_back({k, static_cast<double>(milp.binaries[k].item.u + 1)});
      if (t == 0) {
        rhs += milp.initial_config[h];
      } else if (milp.decided[t - 1][h] > 0) {
        rhs += milp.decided[t - 1][h];
      } else {
        for (int k : members.count({t - 1, h}) ? members[{t - 1, h}]
                                               : std::vector<int>{})
          row.terms.push_back({k, -static_cast<double>(milp.binaries[k].item.u + 1)});
      }
      row.terms.push_back({yvar[t][h], -1.0});
      row.rhs = rhs;
      std::sort(row.terms.begin(), row.terms.end(),
                [](const auto& a, const auto& b) { return a.var < b.var; });
      lp.rows.push_back(std::move(row));
    }
  return lp;
}

struct BnbNode {
  double bound = 0.0;
  int seq = 0;  // deterministic FIFO tie-break
  std::vector<std::pair<int, int>> pins;  // (binary index, 0/1)
  bool operator>(const BnbNode& o) const {
    return bound != o.bound ? bound > o.bound : seq > o.seq;
  }
};

}  // namespace

MilpResult solve_commitment_milp(const MilpProblem& milp) {
  const int nbin = static_cast<int>(milp.binaries.size());
  LpProblem base = milp_lp(milp);

  std::map<std::pair<int, int>, std::vector<int>> members;
  for (int k = 0; k < nbin; ++k)
    members[{milp.binaries[k].item.t, milp.binaries[k].item.h}].push_back(k);

  std::priority_queue<BnbNode, std::vector<BnbNode>, std::greater<>> open;
  open.push({-1e300, 0, {}});
  int seq = 1;
  int nodes = 0;
  double incumbent = 1e300;
  std::vector<int> best;

  SolverOptions opts;
  while (!open.empty()) {
    BnbNode node = open.top();
    open.pop();
    if (node.bound >= incumbent - 1e-9 * (1.0 + std::abs(incumbent))) continue;
    ++nodes;

    LpProblem lp = base;
    for (const auto& [k, val] : node.pins) {
      LpProblem::Row pin;
      pin.name = "pin_" + std::to_string(k);
      pin.terms.push_back({k, 1.0});
      pin.rhs = val;
      pin.equality = true;
      lp.rows.push_back(std::move(pin));
      if (val == 1)  // siblings forced off by uniqueness
        for (int s : members[{milp.binaries[k].item.t, milp.binaries[k].item.h}])
          if (s != k) {
            LpProblem::Row off;
            off.name = "pin_" + std::to_string(s);
            off.terms.push_back({s, 1.0});
            off.rhs = 0.0;
            off.equality = true;
            lp.rows.push_back(std::move(off));
          }
    }
    const LpSolution sol = solve_lp(lp, opts);
    if (sol.status == SolveStatus::Infeasible) continue;
    if (sol.status != SolveStatus::Optimal)
      throw SolverError("commitment LP node failed: " + to_string(sol.status));
    if (sol.objective >= incumbent - 1e-9 * (1.0 + std::abs(incumbent))) continue;

    // most fractional binary; binaries are ordered by (t,h,u), so scanning
    // with a strict improvement gives the lexicographic tie-break
    int branch = -1;
    double frac_best = defaults::kEpsBin;
    for (int k = 0; k < nbin; ++k) {
      const double frac = std::min(sol.values[k], 1.0 - sol.values[k]);
      if (frac > frac_best + 1e-12) {
        frac_best = frac;
        branch = k;
      }
    }
    if (branch < 0) {
      // integral: evaluate exactly
      std::vector<int> chosen(nbin, 0);
      for (int k = 0; k < nbin; ++k) chosen[k] = sol.values[k] >= 0.5 ? 1 : 0;
      const double exact = milp_objective(milp, chosen);
      if (exact < incumbent) {
        incumbent = exact;
        best = chosen;
      }
      continue;
    }
    for (int val : {1, 0}) {
      BnbNode child;
      child.bound = sol.objective;
      child.seq = seq++;
      child.pins = node.pins;
      child.pins.push_back({branch, val});
      open.push(std::move(child));
    }
  }
  if (best.empty() && nbin > 0)
    throw InfeasibleRoundingError(-1, -1, "commitment program has no feasible assignment");

  if (best.empty()) best.assign(nbin, 0);
  MilpResult out;
  out.nodes = nodes;
  std::vector<std::vector<int>> cfg = milp.decided;
  for (int k = 0; k < nbin; ++k)
    if (best[k])
      cfg[milp.binaries[k].item.t][milp.binaries[k].item.h] =
          milp.binaries[k].item.u + 1;
  out.objective = milp_objective(milp, best);
  // remaining zeros can only appear if a (t,h) was never classified
  for (const auto& row : cfg)
    for (int v : row)
      if (v == 0)
        throw ValidationError("commitment solve left an undecided (t,h)");
  out.schedule = CommitmentSchedule::from_configs(std::move(cfg), milp.initial_config);
  return out;
}

}  // namespace huc
