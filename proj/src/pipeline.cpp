#include "huc/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <iostream>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "huc/errors.hpp"

namespace huc {

namespace {
using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SolverOptions solver_opts(const PipelineOptions& opts) {
  SolverOptions s;
  s.tol = opts.solver_tol;
  s.max_iter = opts.solver_max_iter;
  return s;
}
}  // namespace

double schedule_cost(const HucInstance& inst, const CommitmentSchedule& schedule,
                     const std::vector<std::vector<double>>& p) {
  double cost = 0.0;
  for (int t = 0; t < inst.horizon; ++t)
    for (size_t h = 0; h < inst.plants.size(); ++h) {
      const HydroPlant& pl = inst.plants[h];
      const UnitConfigCurve& c = pl.configs[schedule.config[t][h] - 1];
      const double pw = std::clamp(p[t][h], c.p_min, c.p_min + c.dp_max);
      cost += pl.water_value * inst.theta * water_discharge(c, pw);
      cost += pl.startup_cost * schedule.startups[t][h];
    }
  return cost;
}

double solve_relaxation_bound(const HucInstance& inst, const PipelineOptions& opts) {
  RelaxOptions ropts;
  ropts.xdiag_cut = opts.xdiag_cut;
  const Relaxation rel = build_relaxation(inst, ropts);
  const SdpSolution sol = solve(rel.prob, solver_opts(opts));
  const RelaxationSolution rsol = extract(sol, rel, inst);
  return rsol.objective;
}

ConstraintSet constraint_set_for_hour(const OpfProblem& opf,
                                      const std::vector<SymMatrix>& z_blocks,
                                      int t, double active_tol) {
  ConstraintSet cons;
  const int blk = opf.hour_block(t);
  auto restriction = [&](const SdpBlockProblem::Constraint& c) -> const SymMatrix* {
    for (const auto& term : c.terms)
      if (term.block == blk) return &term.coeff;
    return nullptr;
  };
  auto kind_of = [](const std::string& name) {
    if (name.rfind("pbal", 0) == 0 || name.rfind("qbal", 0) == 0)
      return ConstraintSet::Kind::Balance;
    if (name.rfind("flow", 0) == 0) return ConstraintSet::Kind::Flow;
    return ConstraintSet::Kind::Pin;
  };
  // stencils are normalized to unit max entry so the preserved residuals are
  // on a common scale (the null space is unchanged by row scaling)
  auto push = [&](const std::string& name, ConstraintSet::Kind kind,
                  const SymMatrix& m) {
    SymMatrix scaled = m;
    const double a = scaled.max_abs();
    if (a > 0.0) scaled *= 1.0 / a;
    cons.items.push_back({name, kind, scaled, frobenius(scaled, z_blocks[blk])});
  };
  for (const auto& c : opf.prob.eq_constraints) {
    const SymMatrix* m = restriction(c);
    if (!m) continue;
    push(c.name, kind_of(c.name), *m);
  }
  for (const auto& c : opf.prob.ineq_constraints) {
    const SymMatrix* m = restriction(c);
    if (!m) continue;
    double lhs = 0.0;
    for (const auto& term : c.terms) lhs += frobenius(term.coeff, z_blocks[term.block]);
    const double slack = c.rhs - lhs;
    if (slack <= active_tol * std::max(1.0, std::abs(c.rhs)))
      push(c.name, kind_of(c.name), *m);
  }
  // preserving the hour's objective stencil keeps the water cost intact
  for (const auto& term : opf.prob.objective)
    if (term.block == blk) push("objective", ConstraintSet::Kind::Pin, term.coeff);
  return cons;
}

ConstraintSet constraint_set_for_hour(const OpfProblem& opf, const SdpSolution& sol,
                                      int t, double active_tol) {
  return constraint_set_for_hour(opf, sol.block_values, t, active_tol);
}

HucSolution solve_rounding_heuristic(const HucInstance& inst,
                                     const PipelineOptions& opts) {
  const auto t_start = Clock::now();
  HucSolution out;
  out.method = "rh";

  // relaxation
  auto stage = Clock::now();
  RelaxOptions ropts;
  ropts.xdiag_cut = opts.xdiag_cut;
  Relaxation rel;
  RelaxationSolution relax;
  try {
    rel = build_relaxation(inst, ropts);
    relax = extract(solve(rel.prob, solver_opts(opts)), rel, inst);
  } catch (const Error& e) {
    throw StageError("relax", e.what());
  }
  out.lower_bound = relax.objective;
  out.timings.relax_s = seconds_since(stage);

  // rounding
  stage = Clock::now();
  CommitmentSchedule schedule;
  try {
    const CommitmentSets sets = classify(relax, opts.eps_bin);
    if (sets.fractional.empty()) {
      schedule = schedule_from_sets(sets, inst);
    } else {
      const auto dispatch = aggregate_dispatch(relax, inst);
      const MilpProblem milp = build_commitment_milp(inst, sets, dispatch);
      MilpResult res = solve_commitment_milp(milp);
      schedule = std::move(res.schedule);
      out.nodes = res.nodes;
    }
  } catch (const Error& e) {
    throw StageError("round", e.what());
  }
  out.timings.round_s = seconds_since(stage);
  out.schedule = schedule;

  // dispatch re-optimization
  stage = Clock::now();
  OpfProblem opf;
  OpfSolution osol;
  try {
    opf = build_opf(inst, schedule);
    osol = solve_opf(inst, opf, solver_opts(opts));
  } catch (const Error& e) {
    throw StageError("reopt", e.what());
  }
  out.timings.reopt_s = seconds_since(stage);

  // per-hour rank reduction
  stage = Clock::now();
  std::vector<SymMatrix> reduced = osol.z_blocks;
  try {
    for (int t = 0; t < inst.horizon; ++t) {
      const ConstraintSet cons = constraint_set_for_hour(opf, osol.z_blocks, t);
      RankReductionReport rep =
          reduce(osol.z_blocks[opf.hour_block(t)], cons, opts.stall_budget);
      reduced[opf.hour_block(t)] = rep.final_z;
      out.rank_reports.push_back(std::move(rep));
    }
  } catch (const Error& e) {
    throw StageError("rankred", e.what());
  }
  out.timings.rankred_s = seconds_since(stage);

  // final primal quantities from the reduced blocks
  const double resid_before = osol.balance_residual;
  const double resid_after = rank1_balance_residual(inst, opf, reduced);
  if (opts.verbose)
    std::cerr << "balance residual before/after rank reduction: " << resid_before
              << " / " << resid_after << "\n";
  out.p.assign(inst.horizon, std::vector<double>(inst.plants.size(), 0.0));
  out.q.assign(inst.horizon, std::vector<double>(inst.plants.size(), 0.0));
  out.e.assign(inst.horizon, std::vector<double>(inst.network.buses.size(), 0.0));
  out.f.assign(inst.horizon, std::vector<double>(inst.network.buses.size(), 0.0));
  for (int t = 0; t < inst.horizon; ++t) {
    const SymMatrix& z = reduced[opf.hour_block(t)];
    for (size_t h = 0; h < inst.plants.size(); ++h) {
      out.p[t][h] = inst.base_mva * z(0, opf.p_idx(static_cast<int>(h)));
      out.q[t][h] = inst.base_mva * z(0, opf.q_idx(static_cast<int>(h)));
    }
    extract_voltages(inst, opf, z, out.e[t], out.f[t]);
  }
  out.objective = schedule_cost(inst, schedule, out.p);
  out.gap = out.objective - out.lower_bound;
  out.total_time_s = seconds_since(t_start);
  return out;
}

namespace {

struct SearchNode {
  double bound = 0.0;
  int seq = 0;
  // pins as (t, h, u, value); value 1 also pins the siblings to 0
  std::vector<std::array<int, 4>> pins;
  bool operator>(const SearchNode& o) const {
    return bound != o.bound ? bound > o.bound : seq > o.seq;
  }
};

}  // namespace

HucSolution solve_exact_bnb(const HucInstance& inst, const PipelineOptions& opts) {
  const auto t_start = Clock::now();
  HucSolution out;
  out.method = "bnb";

  RelaxOptions ropts;
  ropts.xdiag_cut = opts.xdiag_cut;
  const Relaxation rel = build_relaxation(inst, ropts);

  std::priority_queue<SearchNode, std::vector<SearchNode>, std::greater<>> open;
  open.push({-1e300, 0, {}});
  int seq = 1;
  double incumbent = 1e300;
  std::optional<RelaxationSolution> best;
  double root_bound = -1e300;
  bool budget_hit = false;

  while (!open.empty()) {
    if (out.nodes >= opts.node_budget || seconds_since(t_start) > opts.time_budget_s) {
      budget_hit = true;
      break;
    }
    SearchNode node = open.top();
    open.pop();
    if (node.bound >= incumbent - 1e-9 * (1.0 + std::abs(incumbent))) continue;
    ++out.nodes;

    SdpBlockProblem prob = rel.prob;
    for (const auto& pin : node.pins) {
      prob.eq_constraints.push_back(
          pin_commitment(rel, pin[0], pin[1], pin[2], pin[3]));
      prob.eq_constraints.back().name += "_n" + std::to_string(seq) + "_" +
                                         std::to_string(prob.eq_constraints.size());
      if (pin[3] == 1)
        for (int u = 0; u < rel.config_count[pin[1]]; ++u) {
          if (u == pin[2]) continue;
          prob.eq_constraints.push_back(pin_commitment(rel, pin[0], pin[1], u, 0.0));
          prob.eq_constraints.back().name += "_s" + std::to_string(seq) + "_" +
                                             std::to_string(prob.eq_constraints.size());
        }
    }
    const SdpSolution sol = solve(prob, solver_opts(opts));
    if (sol.status == SolveStatus::Infeasible) continue;
    RelaxationSolution rsol;
    try {
      rsol = extract(sol, rel, inst);
    } catch (const Error& e) {
      throw StageError("bnb", std::string("node solve failed: ") + e.what());
    }
    if (node.pins.empty()) {
      root_bound = rsol.objective;
      out.lower_bound = root_bound;
    }
    if (rsol.objective >= incumbent - 1e-9 * (1.0 + std::abs(incumbent))) continue;

    // most fractional commitment, lexicographic tie-break by scan order
    int bt = -1, bh = -1, bu = -1;
    double frac_best = opts.eps_bin;
    for (int t = 0; t < inst.horizon; ++t)
      for (size_t h = 0; h < inst.plants.size(); ++h)
        for (size_t u = 0; u < rsol.x_frac[t][h].size(); ++u) {
          const double x = rsol.x_frac[t][h][u];
          const double frac = std::min(x, 1.0 - x);
          if (frac > frac_best + 1e-12) {
            frac_best = frac;
            bt = t;
            bh = static_cast<int>(h);
            bu = static_cast<int>(u);
          }
        }
    if (bt < 0) {
      // integral: candidate incumbent
      incumbent = rsol.objective;
      best = std::move(rsol);
      continue;
    }
    for (int val : {1, 0}) {
      SearchNode child;
      child.bound = rsol.objective;
      child.seq = seq++;
      child.pins = node.pins;
      child.pins.push_back({bt, bh, bu, val});
      open.push(std::move(child));
    }
  }

  if (!best)
    throw StageError("bnb", budget_hit ? "budget exhausted before any incumbent"
                                       : "no feasible schedule found");
  out.certified = !budget_hit;
  // the reported lower bound and gap are against the root relaxation, the
  // benchmark tables' convention
  out.objective = incumbent;
  out.gap = incumbent - out.lower_bound;

  // primal quantities from the incumbent node
  const RelaxationSolution& rsol = *best;
  std::vector<std::vector<int>> cfg(inst.horizon,
                                    std::vector<int>(inst.plants.size(), 1));
  for (int t = 0; t < inst.horizon; ++t)
    for (size_t h = 0; h < inst.plants.size(); ++h) {
      int arg = 0;
      for (size_t u = 1; u < rsol.x_frac[t][h].size(); ++u)
        if (rsol.x_frac[t][h][u] > rsol.x_frac[t][h][arg]) arg = static_cast<int>(u);
      cfg[t][h] = arg + 1;
    }
  out.schedule = CommitmentSchedule::from_configs(std::move(cfg), inst);
  out.p = rsol.dispatch;
  out.q.assign(inst.horizon, std::vector<double>(inst.plants.size(), 0.0));
  for (int t = 0; t < inst.horizon; ++t)
    for (size_t h = 0; h < inst.plants.size(); ++h)
      for (size_t u = 0; u < rsol.x_frac[t][h].size(); ++u)
        out.q[t][h] += rsol.dq[t][h][u] +
                       inst.plants[h].configs[u].q_min * rsol.x_frac[t][h][u];
  out.e = rsol.volt_e;
  out.f = rsol.volt_f;
  out.total_time_s = seconds_since(t_start);
  return out;
}

std::string BenchReport::to_text() const {
  std::ostringstream os;
  os << "instance            method   objective        gap(abs)    gap(rel)  time(s)   notes\n";
  for (const auto& row : rows) {
    for (const auto& e : row.entries) {
      char line[256];
      if (e.ok)
        std::snprintf(line, sizeof(line),
                      "%-19s %-8s %-16.2f %-11.2f %-9.5f%% %-9.2f %s%s\n",
                      row.name.c_str(), e.method.c_str(), e.objective, e.gap_abs,
                      100.0 * e.gap_rel, e.time_s, e.certified ? "" : "budget ",
                      e.nodes > 0 ? ("nodes=" + std::to_string(e.nodes)).c_str() : "");
      else
        std::snprintf(line, sizeof(line), "%-19s %-8s FAILED: %s\n",
                      row.name.c_str(), e.method.c_str(), e.error.c_str());
      os << line;
    }
    if (row.schedule_hamming)
      os << "  schedule difference bnb vs rh: " << *row.schedule_hamming
         << " commitments\n";
  }
  return os.str();
}

std::string BenchReport::to_json() const {
  nlohmann::json j;
  j["instances"] = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json r;
    r["name"] = row.name;
    r["relaxation_value"] = row.relaxation_value;
    if (row.schedule_hamming) r["schedule_hamming"] = *row.schedule_hamming;
    r["methods"] = nlohmann::json::object();
    for (const auto& e : row.entries) {
      nlohmann::json m;
      m["ok"] = e.ok;
      if (e.ok) {
        m["objective"] = e.objective;
        m["gap_abs"] = e.gap_abs;
        m["gap_rel"] = e.gap_rel;
        m["time_s"] = e.time_s;
        m["nodes"] = e.nodes;
        m["certified"] = e.certified;
      } else {
        m["error"] = e.error;
      }
      r["methods"][e.method] = std::move(m);
    }
    j["instances"].push_back(std::move(r));
  }
  return j.dump(2) + "\n";
}

BenchReport bench(const std::vector<BenchInstance>& instances,
                  const std::vector<std::string>& methods,
                  const PipelineOptions& opts, int jobs) {
  BenchReport report;
  report.rows.resize(instances.size());

  auto run_one = [&](size_t idx) {
    const BenchInstance& bi = instances[idx];
    BenchRow& row = report.rows[idx];
    row.name = bi.name;
    double relax_value = 0.0;
    bool have_relax = false;
    std::optional<CommitmentSchedule> sched_rh, sched_bnb;
    for (const std::string& method : methods) {
      BenchEntry entry;
      entry.method = method;
      const auto t0 = Clock::now();
      try {
        if (method == "sdp") {
          relax_value = solve_relaxation_bound(bi.instance, opts);
          have_relax = true;
          entry.objective = relax_value;
        } else if (method == "rh") {
          const HucSolution s = solve_rounding_heuristic(bi.instance, opts);
          entry.objective = s.objective;
          entry.gap_abs = s.objective - s.lower_bound;
          entry.nodes = s.nodes;
          if (!have_relax) {
            relax_value = s.lower_bound;
            have_relax = true;
          }
          sched_rh = s.schedule;
        } else if (method == "bnb") {
          const HucSolution s = solve_exact_bnb(bi.instance, opts);
          entry.objective = s.objective;
          entry.gap_abs = s.objective - s.lower_bound;
          entry.nodes = s.nodes;
          entry.certified = s.certified;
          if (!have_relax) {
            relax_value = s.lower_bound;
            have_relax = true;
          }
          sched_bnb = s.schedule;
        } else {
          throw Error("unknown method '" + method + "'");
        }
        entry.ok = true;
      } catch (const std::exception& e) {
        entry.ok = false;
        entry.error = e.what();
      }
      entry.time_s = seconds_since(t0);
      row.entries.push_back(std::move(entry));
    }
    row.relaxation_value = relax_value;
    for (auto& e : row.entries)
      if (e.ok && e.method != "sdp" && have_relax && relax_value != 0.0) {
        e.gap_abs = e.objective - relax_value;
        e.gap_rel = e.gap_abs / std::abs(relax_value);
      }
    if (sched_rh && sched_bnb) {
      int ham = 0;
      for (int t = 0; t < bi.instance.horizon; ++t)
        for (size_t h = 0; h < bi.instance.plants.size(); ++h)
          if (sched_rh->config[t][h] != sched_bnb->config[t][h]) ++ham;
      row.schedule_hamming = ham;
    }
  };

  if (jobs <= 1) {
    for (size_t i = 0; i < instances.size(); ++i) run_one(i);
  } else {
    std::vector<std::future<void>> futs;
    std::atomic<size_t> next{0};
    for (int j = 0; j < jobs; ++j)
      futs.push_back(std::async(std::launch::async, [&]() {
        for (size_t i = next.fetch_add(1); i < instances.size();
             i = next.fetch_add(1))
          run_one(i);
      }));
    for (auto& f : futs) f.get();
  }
  return report;
}

}  // namespace huc
