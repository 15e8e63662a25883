#pragma once

// Shared helpers for the test suites: hand-built tiny instances, an
// independent feasibility checker for mixed-integer points (complex power
// arithmetic and literal reservoir simulation, written separately from the
// library's stencil machinery), and the rank-1 lift of a feasible point
// into the relaxation's block variables.

#include <complex>
#include <string>
#include <vector>

#include "huc/model.hpp"
#include "huc/relaxation.hpp"
#include "huc/rounding.hpp"

namespace huc::testing {

// Single bus, single plant, one or two trivial configs.
inline HucInstance tiny_instance(int horizon = 1, int configs = 1,
                                 double load = 50.0) {
  HucInstance inst;
  inst.name = "tiny";
  inst.horizon = horizon;
  inst.base_mva = 100.0;
  Bus b1{1, 0.94, 1.06, std::vector<double>(horizon, load / 100.0),
         std::vector<double>(horizon, 0.3 * load / 100.0)};
  Bus b2{2, 0.94, 1.06, std::vector<double>(horizon, 0.0),
         std::vector<double>(horizon, 0.0)};
  inst.network.buses = {b1, b2};
  Line l{1, 2, 0.01, 0.06};
  const double z2 = l.r * l.r + l.x * l.x;
  l.g = l.r / z2;
  l.b = -l.x / z2;
  l.flow_limit = 1.0;  // p.u. (already converted)
  inst.network.lines = {l};
  inst.network.slack_bus = 1;
  inst.network.slack_vm = 1.0;

  HydroPlant p;
  p.id = 1;
  p.bus = 1;
  p.water_value = 9000.0;
  p.startup_cost = 500.0;
  p.v0 = 100.0;
  p.v_min = 20.0;
  p.v_max = 300.0;
  p.spillage = 1.0;
  p.inflows.assign(horizon, 80.0);
  p.initial_config = 1;
  for (int u = 1; u <= configs; ++u) {
    UnitConfigCurve c;
    c.units = u;
    c.alpha = 6e-4 / u;
    c.beta = 1.05;
    c.gamma = 6.0 * u;
    c.p_min = 20.0 * u;
    c.dp_max = 38.0 * u;
    c.q_min = -20.0 * u;
    c.q_max = 35.0 * u;
    p.configs.push_back(c);
  }
  inst.plants = {p};
  inst.validate();
  return inst;
}

// A full candidate point of the original mixed-integer model.
struct Point {
  CommitmentSchedule schedule;
  std::vector<std::vector<double>> p;  // [t][h] MW
  std::vector<std::vector<double>> q;  // [t][h] MVAr
  std::vector<std::vector<double>> e;  // [t][bus] p.u.
  std::vector<std::vector<double>> f;
};

// Max violation across every constraint of the original model, computed
// with complex arithmetic and a literal reservoir volume simulation.
inline double max_violation(const HucInstance& inst, const Point& pt) {
  double worst = 0.0;
  const int T = inst.horizon;
  const int nb = static_cast<int>(inst.network.buses.size());
  const int nh = static_cast<int>(inst.plants.size());
  const double sb = inst.base_mva;
  using cd = std::complex<double>;

  for (int t = 0; t < T; ++t) {
    std::vector<cd> v(nb);
    for (int i = 0; i < nb; ++i) v[i] = {pt.e[t][i], pt.f[t][i]};
    // slack pins
    const int slack = inst.network.slack_index();
    worst = std::max(worst, std::abs(std::abs(v[slack]) - inst.network.slack_vm));
    worst = std::max(worst, std::abs(pt.f[t][slack]));
    // bus balances and voltage boxes
    for (int i = 0; i < nb; ++i) {
      cd inj = 0.0;
      for (const Line& l : inst.network.lines) {
        const int a = inst.network.bus_index(l.from);
        const int c = inst.network.bus_index(l.to);
        if (a != i && c != i) continue;
        const int other = a == i ? c : a;
        const cd y{l.g, l.b};
        inj += v[i] * std::conj(y * (v[i] - v[other]));
      }
      double pgen = 0.0, qgen = 0.0;
      for (int h = 0; h < nh; ++h)
        if (inst.network.bus_index(inst.plants[h].bus) == i) {
          pgen += pt.p[t][h];
          qgen += pt.q[t][h];
        }
      worst = std::max(worst, std::abs(pgen / sb - inj.real() -
                                       inst.network.buses[i].p_load[t]));
      worst = std::max(worst, std::abs(qgen / sb - inj.imag() -
                                       inst.network.buses[i].q_load[t]));
      const double vm = std::abs(v[i]);
      worst = std::max(worst, inst.network.buses[i].v_min - vm);
      worst = std::max(worst, vm - inst.network.buses[i].v_max);
    }
    // flow limits, both directions of the defining orientation
    for (const Line& l : inst.network.lines) {
      const int a = inst.network.bus_index(l.from);
      const int c = inst.network.bus_index(l.to);
      const cd y{l.g, l.b};
      const double pij = (v[a] * std::conj(y * (v[a] - v[c]))).real();
      worst = std::max(worst, std::abs(pij) - l.flow_limit);
    }
    // generation ranges of the committed configuration
    for (int h = 0; h < nh; ++h) {
      const UnitConfigCurve& c =
          inst.plants[h].configs[pt.schedule.config[t][h] - 1];
      worst = std::max(worst, c.p_min - pt.p[t][h]);
      worst = std::max(worst, pt.p[t][h] - (c.p_min + c.dp_max));
      worst = std::max(worst, c.q_min - pt.q[t][h]);
      worst = std::max(worst, pt.q[t][h] - c.q_max);
    }
  }
  // startup counts
  for (int h = 0; h < nh; ++h) {
    int prev = inst.plants[h].initial_config;
    for (int t = 0; t < T; ++t) {
      worst = std::max(worst, static_cast<double>(pt.schedule.config[t][h] - prev) -
                                  pt.schedule.startups[t][h]);
      prev = pt.schedule.config[t][h];
    }
  }
  // energy targets
  for (int h = 0; h < nh; ++h) {
    if (!inst.plants[h].target) continue;
    double sum = 0.0;
    for (int t = 0; t < T; ++t) sum += pt.p[t][h];
    worst = std::max(worst, std::abs(sum - *inst.plants[h].target));
  }
  // reservoir volumes, literal hour-by-hour simulation
  for (int h = 0; h < nh; ++h) {
    const HydroPlant& pl = inst.plants[h];
    double volume = pl.v0;
    for (int t = 0; t < T; ++t) {
      double net = pl.inflows[t] - pl.spillage;
      const UnitConfigCurve& c = pl.configs[pt.schedule.config[t][h] - 1];
      net -= c.alpha * pt.p[t][h] * pt.p[t][h] + c.beta * pt.p[t][h] + c.gamma;
      for (size_t hu = 0; hu < inst.plants.size(); ++hu) {
        const HydroPlant& up = inst.plants[hu];
        if (!up.downstream || up.downstream->first != pl.id) continue;
        const int src = t - up.downstream->second;
        if (src < 0) continue;
        const UnitConfigCurve& cu = up.configs[pt.schedule.config[src][hu] - 1];
        net += cu.alpha * pt.p[src][hu] * pt.p[src][hu] + cu.beta * pt.p[src][hu] +
               cu.gamma + up.spillage;
      }
      volume += inst.theta * net;
      worst = std::max(worst, pl.v_min - volume);
      worst = std::max(worst, volume - pl.v_max);
    }
  }
  return worst;
}

// Rank-1 lift of a feasible point into the relaxation's variables.
struct Lift {
  std::vector<SymMatrix> blocks;
  std::vector<double> vars;
};

inline Lift lift_point(const HucInstance& inst, const Relaxation& rel,
                       const Point& pt) {
  Lift lift;
  for (const auto& b : rel.prob.blocks) lift.blocks.emplace_back(b.dim);
  lift.vars.assign(rel.prob.nonneg_vars.size(), 0.0);
  const int nb = static_cast<int>(inst.network.buses.size());
  for (int t = 0; t < inst.horizon; ++t) {
    for (size_t h = 0; h < inst.plants.size(); ++h) {
      const int chosen = pt.schedule.config[t][h] - 1;
      const UnitConfigCurve& c = inst.plants[h].configs[chosen];
      const double dp = (pt.p[t][h] - c.p_min) / inst.base_mva;
      const double dq = (pt.q[t][h] - c.q_min) / inst.base_mva;
      SymMatrix& blk =
          lift.blocks[rel.x_block(t, static_cast<int>(h), chosen)];
      const double xi[3] = {dp, 1.0, dq};
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) blk.set(i, j, xi[i] * xi[j]);
      lift.vars[rel.y_var(t, static_cast<int>(h))] = pt.schedule.startups[t][h];
    }
    SymMatrix& vb = lift.blocks[rel.v_block(t)];
    std::vector<double> v(2 * nb);
    for (int i = 0; i < nb; ++i) {
      v[i] = pt.e[t][i];
      v[nb + i] = pt.f[t][i];
    }
    for (int i = 0; i < 2 * nb; ++i)
      for (int j = i; j < 2 * nb; ++j) vb.set(i, j, v[i] * v[j]);
  }
  return lift;
}

// Max violation of the lifted point against every emitted relaxation row.
inline double lift_violation(const Relaxation& rel, const Lift& lift) {
  double worst = 0.0;
  for (const auto& c : rel.prob.eq_constraints) {
    const double lhs = evaluate_constraint(c, lift.blocks, lift.vars);
    worst = std::max(worst,
                     std::abs(lhs - c.rhs) / std::max(1.0, std::abs(c.rhs)));
  }
  for (const auto& c : rel.prob.ineq_constraints) {
    const double lhs = evaluate_constraint(c, lift.blocks, lift.vars);
    worst =
        std::max(worst, (lhs - c.rhs) / std::max(1.0, std::abs(c.rhs)));
  }
  return worst;
}

}  // namespace huc::testing
