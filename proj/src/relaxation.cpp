#include "huc/relaxation.hpp"

#include <cmath>
#include <string>

#include "huc/acflow.hpp"
#include "huc/errors.hpp"

namespace huc {

namespace {

std::string idx3(const char* base, int t, int h, int u) {
  return std::string(base) + "_" + std::to_string(t + 1) + "_" +
         std::to_string(h + 1) + "_" + std::to_string(u + 1);
}
std::string idx2(const char* base, int a, int b) {
  return std::string(base) + "_" + std::to_string(a + 1) + "_" + std::to_string(b + 1);
}

// discharge stencil of one (t,h,u) block in shifted coordinates; the block
// stores the power deviation in per-unit (dP = sb * dp), which keeps all
// block entries near unity
SymMatrix discharge_stencil(const UnitConfigCurve& c, double sb, double scale) {
  const ShiftedCurve s = shifted_curve(c);
  SymMatrix m(3);
  m.set(0, 0, s.alpha * sb * sb * scale);
  m.set(0, 1, 0.5 * s.beta * sb * scale);
  m.set(1, 1, s.gamma * scale);
  return m;
}

}  // namespace

Relaxation build_relaxation(const HucInstance& inst, const RelaxOptions& opts) {
  inst.validate();
  Relaxation rel;
  const int T = inst.horizon;
  const int nh = static_cast<int>(inst.plants.size());
  const int nb = static_cast<int>(inst.network.buses.size());
  const double sb = inst.base_mva;
  rel.horizon = T;
  rel.n_buses = nb;
  rel.config_count.resize(nh);
  rel.config_offset.resize(nh);
  for (int h = 0; h < nh; ++h) {
    rel.config_offset[h] = rel.total_configs;
    rel.config_count[h] = static_cast<int>(inst.plants[h].configs.size());
    rel.total_configs += rel.config_count[h];
  }

  SdpBlockProblem& p = rel.prob;
  for (int t = 0; t < T; ++t)
    for (int h = 0; h < nh; ++h)
      for (int u = 0; u < rel.config_count[h]; ++u)
        p.blocks.push_back({idx3("x", t, h, u), 3});
  for (int t = 0; t < T; ++t)
    p.blocks.push_back({"v_" + std::to_string(t + 1), 2 * nb});
  for (int t = 0; t < T; ++t)
    for (int h = 0; h < nh; ++h) p.nonneg_vars.push_back(idx2("y", t, h));

  // objective: water cost (water value x volume conversion x discharge)
  // plus startup costs
  for (int t = 0; t < T; ++t)
    for (int h = 0; h < nh; ++h) {
      const HydroPlant& pl = inst.plants[h];
      for (int u = 0; u < rel.config_count[h]; ++u)
        p.objective.push_back(
            {rel.x_block(t, h, u),
             discharge_stencil(pl.configs[u], sb, pl.water_value * inst.theta)});
    }
  p.objective_lin.assign(p.nonneg_vars.size(), 0.0);
  for (int t = 0; t < T; ++t)
    for (int h = 0; h < nh; ++h)
      p.objective_lin[rel.y_var(t, h)] = inst.plants[h].startup_cost;

  // plants per bus index
  std::vector<std::vector<int>> plants_at(nb);
  for (int h = 0; h < nh; ++h)
    plants_at[inst.network.bus_index(inst.plants[h].bus)].push_back(h);

  const int slack = inst.network.slack_index();

  // power balance per (hour, bus): generation in per-unit minus the line
  // injections equals the load
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < nb; ++i) {
      SdpBlockProblem::Constraint cp, cq;
      cp.name = idx2("pbal", t, i);
      cq.name = idx2("qbal", t, i);
      for (int h : plants_at[i]) {
        const HydroPlant& pl = inst.plants[h];
        for (int u = 0; u < rel.config_count[h]; ++u) {
          SymMatrix mp(3), mq(3);
          mp.set(0, 1, 0.5);
          mp.set(1, 1, pl.configs[u].p_min / sb);
          mq.set(1, 2, 0.5);
          mq.set(1, 1, pl.configs[u].q_min / sb);
          cp.terms.push_back({rel.x_block(t, h, u), mp});
          cq.terms.push_back({rel.x_block(t, h, u), mq});
        }
      }
      SymMatrix vp(2 * nb), vq(2 * nb);
      for (const Line& l : inst.network.lines) {
        const int a = inst.network.bus_index(l.from);
        const int c = inst.network.bus_index(l.to);
        if (a == i) {
          add_active_flow(vp, nb, 0, a, c, l.g, l.b, -1.0);
          add_reactive_flow(vq, nb, 0, a, c, l.g, l.b, -1.0);
        } else if (c == i) {
          add_active_flow(vp, nb, 0, c, a, l.g, l.b, -1.0);
          add_reactive_flow(vq, nb, 0, c, a, l.g, l.b, -1.0);
        }
      }
      cp.terms.push_back({rel.v_block(t), vp});
      cq.terms.push_back({rel.v_block(t), vq});
      cp.rhs = inst.network.buses[i].p_load[t];
      cq.rhs = inst.network.buses[i].q_load[t];
      p.eq_constraints.push_back(std::move(cp));
      p.eq_constraints.push_back(std::move(cq));
    }

  // configuration uniqueness per (hour, plant)
  for (int t = 0; t < T; ++t)
    for (int h = 0; h < nh; ++h) {
      SdpBlockProblem::Constraint c;
      c.name = idx2("uniq", t, h);
      for (int u = 0; u < rel.config_count[h]; ++u) {
        SymMatrix m(3);
        m.set(1, 1, 1.0);
        c.terms.push_back({rel.x_block(t, h, u), m});
      }
      c.rhs = 1.0;
      p.eq_constraints.push_back(std::move(c));
    }

  // slack bus voltage: real part squared pinned to the magnitude squared,
  // imaginary part pinned to zero
  for (int t = 0; t < T; ++t) {
    SdpBlockProblem::Constraint ce, cf;
    ce.name = "vslack_e_" + std::to_string(t + 1);
    cf.name = "vslack_f_" + std::to_string(t + 1);
    SymMatrix me(2 * nb), mf(2 * nb);
    me.set(slack, slack, 1.0);
    mf.set(nb + slack, nb + slack, 1.0);
    ce.terms.push_back({rel.v_block(t), me});
    cf.terms.push_back({rel.v_block(t), mf});
    ce.rhs = inst.network.slack_vm * inst.network.slack_vm;
    cf.rhs = 0.0;
    p.eq_constraints.push_back(std::move(ce));
    p.eq_constraints.push_back(std::move(cf));
  }

  // energy targets (MWh over the horizon) for every plant but the slack plant
  for (int h = 0; h < nh; ++h) {
    const HydroPlant& pl = inst.plants[h];
    if (!pl.target) continue;
    SdpBlockProblem::Constraint c;
    c.name = "target_" + std::to_string(h + 1);
    for (int t = 0; t < T; ++t)
      for (int u = 0; u < rel.config_count[h]; ++u) {
        SymMatrix m(3);
        m.set(0, 1, 0.5 * sb);
        m.set(1, 1, pl.configs[u].p_min);
        c.terms.push_back({rel.x_block(t, h, u), m});
      }
    c.rhs = *pl.target;
    p.eq_constraints.push_back(std::move(c));
  }

  // generation limits per block. The linking rows bound the lifted cross
  // terms (dP*x in [0, dPmax*x], dQ*x likewise); the cap rows bound the
  // squared diagonals, which otherwise never appear in any constraint.
  for (int t = 0; t < T; ++t)
    for (int h = 0; h < nh; ++h)
      for (int u = 0; u < rel.config_count[h]; ++u) {
        const UnitConfigCurve& cfg = inst.plants[h].configs[u];
        const double dpmax = cfg.dp_max / sb;
        const double dqmax = (cfg.q_max - cfg.q_min) / sb;
        const int blk = rel.x_block(t, h, u);
        auto add_ineq = [&](const char* base, const SymMatrix& m, double rhs) {
          SdpBlockProblem::Constraint c;
          c.name = idx3(base, t, h, u);
          c.terms.push_back({blk, m});
          c.rhs = rhs;
          p.ineq_constraints.push_back(std::move(c));
        };
        SymMatrix m(3);
        m.set(0, 1, 0.5);
        m.set(1, 1, -dpmax);
        add_ineq("plink_hi", m, 0.0);
        m = SymMatrix(3);
        m.set(0, 1, -0.5);
        add_ineq("plink_lo", m, 0.0);
        m = SymMatrix(3);
        m.set(0, 0, 1.0);
        m.set(0, 1, -0.5 * dpmax);
        add_ineq("pcap", m, 0.0);
        m = SymMatrix(3);
        m.set(1, 2, 0.5);
        m.set(1, 1, -dqmax);
        add_ineq("qlink_hi", m, 0.0);
        m = SymMatrix(3);
        m.set(1, 2, -0.5);
        add_ineq("qlink_lo", m, 0.0);
        m = SymMatrix(3);
        m.set(2, 2, 1.0);
        m.set(1, 2, -0.5 * dqmax);
        add_ineq("qcap", m, 0.0);
        if (opts.xdiag_cut) {
          m = SymMatrix(3);
          m.set(1, 1, 1.0);
          add_ineq("xdiag", m, 1.0);
        }
      }

  // line flow limits, both directions with the same magnitude
  for (int t = 0; t < T; ++t)
    for (size_t li = 0; li < inst.network.lines.size(); ++li) {
      const Line& l = inst.network.lines[li];
      const int a = inst.network.bus_index(l.from);
      const int c = inst.network.bus_index(l.to);
      for (int dir = 0; dir < 2; ++dir) {
        SdpBlockProblem::Constraint con;
        con.name = std::string(dir == 0 ? "flow_f_" : "flow_r_") +
                   std::to_string(t + 1) + "_" + std::to_string(li + 1);
        SymMatrix m(2 * nb);
        add_active_flow(m, nb, 0, a, c, l.g, l.b, dir == 0 ? 1.0 : -1.0);
        con.terms.push_back({rel.v_block(t), m});
        con.rhs = l.flow_limit;
        p.ineq_constraints.push_back(std::move(con));
      }
    }

  // voltage box limits on every bus except the slack
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < nb; ++i) {
      if (i == slack) continue;
      const Bus& b = inst.network.buses[i];
      SdpBlockProblem::Constraint hi, lo;
      hi.name = idx2("vhi", t, i);
      lo.name = idx2("vlo", t, i);
      SymMatrix mh(2 * nb), ml(2 * nb);
      add_voltage_square(mh, nb, 0, i, 1.0);
      add_voltage_square(ml, nb, 0, i, -1.0);
      hi.terms.push_back({rel.v_block(t), mh});
      lo.terms.push_back({rel.v_block(t), ml});
      hi.rhs = b.v_max * b.v_max;
      lo.rhs = -b.v_min * b.v_min;
      p.ineq_constraints.push_back(std::move(hi));
      p.ineq_constraints.push_back(std::move(lo));
    }

  // reservoir volume bounds: cumulative net discharge against the upper and
  // lower volume margins; upstream releases arrive with their routing delay
  for (int h = 0; h < nh; ++h) {
    const HydroPlant& pl = inst.plants[h];
    const auto upstream = inst.upstream_of(h);
    for (int t = 0; t < T; ++t) {
      double inflow_sum = 0.0;
      for (int i = 0; i <= t; ++i) inflow_sum += pl.inflows[i];
      double fixed = inflow_sum - (t + 1) * pl.spillage;
      for (const auto& [hu, tau] : upstream)
        fixed += HucInstance::upstream_arrival_hours(t + 1, tau) *
                 inst.plants[hu].spillage;

      for (int dir = 0; dir < 2; ++dir) {
        const double sgn = dir == 0 ? 1.0 : -1.0;  // 0: upper volume bound
        SdpBlockProblem::Constraint c;
        c.name = idx2(dir == 0 ? "resv_hi" : "resv_lo", h, t);
        for (int i = 0; i <= t; ++i)
          for (int u = 0; u < rel.config_count[h]; ++u)
            c.terms.push_back(
                {rel.x_block(i, h, u),
                 discharge_stencil(pl.configs[u], sb, -sgn * inst.theta)});
        for (const auto& [hu, tau] : upstream)
          for (int i = 0; i <= t; ++i) {
            const int src = i - tau;  // release hour seen at hour i
            if (src < 0) continue;
            for (int u = 0; u < rel.config_count[hu]; ++u)
              c.terms.push_back(
                  {rel.x_block(src, hu, u),
                   discharge_stencil(inst.plants[hu].configs[u], sb,
                                     sgn * inst.theta)});
          }
        // merge duplicate block terms (overlapping upstream windows)
        std::sort(c.terms.begin(), c.terms.end(),
                  [](const auto& a, const auto& b) { return a.block < b.block; });
        std::vector<SdpBlockProblem::BlockTerm> merged;
        for (auto& term : c.terms) {
          if (!merged.empty() && merged.back().block == term.block)
            merged.back().coeff += term.coeff;
          else
            merged.push_back(std::move(term));
        }
        c.terms = std::move(merged);
        c.rhs = dir == 0 ? pl.v_max - pl.v0 - inst.theta * fixed
                         : pl.v0 - pl.v_min + inst.theta * fixed;
        p.ineq_constraints.push_back(std::move(c));
      }
    }
  }

  // startup linking: unit count increase between consecutive hours is
  // bounded by the startup variable; the hour before the horizon is the
  // given initial configuration
  for (int t = 0; t < T; ++t)
    for (int h = 0; h < nh; ++h) {
      SdpBlockProblem::Constraint c;
      c.name = idx2("startup", t, h);
      for (int u = 0; u < rel.config_count[h]; ++u) {
        SymMatrix m(3);
        m.set(1, 1, static_cast<double>(u + 1));
        c.terms.push_back({rel.x_block(t, h, u), m});
        if (t > 0) {
          SymMatrix mp(3);
          mp.set(1, 1, -static_cast<double>(u + 1));
          c.terms.push_back({rel.x_block(t - 1, h, u), mp});
        }
      }
      std::sort(c.terms.begin(), c.terms.end(),
                [](const auto& a, const auto& b) { return a.block < b.block; });
      c.lin_terms.push_back({rel.y_var(t, h), -1.0});
      c.rhs = t == 0 ? static_cast<double>(inst.plants[h].initial_config) : 0.0;
      p.ineq_constraints.push_back(std::move(c));
    }

  p.validate();
  return rel;
}

SdpBlockProblem::Constraint pin_commitment(const Relaxation& rel, int t, int h,
                                           int u, double value) {
  SdpBlockProblem::Constraint c;
  c.name = idx3("pin", t, h, u);
  SymMatrix m(3);
  m.set(1, 1, 1.0);
  c.terms.push_back({rel.x_block(t, h, u), m});
  c.rhs = value;
  return c;
}

RelaxationSolution extract(const SdpSolution& sol, const Relaxation& rel,
                           const HucInstance& inst) {
  if (sol.status != SolveStatus::Optimal &&
      !(sol.status == SolveStatus::IterLimit &&
        std::max({sol.gap, sol.primal_res, sol.dual_res}) <= 1e-6))
    throw SolverError("relaxation solve failed: status " + to_string(sol.status) +
                      " (gap " + std::to_string(sol.gap) + ")");
  const int T = rel.horizon;
  const int nh = static_cast<int>(rel.config_count.size());
  const int nb = rel.n_buses;

  RelaxationSolution out;
  out.status = sol.status;
  out.objective = sol.objective;
  out.blocks = sol.block_values;
  out.iterations = sol.iterations;
  out.wall_time_s = sol.wall_time_s;

  out.x_frac.assign(T, {});
  out.dp.assign(T, {});
  out.dq.assign(T, {});
  out.dispatch.assign(T, std::vector<double>(nh, 0.0));
  out.startups.assign(T, std::vector<double>(nh, 0.0));
  for (int t = 0; t < T; ++t) {
    out.x_frac[t].resize(nh);
    out.dp[t].resize(nh);
    out.dq[t].resize(nh);
    for (int h = 0; h < nh; ++h) {
      const int nu = rel.config_count[h];
      out.x_frac[t][h].resize(nu);
      out.dp[t][h].resize(nu);
      out.dq[t][h].resize(nu);
      double sum = 0.0;
      for (int u = 0; u < nu; ++u) {
        const SymMatrix& b = sol.block_values[rel.x_block(t, h, u)];
        const double x = b(1, 1);
        out.x_frac[t][h][u] = x;
        // deviations are stored in per-unit inside the blocks
        out.dp[t][h][u] = inst.base_mva * b(0, 1);
        out.dq[t][h][u] = inst.base_mva * b(1, 2);
        sum += x;
        out.range_violation =
            std::max({out.range_violation, -x, x - 1.0, 0.0});
        out.dispatch[t][h] +=
            inst.base_mva * b(0, 1) + inst.plants[h].configs[u].p_min * x;
      }
      out.uniqueness_violation = std::max(out.uniqueness_violation, std::abs(sum - 1.0));
      out.startups[t][h] = sol.var_values[rel.y_var(t, h)];
    }
  }

  out.volt_e.assign(T, std::vector<double>(nb, 0.0));
  out.volt_f.assign(T, std::vector<double>(nb, 0.0));
  const int slack = inst.network.slack_index();
  for (int t = 0; t < T; ++t) {
    const EigResult eig = eig_sym(sol.block_values[rel.v_block(t)]);
    const double lead = std::max(0.0, eig.values(0));
    Eigen::VectorXd v = std::sqrt(lead) * eig.vectors.col(0);
    if (v(slack) < 0.0) v = -v;
    for (int i = 0; i < nb; ++i) {
      out.volt_e[t][i] = v(i);
      out.volt_f[t][i] = v(nb + i);
    }
  }
  return out;
}

}  // namespace huc
