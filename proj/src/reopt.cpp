#include "huc/reopt.hpp"

#include <cmath>
#include <string>

#include "huc/acflow.hpp"
#include "huc/errors.hpp"

namespace huc {

namespace {
std::string idx2(const char* base, int a, int b) {
  return std::string(base) + "_" + std::to_string(a + 1) + "_" + std::to_string(b + 1);
}

// discharge of plant h at hour t as a quadratic form on the z block, whose
// power entries are stored in per-unit (p = sb * p_pu): alpha p^2 + beta p
// + gamma, with the constant landing on the corner
void add_discharge(SymMatrix& m, const OpfProblem& opf, int h,
                   const UnitConfigCurve& c, double sb, double scale) {
  m.add(opf.p_idx(h), opf.p_idx(h), c.alpha * sb * sb * scale);
  m.add(0, opf.p_idx(h), 0.5 * c.beta * sb * scale);
  m.add(0, 0, c.gamma * scale);
}
}  // namespace

OpfProblem build_opf(const HucInstance& inst, const CommitmentSchedule& schedule) {
  schedule.validate(inst);
  OpfProblem opf;
  opf.schedule = schedule;
  const int T = inst.horizon;
  const int nh = static_cast<int>(inst.plants.size());
  const int nb = static_cast<int>(inst.network.buses.size());
  const double sb = inst.base_mva;
  opf.horizon = T;
  opf.n_plants = nh;
  opf.n_buses = nb;
  const int dim = opf.block_dim();
  const int voff = opf.e_idx(0);

  SdpBlockProblem& p = opf.prob;
  for (int t = 0; t < T; ++t) p.blocks.push_back({"z_" + std::to_string(t + 1), dim});

  auto chosen = [&](int t, int h) -> const UnitConfigCurve& {
    return inst.plants[h].configs[schedule.config[t][h] - 1];
  };

  // objective: water cost of the chosen configurations
  for (int t = 0; t < T; ++t) {
    SymMatrix c(dim);
    for (int h = 0; h < nh; ++h)
      add_discharge(c, opf, h, chosen(t, h), sb,
                    inst.plants[h].water_value * inst.theta);
    p.objective.push_back({opf.hour_block(t), c});
  }

  std::vector<std::vector<int>> plants_at(nb);
  for (int h = 0; h < nh; ++h)
    plants_at[inst.network.bus_index(inst.plants[h].bus)].push_back(h);
  const int slack = inst.network.slack_index();

  for (int t = 0; t < T; ++t) {
    // homogenizing corner
    SdpBlockProblem::Constraint corner;
    corner.name = "corner_" + std::to_string(t + 1);
    SymMatrix mc(dim);
    mc.set(0, 0, 1.0);
    corner.terms.push_back({opf.hour_block(t), mc});
    corner.rhs = 1.0;
    p.eq_constraints.push_back(std::move(corner));

    // power balance
    for (int i = 0; i < nb; ++i) {
      SdpBlockProblem::Constraint cp, cq;
      cp.name = idx2("pbal", t, i);
      cq.name = idx2("qbal", t, i);
      SymMatrix mp(dim), mq(dim);
      for (int h : plants_at[i]) {
        mp.add(0, opf.p_idx(h), 0.5);
        mq.add(0, opf.q_idx(h), 0.5);
      }
      for (const Line& l : inst.network.lines) {
        const int a = inst.network.bus_index(l.from);
        const int c = inst.network.bus_index(l.to);
        if (a == i) {
          add_active_flow(mp, nb, voff, a, c, l.g, l.b, -1.0);
          add_reactive_flow(mq, nb, voff, a, c, l.g, l.b, -1.0);
        } else if (c == i) {
          add_active_flow(mp, nb, voff, c, a, l.g, l.b, -1.0);
          add_reactive_flow(mq, nb, voff, c, a, l.g, l.b, -1.0);
        }
      }
      cp.terms.push_back({opf.hour_block(t), mp});
      cq.terms.push_back({opf.hour_block(t), mq});
      cp.rhs = inst.network.buses[i].p_load[t];
      cq.rhs = inst.network.buses[i].q_load[t];
      p.eq_constraints.push_back(std::move(cp));
      p.eq_constraints.push_back(std::move(cq));
    }

    // slack voltage
    SdpBlockProblem::Constraint ce, cf;
    ce.name = "vslack_e_" + std::to_string(t + 1);
    cf.name = "vslack_f_" + std::to_string(t + 1);
    SymMatrix me(dim), mf(dim);
    me.set(opf.e_idx(slack), opf.e_idx(slack), 1.0);
    mf.set(opf.f_idx(slack), opf.f_idx(slack), 1.0);
    ce.terms.push_back({opf.hour_block(t), me});
    cf.terms.push_back({opf.hour_block(t), mf});
    ce.rhs = inst.network.slack_vm * inst.network.slack_vm;
    cf.rhs = 0.0;
    p.eq_constraints.push_back(std::move(ce));
    p.eq_constraints.push_back(std::move(cf));
  }

  // energy targets
  for (int h = 0; h < nh; ++h) {
    if (!inst.plants[h].target) continue;
    SdpBlockProblem::Constraint c;
    c.name = "target_" + std::to_string(h + 1);
    for (int t = 0; t < T; ++t) {
      SymMatrix m(dim);
      m.set(0, opf.p_idx(h), 0.5 * sb);
      c.terms.push_back({opf.hour_block(t), m});
    }
    c.rhs = *inst.plants[h].target;
    p.eq_constraints.push_back(std::move(c));
  }

  // generation ranges of the chosen configurations
  for (int t = 0; t < T; ++t)
    for (int h = 0; h < nh; ++h) {
      const UnitConfigCurve& cfg = chosen(t, h);
      auto add_range = [&](const char* base, int idx, double lo, double hi) {
        SdpBlockProblem::Constraint chi, clo;
        chi.name = idx2((std::string(base) + "max").c_str(), t, h);
        clo.name = idx2((std::string(base) + "min").c_str(), t, h);
        SymMatrix mh(dim), ml(dim);
        mh.set(0, idx, 0.5);
        ml.set(0, idx, -0.5);
        chi.terms.push_back({opf.hour_block(t), mh});
        clo.terms.push_back({opf.hour_block(t), ml});
        chi.rhs = hi;
        clo.rhs = -lo;
        p.ineq_constraints.push_back(std::move(chi));
        p.ineq_constraints.push_back(std::move(clo));
      };
      add_range("p", opf.p_idx(h), cfg.p_min / sb, (cfg.p_min + cfg.dp_max) / sb);
      add_range("q", opf.q_idx(h), cfg.q_min / sb, cfg.q_max / sb);
      // diagonal caps (v - lo)(hi - v) >= 0 lifted: without them the squared
      // diagonals appear in no constraint and the interior point inflates
      // them without bound
      auto add_cap = [&](const char* base, int idx, double lo, double hi) {
        SdpBlockProblem::Constraint cap;
        cap.name = idx2(base, t, h);
        SymMatrix m(dim);
        m.set(idx, idx, 1.0);
        m.set(0, idx, -0.5 * (lo + hi));
        cap.terms.push_back({opf.hour_block(t), m});
        cap.rhs = -lo * hi;
        p.ineq_constraints.push_back(std::move(cap));
      };
      add_cap("ppcap", opf.p_idx(h), cfg.p_min / sb, (cfg.p_min + cfg.dp_max) / sb);
      add_cap("qqcap", opf.q_idx(h), cfg.q_min / sb, cfg.q_max / sb);
    }

  // line flow limits
  for (int t = 0; t < T; ++t)
    for (size_t li = 0; li < inst.network.lines.size(); ++li) {
      const Line& l = inst.network.lines[li];
      const int a = inst.network.bus_index(l.from);
      const int c = inst.network.bus_index(l.to);
      for (int dir = 0; dir < 2; ++dir) {
        SdpBlockProblem::Constraint con;
        con.name = std::string(dir == 0 ? "flow_f_" : "flow_r_") +
                   std::to_string(t + 1) + "_" + std::to_string(li + 1);
        SymMatrix m(dim);
        add_active_flow(m, nb, voff, a, c, l.g, l.b, dir == 0 ? 1.0 : -1.0);
        con.terms.push_back({opf.hour_block(t), m});
        con.rhs = l.flow_limit;
        p.ineq_constraints.push_back(std::move(con));
      }
    }

  // voltage boxes
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < nb; ++i) {
      if (i == slack) continue;
      const Bus& b = inst.network.buses[i];
      SdpBlockProblem::Constraint hi, lo;
      hi.name = idx2("vhi", t, i);
      lo.name = idx2("vlo", t, i);
      SymMatrix mh(dim), ml(dim);
      add_voltage_square(mh, nb, voff, i, 1.0);
      add_voltage_square(ml, nb, voff, i, -1.0);
      hi.terms.push_back({opf.hour_block(t), mh});
      lo.terms.push_back({opf.hour_block(t), ml});
      hi.rhs = b.v_max * b.v_max;
      lo.rhs = -b.v_min * b.v_min;
      p.ineq_constraints.push_back(std::move(hi));
      p.ineq_constraints.push_back(std::move(lo));
    }

  // reservoir bounds with delayed upstream arrivals
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
        const double sgn = dir == 0 ? 1.0 : -1.0;
        SdpBlockProblem::Constraint c;
        c.name = idx2(dir == 0 ? "resv_hi" : "resv_lo", h, t);
        std::vector<SymMatrix> per_hour(T, SymMatrix(dim));
        std::vector<char> used(T, 0);
        for (int i = 0; i <= t; ++i) {
          add_discharge(per_hour[i], opf, h, chosen(i, h), sb, -sgn * inst.theta);
          used[i] = 1;
        }
        for (const auto& [hu, tau] : upstream)
          for (int i = 0; i <= t; ++i) {
            const int src = i - tau;
            if (src < 0) continue;
            add_discharge(per_hour[src], opf, hu, chosen(src, hu), sb,
                          sgn * inst.theta);
            used[src] = 1;
          }
        for (int i = 0; i < T; ++i)
          if (used[i]) c.terms.push_back({opf.hour_block(i), per_hour[i]});
        c.rhs = dir == 0 ? pl.v_max - pl.v0 - inst.theta * fixed
                         : pl.v0 - pl.v_min + inst.theta * fixed;
        p.ineq_constraints.push_back(std::move(c));
      }
    }
  }

  p.validate();
  return opf;
}

void extract_voltages(const HucInstance& inst, const OpfProblem& opf,
                      const SymMatrix& z, std::vector<double>& e,
                      std::vector<double>& f) {
  const int nb = opf.n_buses;
  SymMatrix sub(2 * nb);
  for (int i = 0; i < 2 * nb; ++i)
    for (int j = i; j < 2 * nb; ++j)
      sub.set(i, j, z(opf.e_idx(0) + i, opf.e_idx(0) + j));
  const EigResult eig = eig_sym(sub);
  Eigen::VectorXd v = std::sqrt(std::max(0.0, eig.values(0))) * eig.vectors.col(0);
  if (v(inst.network.slack_index()) < 0.0) v = -v;
  e.assign(nb, 0.0);
  f.assign(nb, 0.0);
  for (int i = 0; i < nb; ++i) {
    e[i] = v(i);
    f[i] = v(nb + i);
  }
}

double rank1_balance_residual(const HucInstance& inst, const OpfProblem& opf,
                              const std::vector<SymMatrix>& z_blocks) {
  const int nb = opf.n_buses;
  const int nh = opf.n_plants;
  double worst = 0.0;
  for (int t = 0; t < opf.horizon; ++t) {
    const SymMatrix& zb = z_blocks[opf.hour_block(t)];
    std::vector<double> ve, vf;
    extract_voltages(inst, opf, zb, ve, vf);
    // complex-arithmetic balance check at the extracted point
    for (int i = 0; i < nb; ++i) {
      double pinj = 0.0, qinj = 0.0;
      for (const Line& l : inst.network.lines) {
        const int a = inst.network.bus_index(l.from);
        const int c = inst.network.bus_index(l.to);
        int from = -1, to = -1;
        if (a == i) {
          from = a;
          to = c;
        } else if (c == i) {
          from = c;
          to = a;
        } else {
          continue;
        }
        const double ei = ve[from], fi = vf[from];
        const double ej = ve[to], fj = vf[to];
        const double amag = ei * ei + fi * fi - ei * ej - fi * fj;
        const double bmag = fi * ej - ei * fj;
        pinj += l.g * amag - l.b * bmag;
        qinj += -l.b * amag - l.g * bmag;
      }
      double pgen = 0.0, qgen = 0.0;
      for (int h = 0; h < nh; ++h)
        if (inst.network.bus_index(inst.plants[h].bus) == i) {
          pgen += zb(0, opf.p_idx(h));
          qgen += zb(0, opf.q_idx(h));
        }
      worst = std::max(worst,
                       std::abs(pgen - pinj - inst.network.buses[i].p_load[t]));
      worst = std::max(worst,
                       std::abs(qgen - qinj - inst.network.buses[i].q_load[t]));
    }
  }
  return worst;
}

OpfSolution solve_opf(const HucInstance& inst, const OpfProblem& opf,
                      const SolverOptions& opts) {
  const SdpSolution sol = solve(opf.prob, opts);
  if (sol.status == SolveStatus::Infeasible) {
    throw SolverError(
        "dispatch re-optimization infeasible: the rounded schedule admits no "
        "AC-feasible dispatch");
  }
  if (sol.status != SolveStatus::Optimal &&
      !(sol.status == SolveStatus::IterLimit &&
        std::max({sol.gap, sol.primal_res, sol.dual_res}) <= 1e-6))
    throw SolverError("re-optimization solve failed: status " + to_string(sol.status));

  OpfSolution out;
  out.status = sol.status;
  out.objective = sol.objective;
  out.iterations = sol.iterations;
  out.wall_time_s = sol.wall_time_s;
  out.z_blocks = sol.block_values;
  out.p.assign(opf.horizon, std::vector<double>(opf.n_plants, 0.0));
  out.q.assign(opf.horizon, std::vector<double>(opf.n_plants, 0.0));
  out.e.assign(opf.horizon, std::vector<double>(opf.n_buses, 0.0));
  out.f.assign(opf.horizon, std::vector<double>(opf.n_buses, 0.0));
  for (int t = 0; t < opf.horizon; ++t) {
    const SymMatrix& z = sol.block_values[opf.hour_block(t)];
    for (int h = 0; h < opf.n_plants; ++h) {
      out.p[t][h] = inst.base_mva * z(0, opf.p_idx(h));
      out.q[t][h] = inst.base_mva * z(0, opf.q_idx(h));
    }
    extract_voltages(inst, opf, z, out.e[t], out.f[t]);
  }
  out.balance_residual = rank1_balance_residual(inst, opf, out.z_blocks);
  return out;
}

}  // namespace huc
