#include "huc/fixture.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "huc/errors.hpp"

namespace huc {

namespace {
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}
}  // namespace

FixtureSpec fixture_preset(const std::string& name) {
  FixtureSpec s;
  s.name = name;
  if (name == "small") {
    s.buses = 3;
    s.plants = 2;
    s.horizon = 4;
    s.configs = 2;
    s.extra_chords = 1;
    s.seed = 7;
    s.boundary_push = 0.0;
  } else if (name == "medium") {
    s.buses = 14;
    s.plants = 3;
    s.horizon = 8;
    s.configs = 3;
    s.extra_chords = 3;
    s.seed = 11;
    s.boundary_push = 0.35;
  } else if (name == "large") {
    s.buses = 30;
    s.plants = 4;
    s.horizon = 12;
    s.configs = 2;
    s.extra_chords = 3;
    s.seed = 5;
    s.boundary_push = 0.5;
  } else {
    throw Error("unknown fixture preset '" + name + "'");
  }
  return s;
}

FixtureFiles gen_fixture(const FixtureSpec& spec) {
  if (spec.buses < 2 || spec.plants < 1 || spec.plants > spec.buses ||
      spec.horizon < 1 || spec.configs < 1)
    throw Error("gen_fixture: inconsistent sizes");
  std::mt19937_64 rng(spec.seed);
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  const int nb = spec.buses, nh = spec.plants, T = spec.horizon, nu = spec.configs;
  const double base_mva = 100.0;

  // per-plant single-unit curves; configuration u runs u identical units.
  // gamma is tied to alpha*pmax^2 so that the efficient-configuration switch
  // point lands inside the overlap of consecutive power ranges; the cost
  // envelope over configurations then has no convexity gap and the
  // relaxation stays tight
  std::vector<double> pmin1(nh), pmax1(nh), a1(nh), b1(nh), g1(nh);
  double total_cap = 0.0;
  for (int h = 0; h < nh; ++h) {
    pmin1[h] = uni(16.0, 24.0);
    pmax1[h] = pmin1[h] * uni(2.5, 2.9);
    a1[h] = uni(4e-4, 9e-4);
    b1[h] = uni(0.95, 1.15);
    g1[h] = uni(0.18, 0.32) * a1[h] * pmax1[h] * pmax1[h];
    total_cap += nu * pmax1[h];
  }

  // hourly load profile: a day shape peaking mid-horizon
  std::vector<double> load_total(T);
  const double peak = total_cap / 1.6;
  for (int t = 0; t < T; ++t) {
    const double shape = 0.7 + 0.3 * std::sin(M_PI * (t + 1.0) / (T + 1.0));
    load_total[t] = peak * shape * uni(0.99, 1.01);
  }

  // plant placement: plant 0 at the slack bus, the rest spread out
  std::vector<int> plant_bus(nh);
  plant_bus[0] = 1;
  for (int h = 1; h < nh; ++h) plant_bus[h] = 1 + (h * nb) / nh;

  // bus load weights
  std::vector<double> weight(nb);
  double wsum = 0.0;
  for (int i = 0; i < nb; ++i) {
    weight[i] = uni(0.25, 1.0);
    wsum += weight[i];
  }
  std::vector<std::vector<double>> pload(nb, std::vector<double>(T)),
      qload(nb, std::vector<double>(T));
  for (int i = 0; i < nb; ++i) {
    const double pf = uni(0.28, 0.36);
    for (int t = 0; t < T; ++t) {
      pload[i][t] = load_total[t] * weight[i] / wsum * uni(0.97, 1.03);
      qload[i][t] = pf * pload[i][t];
    }
  }

  // topology: randomized shallow tree plus spaced chords (keeps cycles
  // vertex-disjoint, so the width of the network stays at two)
  struct Edge {
    int from, to;
    double r, x;
    double limit = 0.0;
  };
  std::vector<Edge> edges;
  for (int i = 2; i <= nb; ++i) {
    // uniform parents keep the tree shallow, so voltage drops do not
    // accumulate along long chains
    const int parent =
        i == 2 ? 1 : 1 + static_cast<int>(rng() % static_cast<unsigned>(i - 1));
    const double x = uni(0.025, 0.06);
    edges.push_back({parent, i, x * uni(0.25, 0.4), x});
  }
  int placed = 0;
  for (int c = 0; placed < spec.extra_chords && 2 + 5 * c + 2 <= nb; ++c) {
    const int a = 2 + 5 * c, b = a + 2;
    const double x = uni(0.03, 0.07);
    edges.push_back({a, b, x * uni(0.25, 0.4), x});
    ++placed;
  }
  if (nb == 3 && spec.extra_chords > 0 && placed == 0) {
    const double x = uni(0.03, 0.07);
    edges.push_back({1, 3, x * uni(0.25, 0.4), x});
  }

  // nominal dispatch = capacity share of the load; used for flow limits,
  // targets and reservoir sizing
  std::vector<std::vector<double>> pnom(T, std::vector<double>(nh));
  for (int t = 0; t < T; ++t)
    for (int h = 0; h < nh; ++h)
      pnom[t][h] = load_total[t] * (nu * pmax1[h]) / total_cap;

  // boundary push: move part of the demand of non-slack plants toward the
  // top of a configuration range during the busiest hours, trading with the
  // slack plant so the totals stay put
  if (spec.boundary_push > 0.0 && nh >= 2 && nu >= 2) {
    for (int h = 1; h < nh; ++h) {
      // the busiest hour indices for this plant, one per plant to decorrelate
      const int t0 = (T / 2 + h) % T;
      for (int dt = 0; dt < 2 && dt < T; ++dt) {
        const int t = (t0 + dt) % T;
        // nearest configuration-range top below capacity
        const int u = std::min(nu - 1, std::max(1, static_cast<int>(
                                            pnom[t][h] / pmax1[h] + 0.5)));
        const double boundary = u * pmax1[h];
        const double shifted =
            pnom[t][h] + spec.boundary_push * (boundary * 1.02 - pnom[t][h]);
        const double delta = shifted - pnom[t][h];
        pnom[t][h] = shifted;
        pnom[t][0] -= delta;  // slack plant compensates
      }
    }
  }

  // DC angles for flow limit sizing, at the peak hour
  int tpk = 0;
  for (int t = 1; t < T; ++t)
    if (load_total[t] > load_total[tpk]) tpk = t;
  {
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(nb, nb);
    for (const Edge& e : edges) {
      const double w = 1.0 / e.x;
      lap(e.from - 1, e.from - 1) += w;
      lap(e.to - 1, e.to - 1) += w;
      lap(e.from - 1, e.to - 1) -= w;
      lap(e.to - 1, e.from - 1) -= w;
    }
    Eigen::VectorXd inj = Eigen::VectorXd::Zero(nb);
    for (int i = 0; i < nb; ++i) inj(i) -= pload[i][tpk] / base_mva;
    for (int h = 0; h < nh; ++h) inj(plant_bus[h] - 1) += pnom[tpk][h] / base_mva;
    // ground the slack bus
    Eigen::MatrixXd red = lap.block(1, 1, nb - 1, nb - 1);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(nb);
    theta.tail(nb - 1) = red.ldlt().solve(inj.tail(nb - 1));
    for (Edge& e : edges) {
      const double flow =
          (theta(e.from - 1) - theta(e.to - 1)) / e.x * base_mva;
      e.limit = std::max({2.2 * std::abs(flow), 0.18 * peak, 15.0});
    }
  }

  // targets from the nominal dispatch (plant 0 is the slack plant)
  std::vector<double> target(nh, 0.0);
  for (int h = 1; h < nh; ++h) {
    for (int t = 0; t < T; ++t) target[h] += pnom[t][h];
    target[h] = std::round(target[h]);
  }

  std::ostringstream net;
  net << "# synthetic day-ahead case '" << spec.name << "' (seed " << spec.seed << ")\n";
  net << "case " << spec.name << "\n";
  net << "baseMVA " << num(base_mva) << "\n";
  net << "horizon " << T << "\n";
  net << "slack 1 1.0\n";
  for (int i = 0; i < nb; ++i) {
    net << "bus " << (i + 1) << " 0.94 1.06 ";
    for (int t = 0; t < T; ++t) net << ' ' << num(pload[i][t]);
    net << ' ';
    for (int t = 0; t < T; ++t) net << ' ' << num(qload[i][t]);
    net << '\n';
  }
  for (const Edge& e : edges)
    net << "branch " << e.from << ' ' << e.to << ' ' << num(e.r) << ' '
        << num(e.x) << ' ' << num(e.limit) << '\n';

  std::ostringstream hyd;
  hyd << "# synthetic hydro data for '" << spec.name << "' (seed " << spec.seed << ")\n";
  hyd << "theta 0.0036\n";
  for (int h = 0; h < nh; ++h) {
    // discharge at a nominal operating point sizes inflows and volumes
    const double pbar = 0.6 * nu * pmax1[h];
    const int ubar = std::min(nu, std::max(1, static_cast<int>(pbar / pmax1[h]) + 1));
    const double qbar = (a1[h] / ubar) * pbar * pbar + b1[h] * pbar + ubar * g1[h];
    const double v0 = std::round(uni(30.0, 60.0) * qbar * 0.0036);
    hyd << "plant " << (h + 1) << '\n';
    hyd << "bus " << plant_bus[h] << '\n';
    hyd << "water_value " << num(std::round(7000.0 + 2500.0 * h + uni(0.0, 400.0)))
        << '\n';
    hyd << "startup_cost " << num(std::round(uni(300.0, 900.0))) << '\n';
    hyd << "v0 " << num(v0) << '\n';
    hyd << "vmin " << num(std::round(0.5 * v0)) << '\n';
    hyd << "vmax " << num(std::round(1.6 * v0)) << '\n';
    hyd << "spillage " << num(std::round(uni(1.0, 3.0))) << '\n';
    hyd << "inflows";
    for (int t = 0; t < T; ++t) hyd << ' ' << num(std::round(qbar * uni(0.9, 1.1)));
    hyd << '\n';
    if (h >= 1) hyd << "downstream " << h << " " << (1 + h % 2) << '\n';
    if (h >= 1) hyd << "target " << num(target[h]) << '\n';
    const int init = std::min(
        nu, std::max(1, static_cast<int>(pnom[0][h] / pmax1[h]) + 1));
    hyd << "initial_config " << init << '\n';
    for (int u = 1; u <= nu; ++u)
      hyd << "config " << u << ' ' << num(a1[h] / u) << ' ' << num(b1[h]) << ' '
          << num(g1[h] * u) << ' ' << num(pmin1[h] * u) << ' '
          << num((pmax1[h] - pmin1[h]) * u) << ' ' << num(-0.35 * u * pmax1[h])
          << ' ' << num(0.55 * u * pmax1[h]) << '\n';
    hyd << "end\n";
  }
  return {net.str(), hyd.str()};
}

std::pair<std::string, std::string> write_fixture(const FixtureSpec& spec,
                                                  const std::string& dir) {
  const FixtureFiles files = gen_fixture(spec);
  const std::string net_path = dir + "/" + spec.name + ".net";
  const std::string hyd_path = dir + "/" + spec.name + ".hyd";
  std::ofstream net(net_path), hyd(hyd_path);
  if (!net || !hyd) throw Error("cannot write fixture files under '" + dir + "'");
  net << files.network_text;
  hyd << files.hydro_text;
  return {net_path, hyd_path};
}

}  // namespace huc
