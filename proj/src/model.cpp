#include "huc/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "huc/errors.hpp"

namespace huc {

double water_discharge(const UnitConfigCurve& c, double p) {
  if (p < c.p_min - 1e-9 * std::max(1.0, std::abs(c.p_min)) ||
      p > c.p_min + c.dp_max + 1e-9 * std::max(1.0, c.p_min + c.dp_max))
    throw OutOfRangeError("water_discharge: p=" + std::to_string(p) +
                          " outside [" + std::to_string(c.p_min) + ", " +
                          std::to_string(c.p_min + c.dp_max) + "]");
  return c.alpha * p * p + c.beta * p + c.gamma;
}

ShiftedCurve shifted_curve(const UnitConfigCurve& c) {
  return {c.alpha, c.beta + 2.0 * c.alpha * c.p_min,
          c.gamma + c.beta * c.p_min + c.alpha * c.p_min * c.p_min};
}

int Network::bus_index(int id) const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<int>(i);
  return -1;
}

int HucInstance::plant_index(int id) const {
  for (size_t i = 0; i < plants.size(); ++i)
    if (plants[i].id == id) return static_cast<int>(i);
  return -1;
}

int HucInstance::slack_plant_index() const {
  for (size_t i = 0; i < plants.size(); ++i)
    if (!plants[i].target) return static_cast<int>(i);
  return -1;
}

std::vector<std::pair<int, int>> HucInstance::upstream_of(int h) const {
  std::vector<std::pair<int, int>> up;
  const int id = plants[h].id;
  for (size_t i = 0; i < plants.size(); ++i)
    if (plants[i].downstream && plants[i].downstream->first == id)
      up.push_back({static_cast<int>(i), plants[i].downstream->second});
  return up;
}

void HucInstance::validate() const {
  if (horizon < 1) throw ValidationError("horizon must be >= 1");
  if (theta <= 0.0) throw ValidationError("theta must be positive");
  if (base_mva <= 0.0) throw ValidationError("base_mva must be positive");
  if (network.buses.empty()) throw ValidationError("network has no buses");
  if (network.bus_index(network.slack_bus) < 0)
    throw ValidationError("slack bus " + std::to_string(network.slack_bus) +
                          " is not in the bus table");
  if (network.slack_vm <= 0.0) throw ValidationError("slack voltage must be positive");
  std::set<int> bus_ids;
  for (const Bus& b : network.buses) {
    if (!bus_ids.insert(b.id).second)
      throw ValidationError("duplicate bus id " + std::to_string(b.id));
    if (!(0.0 < b.v_min && b.v_min <= b.v_max))
      throw ValidationError("bus " + std::to_string(b.id) +
                            ": need 0 < v_min <= v_max");
    if (static_cast<int>(b.p_load.size()) != horizon ||
        static_cast<int>(b.q_load.size()) != horizon)
      throw ValidationError("bus " + std::to_string(b.id) +
                            ": load series length != horizon");
  }
  for (const Line& l : network.lines) {
    if (network.bus_index(l.from) < 0 || network.bus_index(l.to) < 0)
      throw ValidationError("line endpoints must be existing buses");
    if (l.from == l.to) throw ValidationError("line with equal endpoints");
    if (l.flow_limit <= 0.0) throw ValidationError("line flow limit must be positive");
  }
  // connectivity
  {
    std::map<int, std::vector<int>> adj;
    for (const Line& l : network.lines) {
      adj[l.from].push_back(l.to);
      adj[l.to].push_back(l.from);
    }
    std::set<int> seen;
    std::vector<int> stack{network.buses[0].id};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      if (!seen.insert(u).second) continue;
      for (int v : adj[u]) stack.push_back(v);
    }
    if (seen.size() != network.buses.size())
      throw ValidationError("network graph is not connected");
  }
  if (plants.empty()) throw ValidationError("no hydro plants");
  int targetless = 0;
  std::set<int> plant_ids;
  for (const HydroPlant& p : plants) {
    const std::string tag = "plant " + std::to_string(p.id) + ": ";
    if (!plant_ids.insert(p.id).second)
      throw ValidationError("duplicate plant id " + std::to_string(p.id));
    if (network.bus_index(p.bus) < 0)
      throw ValidationError(tag + "bus " + std::to_string(p.bus) + " does not exist");
    if (!(p.v_min <= p.v0 && p.v0 <= p.v_max))
      throw ValidationError(tag + "need v_min <= v0 <= v_max");
    if (static_cast<int>(p.inflows.size()) != horizon)
      throw ValidationError(tag + "inflow series length != horizon");
    if (p.spillage < 0.0) throw ValidationError(tag + "negative spillage");
    if (p.startup_cost < 0.0) throw ValidationError(tag + "negative startup cost");
    if (p.configs.empty()) throw ValidationError(tag + "no configurations");
    if (!p.target) ++targetless;
    for (size_t u = 0; u < p.configs.size(); ++u) {
      const UnitConfigCurve& c = p.configs[u];
      const std::string ctag = tag + "config " + std::to_string(u + 1) + ": ";
      if (c.units != static_cast<int>(u + 1))
        throw ValidationError(ctag + "configurations must be numbered 1..N in order");
      if (c.alpha < 0.0) throw ValidationError(ctag + "alpha must be >= 0");
      if (c.p_min < 0.0) throw ValidationError(ctag + "p_min must be >= 0");
      if (c.dp_max < 0.0) throw ValidationError(ctag + "dp_max must be >= 0");
      if (c.q_min > c.q_max) throw ValidationError(ctag + "q_min > q_max");
      // alpha >= 0 makes the curve convex; its minimum over the power range
      // sits at an endpoint or the vertex
      double qmin_curve = std::min(c.alpha * c.p_min * c.p_min + c.beta * c.p_min + c.gamma,
                                   water_discharge(c, c.p_min + c.dp_max));
      if (c.alpha > 0.0) {
        const double vertex = -c.beta / (2.0 * c.alpha);
        if (vertex > c.p_min && vertex < c.p_min + c.dp_max)
          qmin_curve = std::min(qmin_curve, water_discharge(c, vertex));
      }
      if (qmin_curve < 0.0)
        throw ValidationError(ctag + "discharge is negative inside the power range");
    }
    if (p.initial_config < 1 ||
        p.initial_config > static_cast<int>(p.configs.size()))
      throw ValidationError(tag + "initial_config outside 1..N_U");
    if (p.downstream) {
      if (plant_index(p.downstream->first) < 0)
        throw ValidationError(tag + "downstream plant " +
                              std::to_string(p.downstream->first) + " does not exist");
      if (p.downstream->second < 0)
        throw ValidationError(tag + "negative routing delay");
    }
  }
  if (targetless != 1)
    throw ValidationError("exactly one plant (the slack plant) must have no target, found " +
                          std::to_string(targetless));
  // downstream chains must be acyclic
  for (size_t s = 0; s < plants.size(); ++s) {
    int hops = 0;
    int cur = static_cast<int>(s);
    while (plants[cur].downstream) {
      cur = plant_index(plants[cur].downstream->first);
      if (++hops > static_cast<int>(plants.size()))
        throw ValidationError("downstream routing contains a cycle");
    }
  }
}

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

namespace {

struct LineReader {
  std::istringstream ss;
  std::string path;
  int lineno;
  LineReader(const std::string& text, const std::string& p, int n)
      : ss(text), path(p), lineno(n) {}
  [[noreturn]] void fail(const std::string& what) {
    throw ParseError(path + ":" + std::to_string(lineno) + ": " + what);
  }
  std::string word() {
    std::string w;
    if (!(ss >> w)) fail("unexpected end of line");
    return w;
  }
  double num(const std::string& field) {
    double v;
    if (!(ss >> v)) fail("expected number for '" + field + "'");
    return v;
  }
  int integer(const std::string& field) {
    const double v = num(field);
    if (v != std::floor(v)) fail("expected integer for '" + field + "'");
    return static_cast<int>(v);
  }
  bool more() {
    ss >> std::ws;
    return ss.peek() != EOF;
  }
};

std::vector<std::pair<int, std::string>> read_lines(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open '" + path + "'");
  std::vector<std::pair<int, std::string>> out;
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back({n, line});
  }
  return out;
}

}  // namespace

HucInstance load_instance(const std::string& network_path,
                          const std::string& hydro_path) {
  HucInstance inst;
  int horizon = -1;

  // network file
  bool have_base = false, have_slack = false;
  for (const auto& [no, text] : read_lines(network_path)) {
    LineReader r(text, network_path, no);
    const std::string kw = r.word();
    if (kw == "case") {
      inst.name = r.word();
    } else if (kw == "baseMVA") {
      inst.base_mva = r.num("baseMVA");
      have_base = true;
    } else if (kw == "horizon") {
      horizon = r.integer("horizon");
      if (horizon < 1) r.fail("horizon must be >= 1");
      inst.horizon = horizon;
    } else if (kw == "slack") {
      inst.network.slack_bus = r.integer("slack bus id");
      inst.network.slack_vm = r.num("slack voltage");
      have_slack = true;
    } else if (kw == "bus") {
      if (horizon < 1) r.fail("'horizon' must appear before bus rows");
      Bus b;
      b.id = r.integer("bus id");
      b.v_min = r.num("v_min");
      b.v_max = r.num("v_max");
      for (int t = 0; t < horizon; ++t)
        b.p_load.push_back(r.num("p load hour " + std::to_string(t + 1)));
      for (int t = 0; t < horizon; ++t)
        b.q_load.push_back(r.num("q load hour " + std::to_string(t + 1)));
      if (r.more()) r.fail("trailing fields on bus row");
      inst.network.buses.push_back(std::move(b));
    } else if (kw == "branch") {
      Line l;
      l.from = r.integer("from bus");
      l.to = r.integer("to bus");
      l.r = r.num("series r");
      l.x = r.num("series x");
      l.flow_limit = r.num("flow limit (MW)");
      if (r.more()) r.fail("trailing fields on branch row");
      const double z2 = l.r * l.r + l.x * l.x;
      if (z2 <= 0.0) r.fail("branch impedance must be nonzero");
      l.g = l.r / z2;
      l.b = -l.x / z2;
      inst.network.lines.push_back(std::move(l));
    } else {
      r.fail("unknown keyword '" + kw + "'");
    }
  }
  if (!have_base) throw ParseError(network_path + ": missing baseMVA");
  if (!have_slack) throw ParseError(network_path + ": missing slack line");
  if (horizon < 1) throw ParseError(network_path + ": missing horizon");

  // hydro file
  HydroPlant* cur = nullptr;
  std::vector<HydroPlant> plants;
  for (const auto& [no, text] : read_lines(hydro_path)) {
    LineReader r(text, hydro_path, no);
    const std::string kw = r.word();
    if (kw == "theta") {
      inst.theta = r.num("theta");
      continue;
    }
    if (kw == "plant") {
      plants.emplace_back();
      cur = &plants.back();
      cur->id = r.integer("plant id");
      continue;
    }
    if (!cur) r.fail("'" + kw + "' before any 'plant' line");
    if (kw == "end") {
      cur = nullptr;
    } else if (kw == "bus") {
      cur->bus = r.integer("bus id");
    } else if (kw == "water_value") {
      cur->water_value = r.num(kw);
    } else if (kw == "startup_cost") {
      cur->startup_cost = r.num(kw);
    } else if (kw == "v0") {
      cur->v0 = r.num(kw);
    } else if (kw == "vmin") {
      cur->v_min = r.num(kw);
    } else if (kw == "vmax") {
      cur->v_max = r.num(kw);
    } else if (kw == "spillage") {
      cur->spillage = r.num(kw);
    } else if (kw == "inflows") {
      for (int t = 0; t < horizon; ++t)
        cur->inflows.push_back(r.num("inflow hour " + std::to_string(t + 1)));
      if (r.more()) r.fail("inflow series longer than horizon");
    } else if (kw == "downstream") {
      const int id = r.integer("downstream plant id");
      const int tau = r.integer("delay");
      cur->downstream = {id, tau};
    } else if (kw == "target") {
      cur->target = r.num(kw);
    } else if (kw == "initial_config") {
      cur->initial_config = r.integer(kw);
    } else if (kw == "config") {
      UnitConfigCurve c;
      c.units = r.integer("config index");
      c.alpha = r.num("alpha");
      c.beta = r.num("beta");
      c.gamma = r.num("gamma");
      c.p_min = r.num("p_min");
      c.dp_max = r.num("dp_max");
      c.q_min = r.num("q_min");
      c.q_max = r.num("q_max");
      if (r.more()) r.fail("trailing fields on config row");
      cur->configs.push_back(c);
    } else {
      r.fail("unknown keyword '" + kw + "'");
    }
  }
  inst.plants = std::move(plants);

  inst.validate();

  // electrical quantities to per-unit; curves stay in MW
  for (Bus& b : inst.network.buses) {
    for (double& v : b.p_load) v /= inst.base_mva;
    for (double& v : b.q_load) v /= inst.base_mva;
  }
  for (Line& l : inst.network.lines) l.flow_limit /= inst.base_mva;
  return inst;
}

namespace {
std::string num17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

std::string canonical_serialization(const HucInstance& inst) {
  std::ostringstream os;
  os << "huc-instance " << inst.name << '\n';
  os << "horizon " << inst.horizon << '\n';
  os << "theta " << num17(inst.theta) << '\n';
  os << "base_mva " << num17(inst.base_mva) << '\n';
  os << "slack " << inst.network.slack_bus << ' ' << num17(inst.network.slack_vm) << '\n';
  std::vector<Bus> buses = inst.network.buses;
  std::sort(buses.begin(), buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
  for (const Bus& b : buses) {
    os << "bus " << b.id << ' ' << num17(b.v_min) << ' ' << num17(b.v_max);
    for (double v : b.p_load) os << ' ' << num17(v);
    for (double v : b.q_load) os << ' ' << num17(v);
    os << '\n';
  }
  std::vector<Line> lines = inst.network.lines;
  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    return std::tie(a.from, a.to) < std::tie(b.from, b.to);
  });
  for (const Line& l : lines)
    os << "branch " << l.from << ' ' << l.to << ' ' << num17(l.r) << ' '
       << num17(l.x) << ' ' << num17(l.g) << ' ' << num17(l.b) << ' '
       << num17(l.flow_limit) << '\n';
  std::vector<HydroPlant> plants = inst.plants;
  std::sort(plants.begin(), plants.end(),
            [](const HydroPlant& a, const HydroPlant& b) { return a.id < b.id; });
  for (const HydroPlant& p : plants) {
    os << "plant " << p.id << " bus " << p.bus << '\n';
    os << "  water_value " << num17(p.water_value) << " startup_cost "
       << num17(p.startup_cost) << '\n';
    os << "  volume " << num17(p.v_min) << ' ' << num17(p.v0) << ' '
       << num17(p.v_max) << " spillage " << num17(p.spillage) << '\n';
    os << "  inflows";
    for (double a : p.inflows) os << ' ' << num17(a);
    os << '\n';
    if (p.downstream)
      os << "  downstream " << p.downstream->first << " delay "
         << p.downstream->second << '\n';
    os << "  target " << (p.target ? num17(*p.target) : std::string("none")) << '\n';
    os << "  initial_config " << p.initial_config << '\n';
    for (const UnitConfigCurve& c : p.configs)
      os << "  config " << c.units << ' ' << num17(c.alpha) << ' ' << num17(c.beta)
         << ' ' << num17(c.gamma) << ' ' << num17(c.p_min) << ' ' << num17(c.dp_max)
         << ' ' << num17(c.q_min) << ' ' << num17(c.q_max) << '\n';
  }
  return os.str();
}

void write_canonical(const HucInstance& inst, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << canonical_serialization(inst);
}

}  // namespace huc
