#pragma once

#include <optional>
#include <string>
#include <vector>

#include "huc/defaults.hpp"

namespace huc {

// One discrete operating mode of a plant: `units` machines committed, with a
// quadratic water discharge curve q(p) = alpha p^2 + beta p + gamma valid on
// p in [p_min, p_min + dp_max] (MW -> m^3/s).
struct UnitConfigCurve {
  int units = 1;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double p_min = 0.0;
  double dp_max = 0.0;
  double q_min = 0.0;  // MVAr
  double q_max = 0.0;
};

// Discharge at power p. Throws OutOfRangeError outside the curve's range.
double water_discharge(const UnitConfigCurve& curve, double p);

// Coefficients of the discharge as a quadratic in dP, where p = dP + p_min:
// beta' = beta + 2 alpha p_min, gamma' = gamma + beta p_min + alpha p_min^2.
struct ShiftedCurve {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};
ShiftedCurve shifted_curve(const UnitConfigCurve& curve);

struct HydroPlant {
  int id = 0;
  int bus = 0;                    // bus id as written in the network file
  double water_value = 0.0;       // $/hm^3
  double startup_cost = 0.0;      // $/startup
  double v0 = 0.0;                // initial volume, hm^3
  double v_min = 0.0;
  double v_max = 0.0;
  double spillage = 0.0;          // constant, m^3/s
  std::vector<double> inflows;    // m^3/s per hour, length T
  std::optional<std::pair<int, int>> downstream;  // (plant id, delay hours)
  std::optional<double> target;   // MWh over the horizon; absent = slack plant
  int initial_config = 1;         // configuration committed at t = 0
  std::vector<UnitConfigCurve> configs;
};

struct Bus {
  int id = 0;
  double v_min = 0.0;  // p.u.
  double v_max = 0.0;
  std::vector<double> p_load;  // p.u. after loading, length T
  std::vector<double> q_load;
};

struct Line {
  int from = 0;  // bus ids
  int to = 0;
  double r = 0.0;  // series impedance, p.u.
  double x = 0.0;
  double g = 0.0;  // derived series admittance g = r/(r^2+x^2), b = -x/(r^2+x^2)
  double b = 0.0;
  double flow_limit = 0.0;  // p.u. after loading
};

struct Network {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  int slack_bus = 0;       // bus id
  double slack_vm = 1.0;   // p.u.

  int bus_index(int id) const;  // position in buses, -1 if absent
  int slack_index() const { return bus_index(slack_bus); }
};

struct HucInstance {
  std::string name;
  int horizon = 0;
  double theta = defaults::kTheta;  // hm^3 per (m^3/s * h)
  double base_mva = 100.0;
  std::vector<HydroPlant> plants;
  Network network;

  int plant_index(int id) const;
  int slack_plant_index() const;  // the plant without a target
  // plants h' with downstream == plants[h].id, as (plant index, delay)
  std::vector<std::pair<int, int>> upstream_of(int h) const;
  // Hours of upstream arrivals seen by hour t under delay tau: releases
  // travel tau hours and nothing enters from before the horizon.
  static int upstream_arrival_hours(int t, int tau) { return std::max(0, t - tau); }

  void validate() const;  // throws ValidationError naming the invariant
};

// Parses the network and hydro files (formats documented in the README) and
// returns a validated instance with loads and flow limits in per-unit.
HucInstance load_instance(const std::string& network_path,
                          const std::string& hydro_path);

// Deterministic canonical dump of a validated instance, for fixture pinning.
std::string canonical_serialization(const HucInstance& inst);
void write_canonical(const HucInstance& inst, const std::string& path);

}  // namespace huc
