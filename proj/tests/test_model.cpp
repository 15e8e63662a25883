#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "huc/errors.hpp"
#include "huc/model.hpp"

using namespace huc;

namespace {

const char* kNet3 =
    "# three buses, two plants\n"
    "case net3\n"
    "baseMVA 100\n"
    "horizon 4\n"
    "slack 1 1.0\n"
    "bus 1 0.94 1.06   10 12 14 12   3 3.5 4 3.5\n"
    "bus 2 0.94 1.06   20 24 28 24   6 7 8 7\n"
    "bus 3 0.94 1.06   15 18 21 18   5 5.5 6 5.5\n"
    "branch 1 2 0.02 0.08 60\n"
    "branch 2 3 0.025 0.09 60\n"
    "branch 1 3 0.03 0.1 60\n";

const char* kHyd3 =
    "theta 0.0036\n"
    "plant 1\n"
    "bus 1\n"
    "water_value 8000\n"
    "startup_cost 400\n"
    "v0 120\n"
    "vmin 60\n"
    "vmax 200\n"
    "spillage 2\n"
    "inflows 90 95 100 95\n"
    "initial_config 1\n"
    "config 1 0.0006 1.05 6   20 38   -20 35\n"
    "config 2 0.0003 1.05 12  40 76   -40 70\n"
    "end\n"
    "plant 2\n"
    "bus 3\n"
    "water_value 9500\n"
    "startup_cost 600\n"
    "v0 80\n"
    "vmin 40\n"
    "vmax 150\n"
    "spillage 1\n"
    "inflows 60 60 65 60\n"
    "downstream 1 1\n"
    "target 150\n"
    "initial_config 1\n"
    "config 1 0.0005 1.0 5   18 34   -18 30\n"
    "config 2 0.00025 1.0 10 36 68   -36 60\n"
    "end\n";

std::pair<std::string, std::string> write_pair(const char* net, const char* hyd) {
  const std::string np = "model_test.net", hp = "model_test.hyd";
  std::ofstream(np) << net;
  std::ofstream(hp) << hyd;
  return {np, hp};
}

}  // namespace

TEST_CASE("water discharge evaluation") {
  UnitConfigCurve c;
  c.alpha = 1e-4;
  c.beta = 0.05;
  c.gamma = 2.0;
  c.p_min = 50.0;
  c.dp_max = 100.0;
  CHECK(water_discharge(c, 100.0) == doctest::Approx(8.0));
  CHECK_THROWS_AS(water_discharge(c, 40.0), OutOfRangeError);

  UnitConfigCurve lin;
  lin.alpha = 0.0;
  lin.beta = 1.0;
  lin.gamma = 0.0;
  lin.p_min = 0.0;
  lin.dp_max = 100.0;
  CHECK(water_discharge(lin, 50.0) == doctest::Approx(50.0));
}

TEST_CASE("shifted curve") {
  UnitConfigCurve c;
  c.alpha = 0.0;
  c.beta = 1.0;
  c.gamma = 0.0;
  c.p_min = 10.0;
  ShiftedCurve s = shifted_curve(c);
  CHECK(s.alpha == 0.0);
  CHECK(s.beta == doctest::Approx(1.0));
  CHECK(s.gamma == doctest::Approx(10.0));

  c = {};
  c.alpha = 1.0;
  c.p_min = 2.0;
  s = shifted_curve(c);
  CHECK(s.alpha == doctest::Approx(1.0));
  CHECK(s.beta == doctest::Approx(4.0));
  CHECK(s.gamma == doctest::Approx(4.0));

  c = {};
  c.alpha = 3.0;
  c.beta = 5.0;
  c.gamma = 7.0;
  c.p_min = 0.0;
  s = shifted_curve(c);
  CHECK(s.alpha == 3.0);
  CHECK(s.beta == 5.0);
  CHECK(s.gamma == 7.0);

  // evaluating the shifted quadratic at dP equals the curve at p_min + dP
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    UnitConfigCurve r;
    r.alpha = 1e-3 * u(rng);
    r.beta = 0.5 + u(rng);
    r.gamma = 10.0 * u(rng);
    r.p_min = 50.0 * u(rng);
    r.dp_max = 30.0 + 50.0 * u(rng);
    const ShiftedCurve sc = shifted_curve(r);
    for (double frac : {0.0, 0.3, 1.0}) {
      const double dp = frac * r.dp_max;
      const double direct = water_discharge(r, r.p_min + dp);
      const double shifted = sc.alpha * dp * dp + sc.beta * dp + sc.gamma;
      CHECK(shifted == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("load_instance parses and validates the 3-bus fixture") {
  const auto [np, hp] = write_pair(kNet3, kHyd3);
  const HucInstance inst = load_instance(np, hp);
  CHECK(inst.name == "net3");
  CHECK(inst.horizon == 4);
  CHECK(inst.network.buses.size() == 3);
  CHECK(inst.plants.size() == 2);
  CHECK(inst.base_mva == 100.0);
  CHECK(inst.theta == 0.0036);
  // loads converted to per-unit
  CHECK(inst.network.buses[1].p_load[2] == doctest::Approx(0.28));
  CHECK(inst.network.buses[2].q_load[0] == doctest::Approx(0.05));
  // derived admittance of branch 1-2: g = r/(r^2+x^2), b = -x/(r^2+x^2)
  const Line& l = inst.network.lines[0];
  CHECK(l.g == doctest::Approx(0.02 / (0.02 * 0.02 + 0.08 * 0.08)));
  CHECK(l.b == doctest::Approx(-0.08 / (0.02 * 0.02 + 0.08 * 0.08)));
  CHECK(l.flow_limit == doctest::Approx(0.6));
  // plant fields
  CHECK(inst.plants[0].water_value == 8000.0);
  CHECK_FALSE(inst.plants[0].target.has_value());
  CHECK(inst.plants[1].target == doctest::Approx(150.0));
  REQUIRE(inst.plants[1].downstream.has_value());
  CHECK(inst.plants[1].downstream->first == 1);
  CHECK(inst.plants[1].downstream->second == 1);
  CHECK(inst.slack_plant_index() == 0);
  const auto up = inst.upstream_of(0);
  REQUIRE(up.size() == 1);
  CHECK(up[0].first == 1);

  // canonical serialization is deterministic
  const HucInstance again = load_instance(np, hp);
  CHECK(canonical_serialization(inst) == canonical_serialization(again));
}

TEST_CASE("load_instance rejects malformed inputs") {
  // missing slack line
  std::string net = kNet3;
  net.erase(net.find("slack 1 1.0\n"), 12);
  {
    std::ofstream("model_bad.net") << net;
    std::ofstream("model_bad.hyd") << kHyd3;
    CHECK_THROWS_AS(load_instance("model_bad.net", "model_bad.hyd"), ParseError);
  }
  // slack bus id not in the table
  {
    std::string net2 = kNet3;
    net2.replace(net2.find("slack 1 1.0"), 11, "slack 9 1.0");
    std::ofstream("model_bad.net") << net2;
    CHECK_THROWS_AS(load_instance("model_bad.net", "model_bad.hyd"), ValidationError);
  }
  // inflow series of the wrong length
  {
    std::string hyd = kHyd3;
    hyd.replace(hyd.find("inflows 90 95 100 95"), 20, "inflows 90 95 100   ");
    std::ofstream("model_bad.net") << kNet3;
    std::ofstream("model_bad.hyd") << hyd;
    CHECK_THROWS(load_instance("model_bad.net", "model_bad.hyd"));
  }
  // two plants without targets
  {
    std::string hyd = kHyd3;
    hyd.erase(hyd.find("target 150\n"), 11);
    std::ofstream("model_bad.hyd") << hyd;
    std::ofstream("model_bad.net") << kNet3;
    CHECK_THROWS_AS(load_instance("model_bad.net", "model_bad.hyd"), ValidationError);
  }
}

TEST_CASE("upstream arrival accounting") {
  CHECK(HucInstance::upstream_arrival_hours(1, 0) == 1);
  CHECK(HucInstance::upstream_arrival_hours(1, 1) == 0);
  CHECK(HucInstance::upstream_arrival_hours(5, 2) == 3);
  CHECK(HucInstance::upstream_arrival_hours(2, 6) == 0);
}
