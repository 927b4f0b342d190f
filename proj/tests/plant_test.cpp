// Copyright 2026 The phevcqr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "phevcqr/plant.hpp"

#include <cmath>

#include "gtest/gtest.h"
#include "phevcqr/common.hpp"
#include "phevcqr/defaults.hpp"

namespace phevcqr::plant {
namespace {

edm::DriverParams driver() { return {1.8, 2.0, 4.0, 0.5, -1.0}; }

TEST(PiTorque, ZeroErrorGivesZero) {
  PiState state;
  ControllerParams ctl;
  EXPECT_DOUBLE_EQ(pi_torque(10, 10, state, ctl, 0.1), 0.0);
}

TEST(PiTorque, OneStepWithConstantError) {
  ControllerParams ctl;
  ctl.schedule = {{5, 800, 150}};
  PiState state;
  const double e = 0.5;
  EXPECT_DOUBLE_EQ(pi_torque(10 + e, 10, state, ctl, 0.1), 800 * e + 150 * e * 0.1);
}

TEST(PiTorque, InterpolatesGainsBetweenBreakpoints) {
  ControllerParams ctl;
  ctl.schedule = {{5, 1000, 100}, {25, 3000, 300}};
  PiState state;
  // v = 15 is halfway: kp = 2000, ki = 200.
  EXPECT_DOUBLE_EQ(pi_torque(16, 15, state, ctl, 0.1), 2000 + 200 * 0.1);
}

TEST(PiTorque, Saturates) {
  ControllerParams ctl;
  PiState state;
  EXPECT_DOUBLE_EQ(pi_torque(100, 0, state, ctl, 0.1), ctl.torque_limit);
  EXPECT_DOUBLE_EQ(pi_torque(0, 100, state, ctl, 0.1), -ctl.torque_limit);
  for (int i = 0; i < 1000; ++i) pi_torque(1, 0, state, ctl, 0.1);
  EXPECT_DOUBLE_EQ(state.integral, ctl.integrator_clamp);
}

TEST(RoadLoad, WorkedExamples) {
  VehicleParams v;
  v.rolling_coeff = 0.01;
  v.mass = 2000;
  EXPECT_NEAR(road_load(0, v), 196.2, 1e-12);
  v.rolling_coeff = 0;
  v.aero_term = 0.4;
  EXPECT_NEAR(road_load(20, v), 160, 1e-12);
  EXPECT_DOUBLE_EQ(road_load(0, v), 0);
}

TEST(EmsSplit, WorkedExamples) {
  EmsParams ems;
  BatteryParams bat;
  EngineParams eng;
  eng.max_power_w = 100000;
  auto s = ems_split(10000, 0.40, 10, ems, bat, eng);
  EXPECT_EQ(s.engine_w, 0);
  EXPECT_EQ(s.battery_w, 10000);
  s = ems_split(30000, 0.20, 10, ems, bat, eng);
  EXPECT_EQ(s.engine_w, 30000);
  EXPECT_EQ(s.battery_w, 0);
  s = ems_split(0, 0.40, 10, ems, bat, eng);
  EXPECT_EQ(s.engine_w, 0);
  EXPECT_EQ(s.battery_w, 0);
}

TEST(EmsSplit, RegenerationAndSaturation) {
  EmsParams ems;
  BatteryParams bat;
  EngineParams eng;
  auto s = ems_split(-80000, 0.5, 10, ems, bat, eng);
  EXPECT_EQ(s.battery_w, -bat.max_charge_power_w);
  EXPECT_EQ(s.engine_w, 0);
  s = ems_split(-1000, bat.soc_max, 10, ems, bat, eng);
  EXPECT_EQ(s.battery_w, 0);
  // Charge depleting but above the assist threshold: blended.
  s = ems_split(150000, 0.5, 10, ems, bat, eng);
  EXPECT_EQ(s.engine_w, eng.max_power_w);
  EXPECT_EQ(s.battery_w, 30000);
  EXPECT_FALSE(s.saturated);
  s = ems_split(1e6, 0.5, 10, ems, bat, eng);
  EXPECT_TRUE(s.saturated);
  EXPECT_EQ(s.engine_w + s.battery_w, eng.max_power_w + bat.max_discharge_power_w);
}

TEST(FuelRate, WorkedExamples) {
  EngineParams eng;
  EXPECT_EQ(fuel_rate(0, eng), 0);
  eng.idle_rate = 0.2;
  eng.willans_slope = 0.08;
  EXPECT_NEAR(fuel_rate(50000, eng), 4.2, 1e-12);
  EXPECT_TRUE(std::isfinite(fuel_rate(eng.max_power_w, eng)));
}

TEST(BatteryStep, WorkedExamples) {
  BatteryParams bat;
  bat.energy_capacity_wh = 10000;
  auto u = battery_step(3600, 0.5, 1, bat);
  EXPECT_NEAR(0.5 - u.soc, 1e-4, 1e-15);
  EXPECT_EQ(u.energy_j, 3600);
  u = battery_step(0, 0.5, 1, bat);
  EXPECT_EQ(u.soc, 0.5);
  u = battery_step(-3600, 0.5, 1, bat);
  EXPECT_GT(u.soc, 0.5);
  u = battery_step(1e9, 0.2, 1, bat);
  EXPECT_EQ(u.soc, bat.soc_min);
  EXPECT_TRUE(u.clipped);
}

TEST(EquivalentFuel, WorkedExamples) {
  EXPECT_NEAR(equivalent_fuel(500, 4.2761e6), 600, 600 * 1e-12);
  EXPECT_EQ(equivalent_fuel(123.25, 0), 123.25);
  EXPECT_NEAR(equivalent_fuel(0, 42761), 1, 1e-15);
}

TEST(SimulateEnergy, ZeroSpeedReference) {
  edm::Trajectory ref;
  for (int k = 0; k < 100; ++k) ref.samples.push_back({0.1 * k, 0, 0, 0, edm::Mode::kStop});
  auto r = simulate_energy(ref, 0.4, PlantParams{});
  EXPECT_EQ(r.m_fuel_g, 0);
  EXPECT_EQ(r.e_batt_j, 0);
  EXPECT_EQ(r.m_f_eq_g, 0);
}

TEST(SimulateEnergy, StandardRouteTracksAndStaysBounded) {
  PlantParams params;
  auto ref = edm::simulate_trip(driver(), standard_route());
  for (double soc0 : default_soc0()) {
    std::vector<TraceRow> trace;
    auto r = simulate_energy(ref, soc0, params, &trace);
    EXPECT_LT(r.tracking_rmse_mps, 0.5);
    EXPECT_GT(r.m_f_eq_g, 0);
    double sum = 0;
    double fuel = 0;
    for (const auto& row : trace) {
      EXPECT_GE(row.soc, params.battery.soc_min);
      EXPECT_LE(row.soc, params.battery.soc_max);
      EXPECT_GE(row.fuel_g, fuel);
      fuel = row.fuel_g;
      sum += row.battery_w * ref.dt;
    }
    EXPECT_NEAR(r.e_batt_j, sum, 1e-9 * std::abs(sum));
    EXPECT_NEAR(r.m_f_eq_g, r.m_fuel_g + r.e_batt_j / kLowerHeatingValue, 1e-9);
  }
}

TEST(SimulateEnergy, LowStartingChargeUsesEngine) {
  auto ref = edm::simulate_trip(driver(), standard_route());
  auto low = simulate_energy(ref, 0.26, PlantParams{});
  auto high = simulate_energy(ref, 0.40, PlantParams{});
  EXPECT_GT(low.m_fuel_g, 0);
  EXPECT_EQ(high.m_fuel_g, 0);
  EXPECT_LT(low.soc_final, 0.26);
}

TEST(SimulateEnergy, DeterministicAndNoBatteryMeansFuelOnly) {
  PlantParams params;
  auto ref = edm::simulate_trip(driver(), edm::Route({{1500, 20, true}}));
  auto a = simulate_energy(ref, 0.3, params);
  auto b = simulate_energy(ref, 0.3, params);
  EXPECT_EQ(a.m_f_eq_g, b.m_f_eq_g);
  EXPECT_EQ(a.soc_trace, b.soc_trace);
  EXPECT_EQ(equivalent_fuel(a.m_fuel_g, 0.0), a.m_fuel_g);
}

TEST(SimulateEnergy, LongerRouteNeverCheaper) {
  PlantParams params;
  for (bool stop : {false, true}) {
    for (double soc0 : default_soc0()) {
      double prev = 0;
      for (double len : {400.0, 800.0, 1600.0, 3200.0}) {
        auto ref = edm::simulate_trip(driver(), edm::Route({{len, 17, stop}}));
        auto r = simulate_energy(ref, soc0, params);
        EXPECT_GE(r.m_f_eq_g, prev) << "len=" << len << " soc0=" << soc0;
        prev = r.m_f_eq_g;
      }
    }
  }
}

TEST(SimulateEnergy, DivergenceAborts) {
  PlantParams params;
  params.controller.torque_limit = 50;  // far too weak to follow anything
  auto ref = edm::simulate_trip(driver(), edm::Route({{2000, 25, false}}));
  EXPECT_THROW(simulate_energy(ref, 0.4, params), SimulationError);
}

TEST(Validate, RejectsBadParams) {
  PlantParams p;
  EXPECT_NO_THROW(validate(p));
  p.ems.charge_sustain_soc = 0.1;
  EXPECT_THROW(validate(p), InputError);
  p = {};
  p.controller.schedule = {{10, 1, 1}, {5, 1, 1}};
  EXPECT_THROW(validate(p), InputError);
  p = {};
  p.vehicle.driveline_efficiency = 1.5;
  EXPECT_THROW(validate(p), InputError);
}

}  // namespace
}  // namespace phevcqr::plant
