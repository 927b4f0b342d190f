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

// Forward-looking PHEV energy model: a gain-scheduled PI speed controller
// drives a point-mass vehicle whose traction power is split between a
// Willans-line engine and a power-limited battery by a two-mode rule-based
// energy management strategy.

#ifndef PHEVCQR_PLANT_HPP_
#define PHEVCQR_PLANT_HPP_

#include <vector>

#include "phevcqr/edm.hpp"

namespace phevcqr::plant {

// Lower heating value used to convert battery energy to fuel mass, J/g.
inline constexpr double kLowerHeatingValue = 42761.0;

struct VehicleParams {
  double mass = 2200.0;                // kg
  double aero_term = 0.40;             // 0.5 rho Cd A, kg/m
  double rolling_coeff = 0.009;
  double driveline_efficiency = 0.90;
  double wheel_radius = 0.36;          // m
};

struct BatteryParams {
  double energy_capacity_wh = 12000.0;
  double max_discharge_power_w = 70000.0;
  double max_charge_power_w = 50000.0;
  double soc_min = 0.15;
  double soc_max = 0.95;
};

struct EngineParams {
  double willans_slope = 0.075;  // g per kJ of engine output
  double idle_rate = 0.15;       // g/s
  double max_power_w = 120000.0;
};

struct EmsParams {
  double charge_sustain_soc = 0.25;
  // In charge-depleting operation the engine stays off up to this demand.
  double engine_assist_power_w = 70000.0;
};

struct GainPoint {
  double speed_mps = 0.0;
  double kp = 0.0;  // N m per m/s
  double ki = 0.0;  // N m per m
};

struct ControllerParams {
  std::vector<GainPoint> schedule{{5.0, 1200.0, 250.0}, {25.0, 2000.0, 400.0}};
  double integrator_clamp = 500.0;  // N m
  double torque_limit = 8000.0;     // N m at the wheel, symmetric
};

struct PlantParams {
  VehicleParams vehicle;
  BatteryParams battery;
  EngineParams engine;
  EmsParams ems;
  ControllerParams controller;
  // Abort when |v_ref - v| exceeds the limit for the whole window.
  double divergence_error_mps = 5.0;
  double divergence_window_s = 5.0;
};

// Throws InputError when a parameter violates its documented domain.
void validate(const PlantParams& params);

struct PiState {
  double integral = 0.0;  // N m
};

// PI law with gains interpolated linearly in measured speed (held constant
// outside the schedule). The integral term is clamped to
// +/- integrator_clamp, the output to +/- torque_limit.
double pi_torque(double v_ref, double v, PiState& state,
                 const ControllerParams& controller, double dt);

// Flat-road resistance rolling_coeff m g + aero_term v^2, N.
double road_load(double v, const VehicleParams& vehicle);

struct PowerSplit {
  double engine_w = 0.0;
  double battery_w = 0.0;
  bool saturated = false;  // demand above the combined source limits
};

PowerSplit ems_split(double p_req, double soc, double v, const EmsParams& ems,
                     const BatteryParams& battery, const EngineParams& engine);

double fuel_rate(double p_eng, const EngineParams& engine);

struct BatteryUpdate {
  double soc = 0.0;
  double energy_j = 0.0;  // positive = drawn from the battery
  bool clipped = false;
};

BatteryUpdate battery_step(double p_batt, double soc, double dt,
                           const BatteryParams& battery);

double equivalent_fuel(double m_fuel_g, double e_batt_j);

struct TraceRow {
  double t = 0.0;
  double v = 0.0;
  double engine_w = 0.0;
  double battery_w = 0.0;
  double soc = 0.0;
  double fuel_g = 0.0;  // cumulative
};

struct EnergyResult {
  double m_fuel_g = 0.0;
  double e_batt_j = 0.0;
  double m_f_eq_g = 0.0;
  double soc_final = 0.0;
  std::vector<double> soc_trace;
  double tracking_rmse_mps = 0.0;
  int saturated_steps = 0;
  int soc_clipped_steps = 0;
};

// Closed-loop run over the reference trajectory, starting at rest with the
// given initial state of charge. Throws SimulationError on tracking
// divergence.
EnergyResult simulate_energy(const edm::Trajectory& reference, double soc0,
                             const PlantParams& params,
                             std::vector<TraceRow>* trace = nullptr);

}  // namespace phevcqr::plant

#endif  // PHEVCQR_PLANT_HPP_
