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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "phevcqr/common.hpp"

namespace phevcqr::plant {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InputError(std::string("plant parameter: ") + what);
}

}  // namespace

void validate(const PlantParams& p) {
  const auto& veh = p.vehicle;
  require(veh.mass > 0 && veh.aero_term > 0 && veh.rolling_coeff > 0 &&
              veh.wheel_radius > 0,
          "vehicle parameters must be positive");
  require(veh.driveline_efficiency > 0 && veh.driveline_efficiency <= 1,
          "driveline_efficiency must be in (0, 1]");
  const auto& bat = p.battery;
  require(bat.energy_capacity_wh > 0 && bat.max_discharge_power_w > 0 &&
              bat.max_charge_power_w > 0,
          "battery capacity and power limits must be positive");
  require(bat.soc_min >= 0 && bat.soc_min < bat.soc_max && bat.soc_max <= 1,
          "need 0 <= soc_min < soc_max <= 1");
  require(p.engine.willans_slope > 0 && p.engine.idle_rate > 0 &&
              p.engine.max_power_w > 0,
          "engine parameters must be positive");
  require(p.ems.charge_sustain_soc > bat.soc_min &&
              p.ems.charge_sustain_soc < bat.soc_max,
          "charge_sustain_soc must lie strictly inside (soc_min, soc_max)");
  require(p.ems.engine_assist_power_w > 0 &&
              p.ems.engine_assist_power_w <= bat.max_discharge_power_w,
          "engine_assist_power must be in (0, max_discharge_power]");
  const auto& sched = p.controller.schedule;
  require(!sched.empty(), "gain schedule is empty");
  for (std::size_t i = 0; i < sched.size(); ++i) {
    require(sched[i].kp > 0 && sched[i].ki > 0, "gains must be positive");
    if (i > 0) {
      require(sched[i].speed_mps > sched[i - 1].speed_mps,
              "gain breakpoints must be strictly increasing in speed");
    }
  }
  require(p.controller.integrator_clamp > 0 && p.controller.torque_limit > 0,
          "controller clamps must be positive");
  require(p.divergence_error_mps > 0 && p.divergence_window_s > 0,
          "divergence guard must be positive");
}

double pi_torque(double v_ref, double v, PiState& state,
                 const ControllerParams& ctl, double dt) {
  const auto& s = ctl.schedule;
  double kp = s.front().kp;
  double ki = s.front().ki;
  if (v >= s.back().speed_mps) {
    kp = s.back().kp;
    ki = s.back().ki;
  } else if (v > s.front().speed_mps) {
    auto hi = std::upper_bound(
        s.begin(), s.end(), v,
        [](double x, const GainPoint& g) { return x < g.speed_mps; });
    auto lo = hi - 1;
    const double w = (v - lo->speed_mps) / (hi->speed_mps - lo->speed_mps);
    kp = lo->kp + w * (hi->kp - lo->kp);
    ki = lo->ki + w * (hi->ki - lo->ki);
  }
  const double error = v_ref - v;
  state.integral = std::clamp(state.integral + ki * error * dt,
                              -ctl.integrator_clamp, ctl.integrator_clamp);
  return std::clamp(kp * error + state.integral, -ctl.torque_limit,
                    ctl.torque_limit);
}

double road_load(double v, const VehicleParams& veh) {
  return veh.rolling_coeff * veh.mass * kGravity + veh.aero_term * v * v;
}

PowerSplit ems_split(double p_req, double soc, double /*v*/,
                     const EmsParams& ems, const BatteryParams& bat,
                     const EngineParams& eng) {
  PowerSplit out;
  if (p_req == 0.0) return out;
  if (p_req < 0.0) {
    // Regeneration; the surplus goes to the friction brakes.
    if (soc < bat.soc_max) out.battery_w = std::max(p_req, -bat.max_charge_power_w);
    return out;
  }
  const bool battery_available = soc > bat.soc_min;
  if (battery_available && soc > ems.charge_sustain_soc &&
      p_req <= ems.engine_assist_power_w) {
    out.battery_w = p_req;  // charge depleting, all electric
    return out;
  }
  out.engine_w = std::min(p_req, eng.max_power_w);
  const double rest = p_req - out.engine_w;
  if (rest > 0.0) {
    out.battery_w = battery_available ? std::min(rest, bat.max_discharge_power_w) : 0.0;
    out.saturated = out.engine_w + out.battery_w < p_req;
  }
  return out;
}

double fuel_rate(double p_eng, const EngineParams& eng) {
  if (p_eng <= 0.0) return 0.0;
  return eng.idle_rate + eng.willans_slope * p_eng / 1000.0;
}

BatteryUpdate battery_step(double p_batt, double soc, double dt,
                           const BatteryParams& bat) {
  BatteryUpdate out;
  out.energy_j = p_batt * dt;
  const double next = soc - out.energy_j / (bat.energy_capacity_wh * 3600.0);
  out.soc = std::clamp(next, bat.soc_min, bat.soc_max);
  out.clipped = out.soc != next;
  return out;
}

double equivalent_fuel(double m_fuel_g, double e_batt_j) {
  return m_fuel_g + e_batt_j / kLowerHeatingValue;
}

EnergyResult simulate_energy(const edm::Trajectory& ref, double soc0,
                             const PlantParams& params,
                             std::vector<TraceRow>* trace) {
  const auto& bat = params.battery;
  const auto& veh = params.vehicle;
  if (ref.samples.empty()) throw InputError("reference trajectory is empty");
  if (!(soc0 >= bat.soc_min && soc0 <= bat.soc_max)) {
    throw InputError("initial SoC outside [soc_min, soc_max]");
  }
  const double dt = ref.dt;
  const double capacity_j = bat.energy_capacity_wh * 3600.0;
  const double eta = veh.driveline_efficiency;

  EnergyResult out;
  out.soc_trace.reserve(ref.samples.size());
  PiState pi;
  double v = 0.0;
  double soc = soc0;
  double sq_error = 0.0;
  double diverged_for = 0.0;

  for (const auto& sample : ref.samples) {
    out.soc_trace.push_back(soc);
    const double error = sample.v - v;
    sq_error += error * error;
    diverged_for = std::abs(error) > params.divergence_error_mps ? diverged_for + dt : 0.0;
    if (diverged_for >= params.divergence_window_s) {
      std::ostringstream msg;
      msg << "speed tracking diverged at t=" << sample.t << " s (v_ref="
          << sample.v << ", v=" << v << ")";
      throw SimulationError(msg.str());
    }

    // Model-based feedforward plus PI correction.
    const double feedforward =
        veh.wheel_radius * (veh.mass * sample.accel + road_load(sample.v, veh));
    const double torque = std::clamp(
        feedforward + pi_torque(sample.v, v, pi, params.controller, dt),
        -params.controller.torque_limit, params.controller.torque_limit);
    double force = torque / veh.wheel_radius;

    const double p_wheel = force * v;
    const double p_req = p_wheel > 0.0 ? p_wheel / eta : p_wheel * eta;
    PowerSplit split = ems_split(p_req, soc, v, params.ems, bat, params.engine);

    // Keep the battery inside its SoC window; the engine picks up the rest.
    const double max_draw = (soc - bat.soc_min) * capacity_j / dt;
    const double max_store = (bat.soc_max - soc) * capacity_j / dt;
    if (split.battery_w > max_draw) {
      const double excess = split.battery_w - max_draw;
      split.battery_w = max_draw;
      const double extra = std::min(excess, params.engine.max_power_w - split.engine_w);
      split.engine_w += extra;
      if (extra < excess) split.saturated = true;
    } else if (split.battery_w < -max_store) {
      split.battery_w = -max_store;
    }
    if (split.saturated) {
      ++out.saturated_steps;
      force = (split.engine_w + split.battery_w) * eta / v;
    }

    out.m_fuel_g += fuel_rate(split.engine_w, params.engine) * dt;
    const BatteryUpdate upd = battery_step(split.battery_w, soc, dt, bat);
    out.e_batt_j += upd.energy_j;
    if (upd.clipped) ++out.soc_clipped_steps;
    soc = upd.soc;

    if (trace) {
      trace->push_back({sample.t, v, split.engine_w, split.battery_w, soc, out.m_fuel_g});
    }
    v = std::max(0.0, v + dt * (force - road_load(v, veh)) / veh.mass);
  }

  out.soc_final = soc;
  out.m_f_eq_g = equivalent_fuel(out.m_fuel_g, out.e_batt_j);
  out.tracking_rmse_mps =
      std::sqrt(sq_error / static_cast<double>(ref.samples.size()));
  return out;
}

}  // namespace phevcqr::plant
