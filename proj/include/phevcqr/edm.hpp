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

// Enhanced Driver Model: a three-mode longitudinal driver (freeway driving,
// car following, stop mode) that turns a route description and five
// behavioural parameters into a reference speed trajectory.

#ifndef PHEVCQR_EDM_HPP_
#define PHEVCQR_EDM_HPP_

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace phevcqr::edm {

// Behavioural parameters of one driver on one route segment.
struct DriverParams {
  double a = 1.5;      // max acceleration, m/s^2
  double b = 1.5;      // max deceleration magnitude, m/s^2
  double delta = 4.0;  // acceleration exponent
  double c1 = 0.5;     // critical braking calibration
  double theta = 0.0;  // speed-limit offset, m/s (positive = below limit)

  bool operator==(const DriverParams&) const = default;
};

struct RouteSegment {
  double length_m = 0.0;
  double speed_limit_mps = 0.0;
  bool ends_with_stop = false;

  bool operator==(const RouteSegment&) const = default;
};

class Route {
 public:
  // Throws InputError on an empty route or non-positive length/limit.
  explicit Route(std::vector<RouteSegment> segments);

  const std::vector<RouteSegment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  double total_length() const { return ends_.back(); }
  // Cumulative position of the end of segment i.
  double segment_end(std::size_t i) const { return ends_[i]; }
  // Index of the segment containing x; positions past the end map to the
  // last segment.
  std::size_t segment_at(double x) const;
  // Positions of stop lines, ascending.
  const std::vector<double>& stop_lines() const { return stop_lines_; }

 private:
  std::vector<RouteSegment> segments_;
  std::vector<double> ends_;
  std::vector<double> stop_lines_;
};

struct EgoState {
  double x = 0.0;  // m
  double v = 0.0;  // m/s
  double t = 0.0;  // s
};

struct LeadState {
  double x = 0.0;
  double v = 0.0;
};

// Lead vehicle driven open-loop: starts at `initial_position_m` and follows
// `speed_mps` sampled every `dt_s`; the last speed is held afterwards.
struct LeadProfile {
  double initial_position_m = 0.0;
  std::vector<double> speed_mps;
  double dt_s = 0.1;

  double speed_at(double t) const;
};

struct DriverConstants {
  double x_safe = 2.0;           // standstill safe gap, m
  double line_of_sight = 100.0;  // m
  double dt = 0.1;               // s
  double a_brake_cap = 9.0;      // m/s^2
  double stop_dwell_s = 2.0;
  double stop_speed = 0.1;       // m/s, "at rest" threshold
  // Simulated-time ceiling = time_ceiling_factor * route length / (1 m/s).
  double time_ceiling_factor = 10.0;
};

enum class Mode { kFreeway, kCarFollowing, kStop };

std::string_view mode_name(Mode mode);

// Throws InputError when a parameter is out of domain or v_lim - theta <= 0
// on any segment.
void validate(const DriverParams& params, const Route& route);
void validate(const DriverParams& params);

double gap_to_next(double x_next, double x_ego, double x_safe);

// Critical braking distance (1 + c1/delta) v^2 / (2b).
double brake_distance(double v, const DriverParams& params);

// Right-hand sides of the individual modes.
double freeway_accel(double v, double speed_limit, const DriverParams& params);
double following_accel(double v, double lead_speed, const DriverParams& params);
// Clamped to [-a_brake_cap, 0]. A non-positive gap returns -a_brake_cap for a
// moving vehicle and 0 at rest; the trip simulator holds the vehicle.
double stop_accel(double v, double gap, const DriverParams& params,
                  const DriverConstants& consts);

struct ModeInputs {
  double speed_limit = 0.0;
  std::optional<double> lead_speed;
  std::optional<double> gap;
};

// Acceleration of one mode; throws std::invalid_argument if the mode's
// target is missing.
double edm_accel(Mode mode, double v, const DriverParams& params,
                 const ModeInputs& inputs, const DriverConstants& consts);

// What the driver sees at one instant.
struct Perception {
  double speed_limit = 0.0;
  std::optional<double> stop_gap;      // to the next uncleared stop in LoS
  std::optional<LeadState> lead;       // lead in LoS
  std::optional<double> obstacle_gap;  // nearer of stop and lead
};

Perception perceive(const EgoState& ego, const Route& route,
                    const std::optional<LeadState>& lead,
                    const DriverConstants& consts,
                    std::size_t first_uncleared_stop = 0);

struct ModeChoice {
  Mode mode = Mode::kFreeway;
  double accel = 0.0;
  bool freeway_enabled = false;
  bool following_enabled = false;
  bool stop_enabled = false;
};

// Evaluates every enabled mode and applies the smallest acceleration.
ModeChoice choose_mode(const Perception& perception, double v,
                       const DriverParams& params,
                       const DriverConstants& consts);

// Stop lines at or behind x_ego are treated as cleared.
Mode select_mode(const EgoState& ego, const Route& route,
                 const std::optional<LeadState>& lead,
                 const DriverParams& params, const DriverConstants& consts);

// Forward Euler: position advances with the pre-step speed, speed is clamped
// at zero.
EgoState step(const EgoState& ego, double accel, double dt);

struct TrajectorySample {
  double t = 0.0;
  double x = 0.0;
  double v = 0.0;
  double accel = 0.0;
  Mode mode = Mode::kFreeway;
};

struct SegmentSummary {
  double elapsed_s = 0.0;
  double distance_m = 0.0;
};

struct Trajectory {
  double dt = 0.1;
  std::vector<TrajectorySample> samples;
  std::vector<SegmentSummary> segments;

  double duration() const { return samples.empty() ? 0.0 : samples.back().t; }
};

// Simulates a trip from rest at the start of the route. Throws
// SimulationError naming the segment when the time ceiling is exceeded.
Trajectory simulate_trip(const DriverParams& params, const Route& route,
                         const DriverConstants& consts = {},
                         const std::optional<LeadProfile>& lead = std::nullopt);

}  // namespace phevcqr::edm

#endif  // PHEVCQR_EDM_HPP_
