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

#include "phevcqr/edm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "phevcqr/common.hpp"

namespace phevcqr::edm {

Route::Route(std::vector<RouteSegment> segments)
    : segments_(std::move(segments)) {
  if (segments_.empty()) throw InputError("route has no segments");
  double end = 0.0;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!(s.length_m > 0.0) || !std::isfinite(s.length_m)) {
      throw InputError("segment " + std::to_string(i) +
                       ": length must be positive");
    }
    if (!(s.speed_limit_mps > 0.0) || !std::isfinite(s.speed_limit_mps)) {
      throw InputError("segment " + std::to_string(i) +
                       ": speed limit must be positive");
    }
    end += s.length_m;
    ends_.push_back(end);
    if (s.ends_with_stop) stop_lines_.push_back(end);
  }
}

std::size_t Route::segment_at(double x) const {
  auto it = std::upper_bound(ends_.begin(), ends_.end(), x);
  if (it == ends_.end()) return ends_.size() - 1;
  return static_cast<std::size_t>(it - ends_.begin());
}

double LeadProfile::speed_at(double t) const {
  if (speed_mps.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(std::max(0.0, std::floor(t / dt_s + 1e-9)));
  return speed_mps[std::min(k, speed_mps.size() - 1)];
}

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::kFreeway:
      return "FD";
    case Mode::kCarFollowing:
      return "CF";
    case Mode::kStop:
      return "SM";
  }
  return "?";
}

void validate(const DriverParams& p) {
  auto bad = [](const char* what) {
    throw InputError(std::string("driver parameter out of domain: ") + what);
  };
  if (!(p.a > 0.0) || !std::isfinite(p.a)) bad("a must be > 0");
  if (!(p.b > 0.0) || !std::isfinite(p.b)) bad("b must be > 0");
  if (!(p.delta > 0.0) || !std::isfinite(p.delta)) bad("delta must be > 0");
  if (!(p.c1 >= 0.0) || !std::isfinite(p.c1)) bad("c1 must be >= 0");
  if (!std::isfinite(p.theta)) bad("theta must be finite");
}

void validate(const DriverParams& p, const Route& route) {
  validate(p);
  for (std::size_t i = 0; i < route.size(); ++i) {
    if (!(route.segments()[i].speed_limit_mps - p.theta > 0.0)) {
      throw InputError("segment " + std::to_string(i) +
                       ": v_lim - theta must be positive");
    }
  }
}

double gap_to_next(double x_next, double x_ego, double x_safe) {
  return x_next - x_ego - x_safe;
}

double brake_distance(double v, const DriverParams& p) {
  return (1.0 + p.c1 / p.delta) * v * v / (2.0 * p.b);
}

namespace {

// Shared form of the freeway and car-following branches: approach `target`
// from below with a, from above with b.
double approach(double v, double target, const DriverParams& p) {
  if (v <= target) return p.a * (1.0 - std::pow(v / target, p.delta));
  return -p.b * (1.0 - std::pow(target / v, p.delta));
}

}  // namespace

double freeway_accel(double v, double speed_limit, const DriverParams& p) {
  return approach(v, speed_limit - p.theta, p);
}

double following_accel(double v, double lead_speed, const DriverParams& p) {
  return approach(v, lead_speed, p);
}

double stop_accel(double v, double gap, const DriverParams& p,
                  const DriverConstants& consts) {
  if (gap <= 0.0) return v > 0.0 ? -consts.a_brake_cap : 0.0;
  const double needed = v * v / (2.0 * gap);
  const double accel = -(needed * needed) / p.b;
  return std::clamp(accel, -consts.a_brake_cap, 0.0);
}

double edm_accel(Mode mode, double v, const DriverParams& params,
                 const ModeInputs& in, const DriverConstants& consts) {
  switch (mode) {
    case Mode::kFreeway:
      return freeway_accel(v, in.speed_limit, params);
    case Mode::kCarFollowing:
      if (!in.lead_speed) throw std::invalid_argument("CF needs a lead speed");
      return following_accel(v, *in.lead_speed, params);
    case Mode::kStop:
      if (!in.gap) throw std::invalid_argument("SM needs a gap");
      return stop_accel(v, *in.gap, params, consts);
  }
  return 0.0;
}

Perception perceive(const EgoState& ego, const Route& route,
                    const std::optional<LeadState>& lead,
                    const DriverConstants& consts,
                    std::size_t first_uncleared_stop) {
  Perception out;
  out.speed_limit = route.segments()[route.segment_at(ego.x)].speed_limit_mps;
  const auto& stops = route.stop_lines();
  if (first_uncleared_stop < stops.size()) {
    const double stop = stops[first_uncleared_stop];
    if (stop - ego.x <= consts.line_of_sight) {
      out.stop_gap = gap_to_next(stop, ego.x, consts.x_safe);
      out.obstacle_gap = out.stop_gap;
    }
  }
  if (lead && lead->x - ego.x <= consts.line_of_sight) {
    out.lead = lead;
    const double lead_gap = gap_to_next(lead->x, ego.x, consts.x_safe);
    if (!out.obstacle_gap || lead_gap < *out.obstacle_gap) {
      out.obstacle_gap = lead_gap;
    }
  }
  return out;
}

ModeChoice choose_mode(const Perception& per, double v,
                       const DriverParams& params,
                       const DriverConstants& consts) {
  ModeChoice c;
  c.following_enabled = per.lead.has_value() && per.lead->v >= consts.stop_speed;
  c.freeway_enabled = !per.lead.has_value();
  c.stop_enabled =
      per.obstacle_gap.has_value() && *per.obstacle_gap < brake_distance(v, params);
  // A stop sign in sight but not yet within braking distance, or a stopped
  // lead far ahead: keep cruising.
  if (!c.following_enabled && !c.freeway_enabled && !c.stop_enabled) {
    c.freeway_enabled = true;
  }

  c.accel = std::numeric_limits<double>::infinity();
  auto consider = [&](Mode m, double accel) {
    if (accel < c.accel) {
      c.accel = accel;
      c.mode = m;
    }
  };
  if (c.following_enabled) {
    consider(Mode::kCarFollowing, following_accel(v, per.lead->v, params));
  }
  if (c.freeway_enabled) {
    consider(Mode::kFreeway, freeway_accel(v, per.speed_limit, params));
  }
  if (c.stop_enabled) {
    consider(Mode::kStop, stop_accel(v, *per.obstacle_gap, params, consts));
  }
  return c;
}

Mode select_mode(const EgoState& ego, const Route& route,
                 const std::optional<LeadState>& lead,
                 const DriverParams& params, const DriverConstants& consts) {
  const auto& stops = route.stop_lines();
  const auto next = static_cast<std::size_t>(
      std::upper_bound(stops.begin(), stops.end(), ego.x) - stops.begin());
  return choose_mode(perceive(ego, route, lead, consts, next), ego.v, params,
                     consts)
      .mode;
}

EgoState step(const EgoState& ego, double accel, double dt) {
  EgoState next;
  next.x = ego.x + ego.v * dt;
  next.v = std::max(0.0, ego.v + accel * dt);
  next.t = ego.t + dt;
  return next;
}

Trajectory simulate_trip(const DriverParams& params, const Route& route,
                         const DriverConstants& consts,
                         const std::optional<LeadProfile>& lead) {
  validate(params, route);
  if (!(consts.dt > 0.0)) throw InputError("dt must be positive");

  Trajectory traj;
  traj.dt = consts.dt;
  traj.segments.assign(route.size(), SegmentSummary{});

  const auto& stops = route.stop_lines();
  const double route_end = route.total_length();
  const double ceiling = consts.time_ceiling_factor * route_end;
  const bool final_stop = route.segments().back().ends_with_stop;

  EgoState ego;
  std::size_t next_stop = 0;
  std::size_t segment = 0;
  double segment_start_t = 0.0;
  double dwell_left = -1.0;
  double lead_x = lead ? lead->initial_position_m : 0.0;
  std::size_t k = 0;

  auto close_segments = [&](double x, double t) {
    while (segment < route.size() && x >= route.segment_end(segment)) {
      traj.segments[segment].elapsed_s = t - segment_start_t;
      traj.segments[segment].distance_m = route.segments()[segment].length_m;
      segment_start_t = t;
      ++segment;
    }
  };

  for (;;) {
    ego.t = static_cast<double>(k) * consts.dt;
    close_segments(ego.x, ego.t);
    if (ego.x >= route_end) {
      traj.samples.push_back({ego.t, ego.x, ego.v, 0.0, Mode::kFreeway});
      break;
    }
    if (ego.t > ceiling) {
      std::ostringstream msg;
      msg << "trip exceeded " << ceiling << " s of simulated time in segment "
          << route.segment_at(ego.x) << " (x=" << ego.x << " m, v=" << ego.v
          << " m/s)";
      throw SimulationError(msg.str());
    }

    std::optional<LeadState> lead_state;
    if (lead) lead_state = LeadState{lead_x, lead->speed_at(ego.t)};

    double accel = 0.0;
    Mode mode = Mode::kStop;
    if (dwell_left > 0.0) {
      ego.v = 0.0;
      dwell_left -= consts.dt;
      if (dwell_left <= 1e-9) {
        dwell_left = -1.0;
        ++next_stop;
      }
    } else {
      const Perception per = perceive(ego, route, lead_state, consts, next_stop);
      if (per.stop_gap && *per.stop_gap <= 0.0 && ego.v < consts.stop_speed) {
        ego.v = 0.0;
        if (final_stop && next_stop + 1 == stops.size()) {
          traj.samples.push_back({ego.t, ego.x, 0.0, 0.0, Mode::kStop});
          // The final stop line is the route end for bookkeeping purposes.
          if (segment < route.size()) {
            traj.segments[segment].elapsed_s = ego.t - segment_start_t;
            traj.segments[segment].distance_m =
                ego.x - (segment == 0 ? 0.0 : route.segment_end(segment - 1));
          }
          break;
        }
        dwell_left = consts.stop_dwell_s;
      } else {
        const ModeChoice choice = choose_mode(per, ego.v, params, consts);
        accel = choice.accel;
        mode = choice.mode;
      }
    }

    traj.samples.push_back({ego.t, ego.x, ego.v, accel, mode});
    if (lead) lead_x += lead_state->v * consts.dt;
    ego = step(ego, accel, consts.dt);
    ++k;
  }
  return traj;
}

}  // namespace phevcqr::edm
