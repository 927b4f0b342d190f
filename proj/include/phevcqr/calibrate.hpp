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

// Genetic-algorithm calibration of driver parameters against a measured speed
// trace.

#ifndef PHEVCQR_CALIBRATE_HPP_
#define PHEVCQR_CALIBRATE_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "phevcqr/edm.hpp"

namespace phevcqr::calibrate {

// Uniformly sampled speed trace starting at t0.
struct ReferenceTrace {
  double t0 = 0.0;
  double dt = 0.1;
  std::vector<double> v;  // m/s

  double end_time() const {
    return t0 + dt * static_cast<double>(v.empty() ? 0 : v.size() - 1);
  }
};

// Throws InputError unless non-empty, dt > 0 and all speeds >= 0.
void validate(const ReferenceTrace& trace);

// Builds a trace from (t, v) columns; throws InputError on non-uniform
// spacing.
ReferenceTrace make_trace(const std::vector<double>& t, const std::vector<double>& v);

ReferenceTrace to_trace(const edm::Trajectory& trajectory);

// RMSE in mph after resampling both traces by linear interpolation onto a
// common grid (spacing = the smaller dt) over the overlapping time span.
// Throws std::invalid_argument when the overlap has zero length.
double speed_rmse(const ReferenceTrace& a, const ReferenceTrace& b);
double speed_rmse(const edm::Trajectory& simulated, const ReferenceTrace& reference);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Bounds in parameter order a, b, delta, c1, theta.
using ParamBounds = std::array<Interval, 5>;

inline ParamBounds default_bounds() {
  return {{{0.3, 4.0}, {0.3, 4.0}, {1.0, 10.0}, {0.0, 5.0}, {-5.0, 5.0}}};
}

std::array<double, 5> to_genes(const edm::DriverParams& p);
edm::DriverParams from_genes(const std::array<double, 5>& g);

struct GaConfig {
  int population = 50;
  int generations = 60;
  ParamBounds bounds = default_bounds();
  double crossover_rate = 0.9;
  double mutation_rate = 0.2;   // per-gene probability
  double mutation_scale = 0.1;  // fraction of the bound width
  int elite = 2;
  int tournament = 3;
  std::uint64_t seed = 1;
  // Optional explicit initial population; must hold `population` members.
  std::vector<edm::DriverParams> initial_population;
};

void validate(const GaConfig& config);

struct CalibrationResult {
  edm::DriverParams params;
  double rmse_mph = 0.0;
  // Best RMSE after initialisation (index 0) and after each generation.
  std::vector<double> history;
};

// Candidates whose simulation aborts or whose parameters are infeasible for
// the route score +inf. Throws SimulationError when no candidate ever
// simulates successfully.
CalibrationResult fit_edm(const ReferenceTrace& reference, const edm::Route& route,
                          const GaConfig& config,
                          const edm::DriverConstants& consts = {}, int jobs = 1);

}  // namespace phevcqr::calibrate

#endif  // PHEVCQR_CALIBRATE_HPP_
