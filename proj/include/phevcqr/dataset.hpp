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

// Monte Carlo generation of the supervised dataset: every sampled driver
// drives every route segment from every initial state of charge.

#ifndef PHEVCQR_DATASET_HPP_
#define PHEVCQR_DATASET_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "phevcqr/common.hpp"
#include "phevcqr/edm.hpp"
#include "phevcqr/plant.hpp"

namespace phevcqr::synth {

inline constexpr std::size_t kFeatureCount = 8;

// Column order of the regression features.
inline const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names{"a",         "b",     "delta", "c1",
                                              "theta",     "v_lim_mps", "l_r_m", "soc0"};
  return names;
}

struct FeatureRow {
  edm::DriverParams driver;
  double v_lim_mps = 0.0;
  double l_r_m = 0.0;
  double soc0 = 0.0;
  double m_f_eq_g = 0.0;

  std::array<double, kFeatureCount> features() const {
    return {driver.a, driver.b,  driver.delta, driver.c1,
            driver.theta, v_lim_mps, l_r_m,    soc0};
  }
};

struct Exclusion {
  std::size_t param_index = 0;
  std::size_t segment_index = 0;
  double soc0 = 0.0;
  std::string reason;
};

struct Dataset {
  std::vector<FeatureRow> rows;
  std::uint64_t seed = 0;
  std::string route_id;
  std::vector<double> soc0_list;
  std::size_t param_count = 0;
  std::size_t segment_count = 0;
  std::vector<Exclusion> exclusions;

  FeatureMatrix features() const;
  std::vector<double> targets() const;
};

// Converts between n x 5 matrices (a, b, delta, c1, theta) and parameter
// lists.
FeatureMatrix to_matrix(const std::vector<edm::DriverParams>& params);
std::vector<edm::DriverParams> to_params(const FeatureMatrix& m);

struct SimulationSetup {
  edm::DriverConstants driver;
  plant::PlantParams plant;
  int jobs = 1;
  // Generation fails when more than this fraction of trips abort.
  double max_exclusion_fraction = 0.01;
};

// Rows follow the nested order param -> segment -> soc0. Aborted trips are
// left out and listed in `exclusions`; throws std::runtime_error when the
// excluded share reaches max_exclusion_fraction.
Dataset generate_dataset(const std::vector<edm::DriverParams>& params,
                         const std::vector<edm::RouteSegment>& segments,
                         const std::vector<double>& soc0_list,
                         const SimulationSetup& setup);

}  // namespace phevcqr::synth

#endif  // PHEVCQR_DATASET_HPP_
