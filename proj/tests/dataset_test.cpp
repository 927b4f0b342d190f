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

#include "phevcqr/dataset.hpp"

#include <chrono>
#include <iostream>

#include "gtest/gtest.h"
#include "phevcqr/defaults.hpp"

namespace phevcqr::synth {
namespace {

TEST(GenerateDataset, SingleTripMatchesDirectSimulation) {
  edm::DriverParams p{1.6, 1.8, 4.0, 0.7, -0.5};
  edm::RouteSegment seg{900, 15.6, true};
  SimulationSetup setup;
  auto ds = generate_dataset({p}, {seg}, {0.3}, setup);
  ASSERT_EQ(ds.rows.size(), 1u);
  auto traj = edm::simulate_trip(p, edm::Route({seg}));
  auto energy = plant::simulate_energy(traj, 0.3, setup.plant);
  EXPECT_EQ(ds.rows[0].m_f_eq_g, energy.m_f_eq_g);
  EXPECT_EQ(ds.rows[0].l_r_m, 900);
  EXPECT_EQ(ds.rows[0].v_lim_mps, 15.6);
  EXPECT_EQ(ds.rows[0].soc0, 0.3);
}

TEST(GenerateDataset, CardinalityOrderAndDeterminism) {
  std::vector<edm::DriverParams> params{{1.2, 1.5, 3, 0.2, 0.5}, {2.5, 2.5, 6, 1.0, -2.0},
                                        {0.8, 1.0, 2, 3.0, 1.5}};
  const auto segs = default_segments();
  SimulationSetup setup;
  setup.jobs = 2;
  auto a = generate_dataset(params, segs, default_soc0(), setup);
  ASSERT_EQ(a.rows.size(), params.size() * segs.size() * 3);
  EXPECT_TRUE(a.exclusions.empty());
  // param -> segment -> soc0
  EXPECT_EQ(a.rows[0].driver, params[0]);
  EXPECT_EQ(a.rows[1].soc0, 0.30);
  EXPECT_EQ(a.rows[3].l_r_m, segs[1].length_m);
  EXPECT_EQ(a.rows[24].driver, params[1]);
  setup.jobs = 1;
  auto b = generate_dataset(params, segs, default_soc0(), setup);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].m_f_eq_g, b.rows[i].m_f_eq_g);
    EXPECT_GE(a.rows[i].m_f_eq_g, 0.0);
  }
  auto x = a.features();
  EXPECT_EQ(x.cols(), kFeatureCount);
  EXPECT_EQ(x(5, 6), a.rows[5].l_r_m);
}

TEST(GenerateDataset, AbortedTripsAreExcludedOrFailTheRun) {
  std::vector<edm::DriverParams> params(150, {1.5, 1.5, 4, 0.5, 0.0});
  params[7].theta = 20.0;  // infeasible on a 15 m/s segment
  SimulationSetup setup;
  auto ds = generate_dataset(params, {{300, 15, false}}, {0.4}, setup);
  EXPECT_EQ(ds.rows.size(), 149u);
  ASSERT_EQ(ds.exclusions.size(), 1u);
  EXPECT_EQ(ds.exclusions[0].param_index, 7u);
  params[8].theta = 20.0;
  EXPECT_THROW(generate_dataset(params, {{300, 15, false}}, {0.4}, setup), std::runtime_error);
}

TEST(GenerateDataset, RejectsInvalidInputs) {
  SimulationSetup setup;
  EXPECT_THROW(generate_dataset({{}}, {}, {0.3}, setup), InputError);
  EXPECT_THROW(generate_dataset({{}}, default_segments(), {}, setup), InputError);
  EXPECT_THROW(generate_dataset({{}}, default_segments(), {1.2}, setup), InputError);
}

TEST(ParamMatrix, RoundTrip) {
  std::vector<edm::DriverParams> params{{1, 2, 3, 4, 5}, {0.5, 0.6, 0.7, 0.8, -0.9}};
  EXPECT_EQ(to_params(to_matrix(params)), params);
}

}  // namespace
}  // namespace phevcqr::synth
