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

#include "phevcqr/calibrate.hpp"

#include <cmath>

#include "gtest/gtest.h"
#include "phevcqr/common.hpp"

namespace phevcqr::calibrate {
namespace {

ReferenceTrace constant(double v, std::size_t n, double dt = 0.1) {
  return {0.0, dt, std::vector<double>(n, v)};
}

TEST(SpeedRmse, WorkedExamples) {
  EXPECT_EQ(speed_rmse(constant(10, 50), constant(10, 50)), 0.0);
  EXPECT_NEAR(speed_rmse(constant(10, 50), constant(11, 50)), 2.23694, 1e-12);
  ReferenceTrace a{0.0, 1.0, {5.0, 5.0}};
  ReferenceTrace b{0.0, 1.0, {6.0, 4.0}};
  EXPECT_NEAR(speed_rmse(a, b), 2.23694, 1e-12);
}

TEST(SpeedRmse, SymmetricAndUsesOverlapOnly) {
  ReferenceTrace a{0.0, 0.1, {}};
  ReferenceTrace b{0.5, 0.2, {}};
  for (int i = 0; i < 100; ++i) a.v.push_back(0.1 * i);
  for (int i = 0; i < 30; ++i) b.v.push_back(0.1 * i + 1.0);
  const double ab = speed_rmse(a, b);
  EXPECT_EQ(ab, speed_rmse(b, a));
  EXPECT_GT(ab, 0.0);
  // a(t) = t, b(t) = 0.5 t + 0.75; residual 0.5 t - 0.75 over [0.5, 6.3].
  double sum = 0;
  int n = 0;
  for (double t = 0.5; t <= 6.3 + 1e-9; t += 0.1, ++n) sum += std::pow(0.5 * t - 0.75, 2);
  EXPECT_NEAR(ab, mps_to_mph(std::sqrt(sum / n)), 1e-9);
}

TEST(SpeedRmse, ZeroOverlapIsAnError) {
  ReferenceTrace a{0.0, 0.1, {1.0}};
  EXPECT_THROW(speed_rmse(a, a), std::invalid_argument);
  ReferenceTrace b{10.0, 0.1, {1.0, 2.0}};
  EXPECT_THROW(speed_rmse(constant(1, 10), b), std::invalid_argument);
}

TEST(MakeTrace, RejectsBadInput) {
  EXPECT_THROW(make_trace({}, {}), InputError);
  EXPECT_THROW(make_trace({0, 0.1, 0.3}, {1, 1, 1}), InputError);
  EXPECT_THROW(make_trace({0, 0.1}, {1, -1}), InputError);
  auto tr = make_trace({1.0, 1.5, 2.0}, {0, 1, 2});
  EXPECT_DOUBLE_EQ(tr.dt, 0.5);
  EXPECT_DOUBLE_EQ(tr.t0, 1.0);
}

TEST(FitEdm, IdenticalPopulationStaysPut) {
  edm::Route route({{500, 15, true}});
  edm::DriverParams p{1.5, 2.0, 4.0, 1.0, 0.5};
  auto ref = to_trace(edm::simulate_trip(p, route));
  GaConfig cfg;
  cfg.population = 6;
  cfg.generations = 1;
  cfg.mutation_rate = 0.0;
  cfg.initial_population.assign(6, p);
  auto res = fit_edm(ref, route, cfg);
  EXPECT_EQ(res.params, p);
  EXPECT_EQ(res.rmse_mph, 0.0);
}

TEST(FitEdm, SelfCalibrationRecovers) {
  edm::Route route({{800, 17.9, true}});
  edm::DriverParams truth{2.2, 1.4, 5.0, 1.5, -1.2};
  auto ref = to_trace(edm::simulate_trip(truth, route));
  GaConfig cfg;
  cfg.seed = 42;
  auto res = fit_edm(ref, route, cfg);
  EXPECT_LT(res.rmse_mph, 0.5);
  for (std::size_t g = 1; g < res.history.size(); ++g) {
    EXPECT_LE(res.history[g], res.history[g - 1]);
  }
  EXPECT_LE(res.rmse_mph, res.history.front());
  const auto genes = to_genes(res.params);
  for (std::size_t g = 0; g < 5; ++g) {
    EXPECT_GE(genes[g], cfg.bounds[g].lo);
    EXPECT_LE(genes[g], cfg.bounds[g].hi);
  }
}

TEST(FitEdm, DeterministicUnderSeedAndImprovesOnInitialBest) {
  edm::Route route({{600, 13.4, true}});
  auto ref = to_trace(edm::simulate_trip({1.0, 2.5, 3.0, 0.5, 1.0}, route));
  GaConfig cfg;
  cfg.population = 20;
  cfg.generations = 10;
  for (std::uint64_t seed : {3u, 4u}) {
    cfg.seed = seed;
    auto a = fit_edm(ref, route, cfg);
    auto b = fit_edm(ref, route, cfg, {}, 2);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.history, b.history);
    EXPECT_LE(a.rmse_mph, a.history.front());
  }
}

TEST(FitEdm, InvalidConfig) {
  edm::Route route({{600, 13.4, true}});
  auto ref = constant(5, 10);
  GaConfig cfg;
  cfg.population = 3;
  EXPECT_THROW(fit_edm(ref, route, cfg), InputError);
  cfg = {};
  cfg.bounds[0] = {1, 1};
  EXPECT_THROW(fit_edm(ref, route, cfg), InputError);
  EXPECT_THROW(fit_edm(ReferenceTrace{}, route, GaConfig{}), InputError);
}

TEST(FitEdm, AllCandidatesAbortingIsAFailure) {
  edm::Route route({{600, 3.0, true}});
  GaConfig cfg;
  cfg.population = 4;
  cfg.generations = 1;
  cfg.bounds[4] = {3.5, 5.0};  // theta >= v_lim for every candidate
  EXPECT_THROW(fit_edm(constant(2, 100), route, cfg), SimulationError);
}

}  // namespace
}  // namespace phevcqr::calibrate
