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

#include <cmath>
#include <optional>
#include <stdexcept>

#include "phevcqr/parallel.hpp"

namespace phevcqr::synth {

FeatureMatrix Dataset::features() const {
  FeatureMatrix m(rows.size(), kFeatureCount);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto f = rows[i].features();
    std::copy(f.begin(), f.end(), m.row(i).begin());
  }
  return m;
}

std::vector<double> Dataset::targets() const {
  std::vector<double> y;
  y.reserve(rows.size());
  for (const auto& r : rows) y.push_back(r.m_f_eq_g);
  return y;
}

FeatureMatrix to_matrix(const std::vector<edm::DriverParams>& params) {
  FeatureMatrix m(params.size(), 5);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    m(i, 0) = p.a;
    m(i, 1) = p.b;
    m(i, 2) = p.delta;
    m(i, 3) = p.c1;
    m(i, 4) = p.theta;
  }
  return m;
}

std::vector<edm::DriverParams> to_params(const FeatureMatrix& m) {
  if (m.cols() != 5 && m.rows() > 0) {
    throw InputError("parameter matrix must have 5 columns (a, b, delta, c1, theta)");
  }
  std::vector<edm::DriverParams> out;
  out.reserve(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out.push_back({m(i, 0), m(i, 1), m(i, 2), m(i, 3), m(i, 4)});
  }
  return out;
}

namespace {

struct TripOutcome {
  std::vector<std::optional<double>> targets;  // per soc0
  std::vector<std::string> errors;
};

}  // namespace

Dataset generate_dataset(const std::vector<edm::DriverParams>& params,
                         const std::vector<edm::RouteSegment>& segments,
                         const std::vector<double>& soc0_list,
                         const SimulationSetup& setup) {
  if (segments.empty()) throw InputError("dataset generation needs at least one segment");
  if (soc0_list.empty()) throw InputError("dataset generation needs at least one SoC0");
  plant::validate(setup.plant);
  for (double soc0 : soc0_list) {
    if (!(soc0 >= setup.plant.battery.soc_min && soc0 <= setup.plant.battery.soc_max)) {
      throw InputError("SoC0 " + std::to_string(soc0) + " outside the battery window");
    }
  }
  std::vector<edm::Route> routes;
  for (const auto& s : segments) routes.emplace_back(std::vector<edm::RouteSegment>{s});

  const std::size_t n_seg = segments.size();
  std::vector<TripOutcome> outcomes(params.size() * n_seg);
  parallel_for(outcomes.size(), setup.jobs, [&](std::size_t k) {
    const auto& p = params[k / n_seg];
    const auto& route = routes[k % n_seg];
    auto& out = outcomes[k];
    out.targets.assign(soc0_list.size(), std::nullopt);
    out.errors.assign(soc0_list.size(), "");
    edm::Trajectory traj;
    try {
      traj = edm::simulate_trip(p, route, setup.driver);
    } catch (const std::exception& e) {
      out.errors.assign(soc0_list.size(), e.what());
      return;
    }
    for (std::size_t s = 0; s < soc0_list.size(); ++s) {
      try {
        const auto energy = plant::simulate_energy(traj, soc0_list[s], setup.plant);
        if (!std::isfinite(energy.m_f_eq_g) || energy.m_f_eq_g < 0.0) {
          out.errors[s] = "non-finite or negative equivalent fuel";
        } else {
          out.targets[s] = energy.m_f_eq_g;
        }
      } catch (const std::exception& e) {
        out.errors[s] = e.what();
      }
    }
  });

  Dataset ds;
  ds.soc0_list = soc0_list;
  ds.param_count = params.size();
  ds.segment_count = n_seg;
  ds.rows.reserve(outcomes.size() * soc0_list.size());
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const auto& p = params[k / n_seg];
    const auto& seg = segments[k % n_seg];
    for (std::size_t s = 0; s < soc0_list.size(); ++s) {
      if (outcomes[k].targets[s]) {
        ds.rows.push_back({p, seg.speed_limit_mps, seg.length_m, soc0_list[s],
                           *outcomes[k].targets[s]});
      } else {
        ds.exclusions.push_back({k / n_seg, k % n_seg, soc0_list[s], outcomes[k].errors[s]});
      }
    }
  }
  const double total = static_cast<double>(outcomes.size() * soc0_list.size());
  if (!ds.exclusions.empty() &&
      static_cast<double>(ds.exclusions.size()) >= setup.max_exclusion_fraction * total) {
    throw std::runtime_error(std::to_string(ds.exclusions.size()) + " of " +
                             std::to_string(static_cast<std::size_t>(total)) +
                             " trips aborted; first: " + ds.exclusions.front().reason);
  }
  return ds;
}

}  // namespace phevcqr::synth
