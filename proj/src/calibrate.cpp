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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "phevcqr/common.hpp"
#include "phevcqr/parallel.hpp"

namespace phevcqr::calibrate {

void validate(const ReferenceTrace& trace) {
  if (trace.v.empty()) throw InputError("reference trace is empty");
  if (!(trace.dt > 0.0)) throw InputError("reference trace spacing must be positive");
  for (double v : trace.v) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InputError("reference trace has a negative or non-finite speed");
    }
  }
}

ReferenceTrace make_trace(const std::vector<double>& t, const std::vector<double>& v) {
  if (t.size() != v.size()) throw InputError("trace columns differ in length");
  if (t.empty()) throw InputError("reference trace is empty");
  ReferenceTrace out;
  out.t0 = t.front();
  out.dt = t.size() > 1 ? t[1] - t[0] : 0.1;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - out.dt) > 1e-6 * std::max(1.0, out.dt)) {
      throw InputError("reference trace is not uniformly sampled at row " +
                       std::to_string(i + 1));
    }
  }
  out.v = v;
  validate(out);
  return out;
}

ReferenceTrace to_trace(const edm::Trajectory& traj) {
  ReferenceTrace out;
  out.dt = traj.dt;
  out.t0 = traj.samples.empty() ? 0.0 : traj.samples.front().t;
  out.v.reserve(traj.samples.size());
  for (const auto& s : traj.samples) out.v.push_back(s.v);
  return out;
}

namespace {

double interpolate(const ReferenceTrace& tr, double t) {
  const double pos = (t - tr.t0) / tr.dt;
  if (pos <= 0.0) return tr.v.front();
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= tr.v.size()) return tr.v.back();
  const double w = pos - static_cast<double>(i);
  return tr.v[i] + w * (tr.v[i + 1] - tr.v[i]);
}

}  // namespace

double speed_rmse(const ReferenceTrace& a, const ReferenceTrace& b) {
  if (a.v.empty() || b.v.empty()) throw std::invalid_argument("empty trace");
  const double start = std::max(a.t0, b.t0);
  const double end = std::min(a.end_time(), b.end_time());
  if (!(end > start)) throw std::invalid_argument("traces do not overlap in time");
  const double dt = std::min(a.dt, b.dt);
  const auto n = static_cast<std::size_t>(std::floor((end - start) / dt + 1e-9)) + 1;
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = start + static_cast<double>(k) * dt;
    const double d = interpolate(a, t) - interpolate(b, t);
    sum += d * d;
  }
  return mps_to_mph(std::sqrt(sum / static_cast<double>(n)));
}

double speed_rmse(const edm::Trajectory& simulated, const ReferenceTrace& reference) {
  return speed_rmse(to_trace(simulated), reference);
}

std::array<double, 5> to_genes(const edm::DriverParams& p) {
  return {p.a, p.b, p.delta, p.c1, p.theta};
}

edm::DriverParams from_genes(const std::array<double, 5>& g) {
  return {g[0], g[1], g[2], g[3], g[4]};
}

void validate(const GaConfig& c) {
  if (c.population < 4) throw InputError("GA population must be >= 4");
  if (c.generations < 0) throw InputError("GA generation count must be >= 0");
  for (const auto& b : c.bounds) {
    if (!(b.hi > b.lo)) throw InputError("GA bounds must be non-degenerate");
  }
  auto rate = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!rate(c.crossover_rate) || !rate(c.mutation_rate) || !rate(c.mutation_scale)) {
    throw InputError("GA rates must lie in [0, 1]");
  }
  if (c.elite < 0 || c.elite >= c.population) throw InputError("GA elite count out of range");
  if (c.tournament < 1) throw InputError("GA tournament size must be >= 1");
  if (!c.initial_population.empty() &&
      c.initial_population.size() != static_cast<std::size_t>(c.population)) {
    throw InputError("GA initial population size does not match population");
  }
}

namespace {

using Genes = std::array<double, 5>;

struct Individual {
  Genes genes{};
  double rmse = std::numeric_limits<double>::infinity();
};

}  // namespace

CalibrationResult fit_edm(const ReferenceTrace& reference, const edm::Route& route,
                          const GaConfig& config, const edm::DriverConstants& consts,
                          int jobs) {
  validate(reference);
  validate(config);
  std::mt19937_64 rng(config.seed);
  const auto& bounds = config.bounds;
  const auto pop_size = static_cast<std::size_t>(config.population);

  std::vector<Individual> pop(pop_size);
  for (std::size_t i = 0; i < pop_size; ++i) {
    if (!config.initial_population.empty()) {
      pop[i].genes = to_genes(config.initial_population[i]);
    } else {
      for (std::size_t g = 0; g < 5; ++g) {
        pop[i].genes[g] =
            std::uniform_real_distribution<double>(bounds[g].lo, bounds[g].hi)(rng);
      }
    }
  }

  bool any_success = false;
  auto evaluate = [&](std::vector<Individual>& members, std::size_t from) {
    parallel_for(members.size() - from, jobs, [&](std::size_t k) {
      auto& ind = members[from + k];
      try {
        auto traj = edm::simulate_trip(from_genes(ind.genes), route, consts);
        ind.rmse = speed_rmse(traj, reference);
      } catch (const std::exception&) {
        ind.rmse = std::numeric_limits<double>::infinity();
      }
    });
    for (const auto& ind : members) any_success |= std::isfinite(ind.rmse);
  };
  // Stable order: lower RMSE first, ties keep population order.
  auto rank = [](std::vector<Individual>& members) {
    std::stable_sort(members.begin(), members.end(),
                     [](const Individual& x, const Individual& y) { return x.rmse < y.rmse; });
  };

  evaluate(pop, 0);
  rank(pop);
  CalibrationResult result;
  result.history.push_back(pop.front().rmse);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, pop_size - 1);
  auto tournament = [&]() -> const Individual& {
    std::size_t best = pick(rng);
    for (int k = 1; k < config.tournament; ++k) best = std::min(best, pick(rng));
    return pop[best];  // pop is ranked, so the lowest index wins
  };

  for (int gen = 0; gen < config.generations; ++gen) {
    std::vector<Individual> next(pop.begin(), pop.begin() + config.elite);
    while (next.size() < pop_size) {
      const Individual& p1 = tournament();
      const Individual& p2 = tournament();
      Individual child;
      child.genes = p1.genes;
      if (unit(rng) < config.crossover_rate) {
        for (std::size_t g = 0; g < 5; ++g) {
          if (unit(rng) < 0.5) child.genes[g] = p2.genes[g];
        }
      }
      for (std::size_t g = 0; g < 5; ++g) {
        if (unit(rng) < config.mutation_rate) {
          const double width = bounds[g].hi - bounds[g].lo;
          std::normal_distribution<double> noise(0.0, config.mutation_scale * width);
          child.genes[g] = std::clamp(child.genes[g] + noise(rng), bounds[g].lo, bounds[g].hi);
        }
      }
      next.push_back(child);
    }
    evaluate(next, static_cast<std::size_t>(config.elite));
    rank(next);
    pop = std::move(next);
    result.history.push_back(pop.front().rmse);
  }

  if (!any_success) {
    throw SimulationError("calibration failed: every candidate simulation aborted");
  }
  result.params = from_genes(pop.front().genes);
  result.rmse_mph = pop.front().rmse;
  return result;
}

}  // namespace phevcqr::calibrate
