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

#ifndef PHEVCQR_EVALREPORT_HPP_
#define PHEVCQR_EVALREPORT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "phevcqr/conformal.hpp"

namespace phevcqr::eval {

using conformal::PredictionInterval;

// Fraction of closed intervals containing their target.
double coverage(std::span<const PredictionInterval> intervals, std::span<const double> y_true);
double mean_width(std::span<const PredictionInterval> intervals);
double crossing_rate(std::span<const PredictionInterval> intervals);

struct BinReport {
  std::size_t count = 0;
  std::size_t covered = 0;
  double coverage = 0.0;    // 0 for an empty bin
  double mean_width = 0.0;  // 0 for an empty bin
  double width_sum = 0.0;
};

// Interpolated 20/40/60/80 percentiles of y_true.
std::array<double, 4> quintile_edges(std::span<const double> y_true);

// Bin index in [0, 5); a value equal to an edge falls in the lower bin.
int quintile_of(double y, const std::array<double, 4>& edges);

std::array<BinReport, 5> quintile_report(std::span<const PredictionInterval> intervals,
                                         std::span<const double> y_true);

struct MethodReport {
  std::string name;
  double coverage = 0.0;
  double mean_width = 0.0;
  double crossing_rate = 0.0;
  std::size_t n_test = 0;
  std::array<BinReport, 5> quintiles;
};

MethodReport evaluate(const std::string& name, std::span<const PredictionInterval> intervals,
                      std::span<const double> y_true);

struct ReportContext {
  double alpha = 0.1;
  std::uint64_t seed = 0;
};

// File-name form of a method name: lower case, '+' spelled "plus".
std::string method_slug(const std::string& name);

nlohmann::ordered_json report_json(std::span<const MethodReport> reports, const ReportContext& ctx);

// Writes report.json, quintiles_<slug>.csv per method and comparison.csv
// (sorted by mean width) under `dir`. Returns the written paths.
std::vector<std::filesystem::path> emit_report(std::span<const MethodReport> reports,
                                               const ReportContext& ctx,
                                               const std::filesystem::path& dir);

}  // namespace phevcqr::eval

#endif  // PHEVCQR_EVALREPORT_HPP_
