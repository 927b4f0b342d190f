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

#include "phevcqr/evalreport.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "phevcqr/io.hpp"

namespace phevcqr::eval {
namespace {

void check_sizes(std::span<const PredictionInterval> intervals, std::span<const double> y_true) {
  if (intervals.empty()) throw InputError("no intervals to evaluate");
  if (intervals.size() != y_true.size()) {
    throw InputError("interval count " + std::to_string(intervals.size()) +
                     " differs from target count " + std::to_string(y_true.size()));
  }
}

bool contains(const PredictionInterval& iv, double y) { return iv.lo <= y && y <= iv.hi; }

}  // namespace

double coverage(std::span<const PredictionInterval> intervals, std::span<const double> y_true) {
  check_sizes(intervals, y_true);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < intervals.size(); ++i) hit += contains(intervals[i], y_true[i]);
  return static_cast<double>(hit) / static_cast<double>(intervals.size());
}

double mean_width(std::span<const PredictionInterval> intervals) {
  if (intervals.empty()) throw InputError("no intervals to evaluate");
  double sum = 0.0;
  for (const auto& iv : intervals) sum += iv.width();
  return sum / static_cast<double>(intervals.size());
}

double crossing_rate(std::span<const PredictionInterval> intervals) {
  if (intervals.empty()) throw InputError("no intervals to evaluate");
  const auto n = std::count_if(intervals.begin(), intervals.end(),
                               [](const PredictionInterval& iv) { return iv.crossing; });
  return static_cast<double>(n) / static_cast<double>(intervals.size());
}

std::array<double, 4> quintile_edges(std::span<const double> y_true) {
  if (y_true.size() < 5) throw InputError("quintile report needs at least 5 test rows");
  std::vector<double> sorted(y_true.begin(), y_true.end());
  std::sort(sorted.begin(), sorted.end());
  std::array<double, 4> edges{};
  for (int q = 1; q <= 4; ++q) {
    const double h = static_cast<double>(sorted.size() - 1) * (0.2 * q);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    edges[static_cast<std::size_t>(q - 1)] = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  }
  return edges;
}

int quintile_of(double y, const std::array<double, 4>& edges) {
  int bin = 0;
  for (double e : edges) bin += y > e ? 1 : 0;
  return bin;
}

std::array<BinReport, 5> quintile_report(std::span<const PredictionInterval> intervals,
                                         std::span<const double> y_true) {
  check_sizes(intervals, y_true);
  const auto edges = quintile_edges(y_true);
  std::array<BinReport, 5> bins{};
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    auto& b = bins[static_cast<std::size_t>(quintile_of(y_true[i], edges))];
    ++b.count;
    b.covered += contains(intervals[i], y_true[i]);
    b.width_sum += intervals[i].width();
  }
  for (auto& b : bins) {
    if (b.count == 0) continue;
    b.coverage = static_cast<double>(b.covered) / static_cast<double>(b.count);
    b.mean_width = b.width_sum / static_cast<double>(b.count);
  }
  return bins;
}

MethodReport evaluate(const std::string& name, std::span<const PredictionInterval> intervals,
                      std::span<const double> y_true) {
  MethodReport r;
  r.name = name;
  r.coverage = coverage(intervals, y_true);
  r.mean_width = mean_width(intervals);
  r.crossing_rate = crossing_rate(intervals);
  r.n_test = intervals.size();
  r.quintiles = quintile_report(intervals, y_true);
  return r;
}

std::string method_slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (c == '+') {
      out += "plus";
    } else if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out.empty() ? "method" : out;
}

nlohmann::ordered_json report_json(std::span<const MethodReport> reports, const ReportContext& ctx) {
  if (reports.empty()) throw InputError("a report needs at least one method");
  nlohmann::ordered_json doc;
  doc["schema"] = "phevcqr.report";
  doc["version"] = 1;
  auto methods = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json m;
    m["name"] = r.name;
    m["coverage"] = r.coverage;
    m["mean_width_g"] = r.mean_width;
    m["crossing_rate"] = r.crossing_rate;
    auto q = nlohmann::ordered_json::array();
    for (const auto& b : r.quintiles) {
      q.push_back({{"coverage", b.coverage}, {"mean_width_g", b.mean_width}, {"count", b.count}});
    }
    m["quintiles"] = std::move(q);
    methods.push_back(std::move(m));
  }
  doc["methods"] = std::move(methods);
  doc["n_test"] = reports.front().n_test;
  doc["alpha"] = ctx.alpha;
  doc["seed"] = ctx.seed;
  return doc;
}

std::vector<std::filesystem::path> emit_report(std::span<const MethodReport> reports,
                                               const ReportContext& ctx,
                                               const std::filesystem::path& dir) {
  const auto doc = report_json(reports, ctx);
  io::ensure_directory(dir);
  std::vector<std::filesystem::path> written;

  const auto json_path = dir / "report.json";
  io::write_text_file(json_path, doc.dump(2) + "\n");
  written.push_back(json_path);

  for (const auto& r : reports) {
    std::ostringstream csv;
    csv << "bin,count,coverage,mean_width_g\n";
    for (std::size_t b = 0; b < r.quintiles.size(); ++b) {
      const auto& q = r.quintiles[b];
      csv << b + 1 << ',' << q.count << ',' << io::format_number(q.coverage) << ','
          << io::format_number(q.mean_width) << '\n';
    }
    const auto path = dir / ("quintiles_" + method_slug(r.name) + ".csv");
    io::write_text_file(path, csv.str());
    written.push_back(path);
  }

  std::vector<const MethodReport*> sorted;
  for (const auto& r : reports) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const MethodReport* a, const MethodReport* b) {
    return a->mean_width < b->mean_width;
  });
  std::ostringstream table;
  table << "method,coverage,mean_width_g,crossing_rate,n_test\n";
  for (const auto* r : sorted) {
    table << r->name << ',' << io::format_number(r->coverage) << ',' << io::format_number(r->mean_width)
          << ',' << io::format_number(r->crossing_rate) << ',' << r->n_test << '\n';
  }
  const auto table_path = dir / "comparison.csv";
  io::write_text_file(table_path, table.str());
  written.push_back(table_path);
  return written;
}

}  // namespace phevcqr::eval
