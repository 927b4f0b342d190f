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

#include <filesystem>
#include <random>

#include "gtest/gtest.h"
#include "phevcqr/io.hpp"

namespace phevcqr::eval {
namespace {

namespace fs = std::filesystem;

std::vector<PredictionInterval> ivs(std::initializer_list<std::pair<double, double>> bounds) {
  std::vector<PredictionInterval> out;
  for (auto [lo, hi] : bounds) out.push_back({lo, hi, false});
  return out;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("phevcqr_eval_" + name);
  fs::remove_all(dir);
  return dir;
}

MethodReport random_report(const std::string& name, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<PredictionInterval> intervals;
  std::vector<double> y;
  for (int i = 0; i < 200; ++i) {
    const double c = z(rng);
    const double w = scale * (1.0 + std::abs(z(rng)));
    intervals.push_back({c - w, c + w, false});
    y.push_back(c + z(rng));
  }
  return evaluate(name, intervals, y);
}

TEST(Coverage, WorkedExamples) {
  const auto iv = ivs({{0, 1}, {0, 1}, {0, 1}, {0, 1}});
  EXPECT_EQ(coverage(iv, std::vector<double>{0.5, 0.0, 1.0, 0.2}), 1.0);
  EXPECT_EQ(coverage(iv, std::vector<double>{-1, 2, 1.5, -0.1}), 0.0);
  EXPECT_EQ(coverage(iv, std::vector<double>{0.5, 0.7, 1.0, 3.0}), 0.75);
}

TEST(Coverage, LengthMismatchAndEmptyAreErrors) {
  const auto iv = ivs({{0, 1}, {0, 1}});
  EXPECT_THROW(coverage(iv, std::vector<double>{0.5}), InputError);
  EXPECT_THROW(coverage({}, {}), InputError);
}

TEST(MeanWidth, WorkedExamples) {
  EXPECT_EQ(mean_width(ivs({{0, 10}, {5, 15}, {-10, 0}})), 10.0);
  EXPECT_EQ(mean_width(ivs({{3, 3}, {-10, 10}})), 10.0);
  EXPECT_EQ(mean_width(ivs({{1, 1}, {2, 2}})), 0.0);
  EXPECT_THROW(mean_width({}), InputError);
}

TEST(CrossingRate, CountsFlaggedIntervals) {
  std::vector<PredictionInterval> iv{{0, 1, true}, {0, 1, false}, {0, 1, false}, {0, 1, true}};
  EXPECT_EQ(crossing_rate(iv), 0.5);
}

TEST(Quintiles, TiesGoToTheLowerBin) {
  const std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto edges = quintile_edges(y);
  EXPECT_DOUBLE_EQ(edges[0], 2.8);
  EXPECT_DOUBLE_EQ(edges[3], 8.2);
  const std::array<double, 4> flat{2, 4, 6, 8};
  EXPECT_EQ(quintile_of(2.0, flat), 0);
  EXPECT_EQ(quintile_of(2.0000001, flat), 1);
  EXPECT_EQ(quintile_of(8.0, flat), 3);
  EXPECT_EQ(quintile_of(100.0, flat), 4);
  EXPECT_THROW(quintile_edges(std::vector<double>{1, 2, 3, 4}), InputError);
}

TEST(Quintiles, SingletonBins) {
  const std::vector<double> y{5, 1, 4, 2, 3};
  const auto iv = ivs({{4, 6}, {5, 6}, {3, 5}, {0, 1}, {2.5, 3.5}});
  const auto bins = quintile_report(iv, y);
  const std::array<double, 5> want{0, 0, 1, 1, 1};  // bins hold y = 1, 2, 3, 4, 5
  for (int b = 0; b < 5; ++b) {
    EXPECT_EQ(bins[b].count, 1u);
    EXPECT_EQ(bins[b].coverage, want[b]) << "bin " << b;
  }
}

TEST(Quintiles, ConstantWidthsGiveIdenticalBins) {
  std::vector<PredictionInterval> iv;
  std::vector<double> y;
  for (int i = 0; i < 53; ++i) {
    y.push_back(std::sin(i * 1.7));
    iv.push_back({y.back() - 0.75, y.back() + 1.25, false});
  }
  const auto bins = quintile_report(iv, y);
  for (const auto& b : bins) EXPECT_EQ(b.mean_width, 2.0);
}

TEST(Quintiles, WeightedBinsReproduceOverallFigures) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = random_report("m", 1.0, seed);
    std::size_t covered = 0, count = 0;
    double width = 0.0;
    for (const auto& b : r.quintiles) {
      covered += b.covered;
      count += b.count;
      width += static_cast<double>(b.count) * b.mean_width;
    }
    EXPECT_EQ(count, r.n_test);
    EXPECT_EQ(static_cast<double>(covered) / static_cast<double>(count), r.coverage);
    EXPECT_NEAR(width / static_cast<double>(count), r.mean_width, 1e-12 * r.mean_width);
  }
}

TEST(Quintiles, DyadicWidthsAggregateExactly) {
  std::vector<PredictionInterval> iv;
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    y.push_back(i % 7 + 0.25 * i);
    iv.push_back({0.0, 0.5 * (i % 5) + 0.125, false});
  }
  const auto r = evaluate("m", iv, y);
  double weighted = 0.0;
  for (const auto& b : r.quintiles) weighted += static_cast<double>(b.count) * b.mean_width;
  EXPECT_EQ(weighted / 40.0, r.mean_width);
}

TEST(Report, SlugsAndSchema) {
  EXPECT_EQ(method_slug("CV+"), "cvplus");
  EXPECT_EQ(method_slug("JK+aB"), "jkplusab");
  EXPECT_EQ(method_slug("CQR"), "cqr");
  const std::vector<MethodReport> reports{random_report("CQR", 1.0, 3)};
  const auto doc = report_json(reports, {0.1, 77});
  EXPECT_EQ(doc.at("schema"), "phevcqr.report");
  EXPECT_EQ(doc.at("version"), 1);
  EXPECT_EQ(doc.at("n_test"), 200);
  EXPECT_EQ(doc.at("seed"), 77);
  const auto& m = doc.at("methods").at(0);
  for (const char* key : {"name", "coverage", "mean_width_g", "crossing_rate", "quintiles"}) {
    EXPECT_TRUE(m.contains(key)) << key;
  }
  EXPECT_EQ(m.at("quintiles").size(), 5u);
  EXPECT_THROW(report_json({}, {}), InputError);
}

TEST(EmitReport, OneMethodGivesOneJsonAndOneCsv) {
  const auto dir = scratch("one");
  const std::vector<MethodReport> reports{random_report("CQR", 1.0, 4)};
  const auto files = emit_report(reports, {0.1, 1}, dir);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "quintiles_cqr.csv"));
  std::size_t json = 0, quintile_csv = 0;
  for (const auto& f : files) {
    json += f.extension() == ".json";
    quintile_csv += f.filename().string().starts_with("quintiles_");
  }
  EXPECT_EQ(json, 1u);
  EXPECT_EQ(quintile_csv, 1u);
  const auto table = io::read_csv(dir / "quintiles_cqr.csv");
  EXPECT_EQ(table.rows.size(), 5u);
  fs::remove_all(dir);
}

TEST(EmitReport, ComparisonSortedByWidthAndIdempotent) {
  const auto dir = scratch("four");
  const std::vector<MethodReport> reports{random_report("CQR", 2.0, 5), random_report("CV", 0.5, 6),
                                          random_report("CV+", 3.0, 7),
                                          random_report("JK+aB", 1.0, 8)};
  emit_report(reports, {0.1, 9}, dir);
  const auto table = io::read_csv(dir / "comparison.csv");
  ASSERT_EQ(table.rows.size(), 4u);
  std::vector<std::string> order;
  for (std::size_t r = 0; r < table.rows.size(); ++r) order.push_back(table.rows[r][0]);
  EXPECT_EQ(order, (std::vector<std::string>{"CV", "JK+aB", "CQR", "CV+"}));
  for (const char* f : {"quintiles_cqr.csv", "quintiles_cv.csv", "quintiles_cvplus.csv",
                        "quintiles_jkplusab.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto before = io::read_text_file(dir / "report.json");
  const auto before_table = io::read_text_file(dir / "comparison.csv");
  emit_report(reports, {0.1, 9}, dir);
  EXPECT_EQ(io::read_text_file(dir / "report.json"), before);
  EXPECT_EQ(io::read_text_file(dir / "comparison.csv"), before_table);
  fs::remove_all(dir);
}

TEST(EmitReport, UnwritableDestinationNamesThePath) {
  const auto base = scratch("blocked");
  fs::create_directories(base);
  const auto blocker = base / "not_a_dir";
  io::write_text_file(blocker, "x");
  const std::vector<MethodReport> reports{random_report("CQR", 1.0, 10)};
  try {
    emit_report(reports, {0.1, 1}, blocker / "out");
    FAIL() << "expected an I/O error";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("not_a_dir"), std::string::npos) << e.what();
  }
  fs::remove_all(base);
}

}  // namespace
}  // namespace phevcqr::eval
