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

#include "phevcqr/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "gtest/gtest.h"

namespace phevcqr::conformal {
namespace {

FeatureMatrix column(std::initializer_list<double> xs) {
  FeatureMatrix m;
  for (double v : xs) {
    const double row[] = {v};
    m.push_row(row);
  }
  return m;
}

// Least-squares line on the single feature, the mean when x is constant.
PointModel fit_line(const FeatureMatrix& x, std::span<const double> y) {
  const double n = static_cast<double>(y.size());
  double xbar = 0, ybar = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    xbar += x(i, 0);
    ybar += y[i];
  }
  xbar /= n;
  ybar /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sxy += (x(i, 0) - xbar) * (y[i] - ybar);
    sxx += (x(i, 0) - xbar) * (x(i, 0) - xbar);
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  return [=](std::span<const double> r) { return ybar + slope * (r[0] - xbar); };
}

PointFitter constant_fitter(double c) {
  return [c](const FeatureMatrix&, std::span<const double>) -> PointModel {
    return [c](std::span<const double>) { return c; };
  };
}

// Brute-force order statistic: full sort then index.
double sorted_pick(std::vector<double> v, std::size_t k) {
  std::sort(v.begin(), v.end());
  return v.at(k - 1);
}

PredictionInterval brute_plus(const std::vector<double>& centres, const std::vector<double>& r,
                              std::size_t k_lo, std::size_t k_hi) {
  std::vector<double> lo, hi;
  for (std::size_t i = 0; i < centres.size(); ++i) {
    lo.push_back(centres[i] - r[i]);
    hi.push_back(centres[i] + r[i]);
  }
  return {sorted_pick(lo, k_lo), sorted_pick(hi, k_hi), false};
}

TEST(Split, Sizes) {
  auto s = split(24000, {0.8, 0.1, 0.1}, 7);
  EXPECT_EQ(s.train.size(), 19200u);
  EXPECT_EQ(s.calib.size(), 2400u);
  EXPECT_EQ(s.test.size(), 2400u);
  s = split(10, {0.8, 0.1, 0.1}, 7);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.calib.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
}

TEST(Split, DisjointCoverAndDeterministic) {
  const auto a = split(1000, {0.6, 0.2, 0.2}, 11);
  const auto b = split(1000, {0.6, 0.2, 0.2}, 11);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.calib, b.calib);
  EXPECT_EQ(a.test, b.test);
  std::set<std::size_t> all(a.train.begin(), a.train.end());
  all.insert(a.calib.begin(), a.calib.end());
  all.insert(a.test.begin(), a.test.end());
  EXPECT_EQ(all.size(), 1000u);
  EXPECT_NE(split(1000, {0.6, 0.2, 0.2}, 12).train, a.train);
}

TEST(Split, Errors) {
  EXPECT_THROW(split(5, {0.8, 0.1, 0.1}, 1), InputError);
  EXPECT_THROW(split(100, {0.8, 0.3, 0.1}, 1), InputError);
  EXPECT_THROW(split(100, {1.0, 0.0, 0.0}, 1), InputError);
}

TEST(ConformityScore, WorkedExamples) {
  EXPECT_EQ(conformity_score(2, 5, 6), 1);
  EXPECT_EQ(conformity_score(2, 5, 3), -1);
  EXPECT_EQ(conformity_score(2, 5, 2), 0);
}

TEST(QHat, WorkedExamples) {
  std::vector<double> s(99);
  std::iota(s.begin(), s.end(), 1.0);
  std::shuffle(s.begin(), s.end(), std::mt19937_64(3));
  EXPECT_EQ(q_hat(s, 0.1), 90.0);
  const std::vector<double> same(17, 4.5);
  EXPECT_EQ(q_hat(same, 0.1), 4.5);
  const std::vector<double> five{1, 2, 3, 4, 5};
  EXPECT_THROW(q_hat(five, 0.01), InputError);
  EXPECT_THROW(q_hat(std::vector<double>{}, 0.1), InputError);
}

// Levels a/1000 make k = ceil((1000 - a)(n + 1) / 1000) exact in integers.
TEST(QHat, MatchesSortOracleOnRandomCases) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(1, 300);
  std::uniform_int_distribution<int> level(1, 999);
  std::normal_distribution<double> value(0.0, 10.0);
  int checked = 0;
  for (int c = 0; c < 1000; ++c) {
    const std::size_t n = static_cast<std::size_t>(size(rng));
    const int a = level(rng);
    std::vector<double> s(n);
    for (auto& v : s) v = (c % 3 == 0) ? std::round(value(rng)) : value(rng);
    const std::size_t num = static_cast<std::size_t>(1000 - a) * (n + 1);
    const std::size_t k = (num + 999) / 1000;
    const double alpha = a / 1000.0;
    if (k > n) {
      EXPECT_THROW(q_hat(s, alpha), InputError);
    } else {
      EXPECT_EQ(q_hat(s, alpha), sorted_pick(s, k)) << "case " << c;
      ++checked;
    }
  }
  EXPECT_GT(checked, 500);
}

TEST(QHat, MonotoneInAlpha) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> value;
  std::vector<double> s(500);
  for (auto& v : s) v = value(rng);
  double prev = q_hat(s, 0.01);
  for (double alpha = 0.02; alpha < 0.99; alpha += 0.01) {
    const double q = q_hat(s, alpha);
    EXPECT_LE(q, prev);
    prev = q;
  }
}

TEST(CqrInterval, WorkedExamples) {
  auto iv = cqr_interval(100, 140, 5);
  EXPECT_EQ(iv.lo, 95);
  EXPECT_EQ(iv.hi, 145);
  EXPECT_FALSE(iv.crossing);
  iv = cqr_interval(100, 140, 0);
  EXPECT_EQ(iv.lo, 100);
  EXPECT_EQ(iv.hi, 140);
  iv = cqr_interval(150, 140, 0);
  EXPECT_EQ(iv.lo, 140);
  EXPECT_EQ(iv.hi, 150);
  EXPECT_TRUE(iv.crossing);
}

TEST(CqrInterval, NonPositiveMarginNeverWidens) {
  const std::vector<double> scores{-3, -1, -2, -0.5, -4, -1.5, -2.5, -0.1, -6, -7, -8, -9};
  const double q = q_hat(scores, 0.2);
  EXPECT_LE(q, 0.0);
  const auto iv = cqr_interval(10, 20, q);
  EXPECT_LE(iv.width(), 10.0);
}

gbq::Hyperparams quick_hp() {
  gbq::Hyperparams hp;
  hp.n_trees = 60;
  hp.learning_rate = 0.1;
  hp.max_depth = 4;
  hp.max_leaves = 8;
  hp.min_samples_leaf = 20;
  return hp;
}

void hetero(std::size_t n, std::uint64_t seed, FeatureMatrix& x, std::vector<double>& y) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u;
  std::normal_distribution<double> z;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = u(rng);
    const double row[] = {xi};
    x.push_row(row);
    y.push_back(std::sin(2 * std::numbers::pi * xi) + (0.2 + 0.2 * xi) * z(rng));
  }
}

TEST(Cqr, ConstantTargetCollapses) {
  FeatureMatrix xt, xc;
  std::vector<double> yt, yc;
  hetero(200, 1, xt, yt);
  hetero(100, 2, xc, yc);
  std::fill(yt.begin(), yt.end(), 7.0);
  std::fill(yc.begin(), yc.end(), 7.0);
  const auto model = cqr_fit(xt, yt, xc, yc, 0.1, quick_hp());
  EXPECT_EQ(model.q_alpha, 0.0);
  const auto iv = cqr_predict(model, xc.row(0));
  EXPECT_EQ(iv.lo, 7.0);
  EXPECT_EQ(iv.hi, 7.0);
}

TEST(Cqr, WidthIdentityAndCoverage) {
  FeatureMatrix xt, xc, xs;
  std::vector<double> yt, yc, ys;
  hetero(3000, 3, xt, yt);
  hetero(1000, 4, xc, yc);
  hetero(2000, 5, xs, ys);
  const auto model = cqr_fit(xt, yt, xc, yc, 0.1, quick_hp());
  const auto ivs = cqr_predict(model, xs);
  int covered = 0;
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    if (!ivs[i].crossing) {
      const double raw = model.upper.predict(xs.row(i)) - model.lower.predict(xs.row(i));
      EXPECT_EQ(ivs[i].width(), (model.upper.predict(xs.row(i)) + model.q_alpha) -
                                    (model.lower.predict(xs.row(i)) - model.q_alpha));
      EXPECT_NEAR(ivs[i].width(), raw + 2 * model.q_alpha, 1e-12);
    }
    covered += (ivs[i].lo <= ys[i] && ys[i] <= ivs[i].hi) ? 1 : 0;
  }
  const double cov = static_cast<double>(covered) / static_cast<double>(ivs.size());
  EXPECT_GT(cov, 0.87);
  EXPECT_LT(cov, 0.94);
}

TEST(Cqr, CalibrationTooSmall) {
  FeatureMatrix xt, xc;
  std::vector<double> yt, yc;
  hetero(200, 1, xt, yt);
  hetero(5, 2, xc, yc);
  EXPECT_THROW(cqr_fit(xt, yt, xc, yc, 0.01, quick_hp()), InputError);
}

TEST(KFold, BalancedAndDeterministic) {
  const auto f = kfold_assignment(103, 5, 9);
  EXPECT_EQ(f, kfold_assignment(103, 5, 9));
  std::vector<int> count(5, 0);
  for (int v : f) ++count[static_cast<std::size_t>(v)];
  for (int c : count) EXPECT_TRUE(c == 20 || c == 21);
  EXPECT_THROW(kfold_assignment(10, 1, 9), InputError);
  EXPECT_THROW(kfold_assignment(3, 5, 9), InputError);
}

TEST(Cv, ResidualRankAndConstantWidth) {
  FeatureMatrix x;
  std::vector<double> y;
  for (int i = 1; i <= 99; ++i) {
    const double row[] = {static_cast<double>(i)};
    x.push_row(row);
    y.push_back(i);
  }
  const auto test = column({0.5, 3.0, 80.0});
  const auto ivs = cv_fit_predict(x, y, test, 0.1, 5, constant_fitter(0.0), 1);
  for (const auto& iv : ivs) {
    EXPECT_EQ(iv.lo, -90.0);
    EXPECT_EQ(iv.hi, 90.0);
  }
  // Identical fold models: CV+ coincides with CV.
  const auto plus = cvplus_fit_predict(x, y, test, 0.1, 5, constant_fitter(0.0), 1);
  for (std::size_t t = 0; t < plus.size(); ++t) {
    EXPECT_EQ(plus[t].lo, ivs[t].lo);
    EXPECT_EQ(plus[t].hi, ivs[t].hi);
  }
}

TEST(Cv, PerfectModelGivesZeroWidth) {
  const auto x = column({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19});
  std::vector<double> y;
  for (std::size_t i = 0; i < x.rows(); ++i) y.push_back(2.0 * x(i, 0) + 1.0);
  const auto test = column({2.5, 7.25});
  const auto ivs = cv_fit_predict(x, y, test, 0.1, 4, fit_line, 3);
  EXPECT_NEAR(ivs[0].lo, 6.0, 1e-9);
  EXPECT_NEAR(ivs[0].hi, 6.0, 1e-9);
  EXPECT_NEAR(ivs[1].width(), 0.0, 1e-9);
  const auto flat = std::vector<double>(x.rows(), 3.0);
  for (const auto& iv : cv_fit_predict(x, flat, test, 0.1, 4, fit_line, 3)) {
    EXPECT_NEAR(iv.lo, 3.0, 1e-12);
    EXPECT_NEAR(iv.hi, 3.0, 1e-12);
  }
}

// Three rows, three folds, least-squares lines: fold models are 3 - x, x/2
// and 2x with residuals 3, 1.5 and 3.
TEST(CvPlus, ThreeRowHandOracle) {
  const auto x = column({0, 1, 2});
  const std::vector<double> y{0, 2, 1};
  const std::vector<int> fold{0, 1, 2};
  const auto cf = cross_fit(x, y, fold, fit_line);
  EXPECT_DOUBLE_EQ(cf.residuals[0], 3.0);
  EXPECT_DOUBLE_EQ(cf.residuals[1], 1.5);
  EXPECT_DOUBLE_EQ(cf.residuals[2], 3.0);
  const auto test = column({1.5, -1.0});
  auto ivs = cvplus_intervals(cf, test, 0.25);
  EXPECT_DOUBLE_EQ(ivs[0].lo, -1.5);
  EXPECT_DOUBLE_EQ(ivs[0].hi, 6.0);
  ivs = cvplus_intervals(cf, test, 0.5);
  EXPECT_DOUBLE_EQ(ivs[0].lo, -0.75);
  EXPECT_DOUBLE_EQ(ivs[0].hi, 4.5);
  // Brute-force enumeration at every test point and feasible rank pair.
  for (double alpha : {0.25, 0.5}) {
    const std::size_t k_lo = static_cast<std::size_t>(std::floor(alpha * 4));
    const std::size_t k_hi = static_cast<std::size_t>(std::ceil((1 - alpha) * 4));
    ivs = cvplus_intervals(cf, test, alpha);
    for (std::size_t t = 0; t < test.rows(); ++t) {
      std::vector<double> centres;
      for (int f : fold) centres.push_back(cf.fold_models[static_cast<std::size_t>(f)](test.row(t)));
      const auto want = brute_plus(centres, cf.residuals, k_lo, k_hi);
      EXPECT_EQ(ivs[t].lo, want.lo);
      EXPECT_EQ(ivs[t].hi, want.hi);
    }
  }
  EXPECT_THROW(cvplus_intervals(cf, test, 0.1), InputError);
}

TEST(CvPlus, ZeroResidualsSpanFoldPredictions) {
  const auto x = column({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  std::vector<double> y;
  for (std::size_t i = 0; i < x.rows(); ++i) y.push_back(x(i, 0));
  const auto cf = cross_fit(x, y, kfold_assignment(10, 2, 4), fit_line);
  for (double r : cf.residuals) EXPECT_NEAR(r, 0.0, 1e-12);
  const auto ivs = cvplus_intervals(cf, column({4.5}), 0.4);
  EXPECT_NEAR(ivs[0].lo, 4.5, 1e-12);
  EXPECT_NEAR(ivs[0].hi, 4.5, 1e-12);
}

// Resamples {0,0,0} and {1,2,2}: model 0 is the constant 0, model 1 the line
// 3 - x. Out-of-bag residuals are 3, 2 and 1.
TEST(Jkab, ThreeRowHandOracle) {
  const auto x = column({0, 1, 2});
  const std::vector<double> y{0, 2, 1};
  const std::vector<std::vector<std::size_t>> resamples{{0, 0, 0}, {1, 2, 2}};
  const auto test = column({1.5});
  auto res = jkab_fit_predict(x, y, test, 0.25, resamples, fit_line);
  EXPECT_EQ(res.excluded, 0u);
  EXPECT_EQ(res.oob_count, (std::vector<int>{1, 1, 1}));
  EXPECT_DOUBLE_EQ(res.intervals[0].lo, -2.0);
  EXPECT_DOUBLE_EQ(res.intervals[0].hi, 4.5);
  res = jkab_fit_predict(x, y, test, 0.5, resamples, fit_line);
  EXPECT_DOUBLE_EQ(res.intervals[0].lo, -1.5);
  EXPECT_DOUBLE_EQ(res.intervals[0].hi, 2.0);
  const auto brute = brute_plus({1.5, 0.0, 0.0}, {3.0, 2.0, 1.0}, 2, 2);
  EXPECT_EQ(res.intervals[0].lo, brute.lo);
  EXPECT_EQ(res.intervals[0].hi, brute.hi);
}

TEST(Jkab, RowsWithoutOutOfBagModelAreExcluded) {
  const auto x = column({0, 1, 2});
  const std::vector<double> y{0, 2, 1};
  // Row 1 is drawn by both resamples; the two kept rows use ranks 1 and 2.
  const std::vector<std::vector<std::size_t>> resamples{{0, 0, 1}, {1, 2, 2}};
  const auto res = jkab_fit_predict(x, y, column({1.0}), 0.5, resamples, fit_line);
  EXPECT_EQ(res.excluded, 1u);
  EXPECT_EQ(res.oob_count[1], 0);
  // Model 0 on rows {0,0,1} is y = 2x; model 1 on {1,2,2} is 3 - x.
  // Row 0 (oob in 1): centre 2, radius 3. Row 2 (oob in 0): centre 2, radius 3.
  EXPECT_DOUBLE_EQ(res.intervals[0].lo, -1.0);
  EXPECT_DOUBLE_EQ(res.intervals[0].hi, 5.0);
  const std::vector<std::vector<std::size_t>> full{{0, 1, 2}, {2, 1, 0}};
  EXPECT_THROW(jkab_fit_predict(x, y, column({1.0}), 0.5, full, fit_line), InputError);
}

TEST(Jkab, ConstantModelsGiveConstantWidth) {
  const auto x = column({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19});
  std::vector<double> y;
  for (std::size_t i = 0; i < x.rows(); ++i) y.push_back(std::sin(x(i, 0)));
  const auto res = jkab_fit_predict(x, y, column({0.5, 3.0, 12.0}), 0.2,
                                    bootstrap_resamples(20, 10, 1), constant_fitter(0.25));
  for (const auto& iv : res.intervals) {
    EXPECT_DOUBLE_EQ(iv.lo, res.intervals[0].lo);
    EXPECT_DOUBLE_EQ(iv.hi, res.intervals[0].hi);
    EXPECT_LE(iv.lo, 0.25);
    EXPECT_GE(iv.hi, 0.25);
  }
}

TEST(Jkab, OutOfBagCountMatchesBinomialExpectation) {
  const std::size_t n = 50;
  const int b = 200;
  double total = 0.0;
  int samples = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto rs = bootstrap_resamples(n, b, seed);
    std::vector<int> oob(n, b);
    for (const auto& r : rs) {
      std::vector<char> seen(n, 0);
      for (auto i : r) seen[i] = 1;
      for (std::size_t i = 0; i < n; ++i) oob[i] -= seen[i];
    }
    for (int c : oob) {
      total += c;
      ++samples;
    }
  }
  const double expected = b * std::pow(1.0 - 1.0 / static_cast<double>(n), static_cast<double>(n));
  EXPECT_NEAR(total / samples, expected, 0.01 * expected);
}

TEST(Baselines, GbqFitterCoversHeteroscedasticData) {
  FeatureMatrix x, xs;
  std::vector<double> y, ys;
  hetero(1500, 8, x, y);
  hetero(1000, 9, xs, ys);
  const auto fitter = gbq_point_fitter(quick_hp());
  const auto cv = cv_fit_predict(x, y, xs, 0.1, 5, fitter, 3);
  const auto jk = jkab_fit_predict(x, y, xs, 0.1, bootstrap_resamples(x.rows(), 10, 4), fitter);
  auto cov = [&](const std::vector<PredictionInterval>& ivs) {
    int c = 0;
    for (std::size_t i = 0; i < ivs.size(); ++i) c += ivs[i].lo <= ys[i] && ys[i] <= ivs[i].hi;
    return static_cast<double>(c) / static_cast<double>(ivs.size());
  };
  EXPECT_GT(cov(cv), 0.86);
  EXPECT_GT(cov(jk.intervals), 0.86);
  for (const auto& iv : cv) EXPECT_NEAR(iv.width(), cv[0].width(), 1e-9);
}

}  // namespace
}  // namespace phevcqr::conformal
