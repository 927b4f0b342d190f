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

#ifndef PHEVCQR_CONFORMAL_HPP_
#define PHEVCQR_CONFORMAL_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "phevcqr/common.hpp"
#include "phevcqr/gbq.hpp"

namespace phevcqr::conformal {

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> calib;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

// Uniform permutation of [0, n) under `seed`; the first two parts take the
// floor of their fraction and the remainder goes to test.
DataSplit split(std::size_t n, std::array<double, 3> fractions, std::uint64_t seed);

// max(q_lo - y, y - q_hi).
double conformity_score(double q_lo, double q_hi, double y);

// k-th smallest value, k counted from 1.
double order_statistic(std::span<const double> values, std::size_t k);

// k-th smallest score with k = ceil((1 - alpha)(n + 1)). Throws InputError
// when k exceeds n.
double q_hat(std::span<const double> scores, double alpha);

struct PredictionInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool crossing = false;

  double width() const { return hi - lo; }
};

// Orders the endpoints, flagging the interval when they arrive reversed.
PredictionInterval make_interval(double lo, double hi);

struct CqrModel {
  gbq::QuantileEnsemble lower;
  gbq::QuantileEnsemble upper;
  double q_alpha = 0.0;
  double alpha = 0.1;
};

// Quantile models at alpha/2 and 1 - alpha/2 on the training rows; the margin
// comes from conformity scores on the calibration rows.
CqrModel cqr_fit(const FeatureMatrix& x_train, std::span<const double> y_train,
                 const FeatureMatrix& x_calib, std::span<const double> y_calib, double alpha,
                 const gbq::Hyperparams& hp, int jobs = 1);

// (q_lo - Q, q_hi + Q), swapped and flagged when reversed.
PredictionInterval cqr_interval(double q_lo, double q_hi, double q_alpha);
PredictionInterval cqr_predict(const CqrModel& model, std::span<const double> x);
std::vector<PredictionInterval> cqr_predict(const CqrModel& model, const FeatureMatrix& x,
                                            int jobs = 1);

// Point regressors for the baselines. A fitter trains on (x, y) and returns a
// thread-safe predictor.
using PointModel = std::function<double(std::span<const double>)>;
using PointFitter = std::function<PointModel(const FeatureMatrix&, std::span<const double>)>;

// Squared-loss boosted trees.
PointFitter gbq_point_fitter(const gbq::Hyperparams& hp);

// fold[i] in [0, K): a seeded permutation dealt round-robin into K folds.
std::vector<int> kfold_assignment(std::size_t n, int k, std::uint64_t seed);

// K models each trained without one fold, with out-of-fold absolute residuals.
struct CrossFit {
  std::vector<int> fold;
  std::vector<PointModel> fold_models;
  std::vector<double> residuals;
};

CrossFit cross_fit(const FeatureMatrix& x, std::span<const double> y, std::span<const int> fold,
                   const PointFitter& fitter, int jobs = 1);

// Aggregated cross-conformal: full-data model +/- the q_hat of pooled
// out-of-fold residuals. Width is constant over test points.
std::vector<PredictionInterval> cv_intervals(const CrossFit& cf, const PointModel& full_model,
                                             const FeatureMatrix& x_test, double alpha);

// CV+ endpoints: floor(alpha(n+1))-th smallest of mu_{-k(i)}(x) - R_i and
// ceil((1-alpha)(n+1))-th smallest of mu_{-k(i)}(x) + R_i.
std::vector<PredictionInterval> cvplus_intervals(const CrossFit& cf, const FeatureMatrix& x_test,
                                                 double alpha, int jobs = 1);

std::vector<PredictionInterval> cv_fit_predict(const FeatureMatrix& x, std::span<const double> y,
                                               const FeatureMatrix& x_test, double alpha, int k,
                                               const PointFitter& fitter, std::uint64_t seed,
                                               int jobs = 1);
std::vector<PredictionInterval> cvplus_fit_predict(const FeatureMatrix& x,
                                                   std::span<const double> y,
                                                   const FeatureMatrix& x_test, double alpha,
                                                   int k, const PointFitter& fitter,
                                                   std::uint64_t seed, int jobs = 1);

// Bootstrap index lists, each of size n drawn with replacement.
std::vector<std::vector<std::size_t>> bootstrap_resamples(std::size_t n, int b,
                                                          std::uint64_t seed);

struct JkabResult {
  std::vector<PredictionInterval> intervals;
  std::vector<int> oob_count;           // out-of-bag models per training row
  std::size_t excluded = 0;             // rows with no out-of-bag model
};

// Jackknife+-after-bootstrap with mean aggregation over out-of-bag models.
// Throws InputError when no training row is out of bag anywhere.
JkabResult jkab_fit_predict(const FeatureMatrix& x, std::span<const double> y,
                            const FeatureMatrix& x_test, double alpha,
                            const std::vector<std::vector<std::size_t>>& resamples,
                            const PointFitter& fitter, int jobs = 1);

}  // namespace phevcqr::conformal

#endif  // PHEVCQR_CONFORMAL_HPP_
