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
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "phevcqr/parallel.hpp"
#include "phevcqr/seed.hpp"

namespace phevcqr::conformal {
namespace {

// Slack absorbing binary rounding in products such as 0.9 * 100.
constexpr double kRankSlack = 1e-9;

std::size_t upper_rank(std::size_t n, double alpha) {
  return static_cast<std::size_t>(
      std::ceil((1.0 - alpha) * static_cast<double>(n + 1) - kRankSlack));
}

std::size_t lower_rank(std::size_t n, double alpha) {
  return static_cast<std::size_t>(
      std::floor(alpha * static_cast<double>(n + 1) + kRankSlack));
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
}

void check_rows(const FeatureMatrix& x, std::span<const double> y, const char* what) {
  if (x.rows() == 0) throw InputError(std::string(what) + " set is empty");
  if (x.rows() != y.size()) throw InputError(std::string(what) + " feature/target size mismatch");
}

}  // namespace

DataSplit split(std::size_t n, std::array<double, 3> fractions, std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw InputError("split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("split fractions must sum to 1");
  const auto n_train =
      static_cast<std::size_t>(std::floor(fractions[0] * static_cast<double>(n) + kRankSlack));
  const auto n_calib =
      static_cast<std::size_t>(std::floor(fractions[1] * static_cast<double>(n) + kRankSlack));
  if (n_train == 0 || n_calib == 0 || n_train + n_calib >= n) {
    throw InputError("dataset of " + std::to_string(n) + " rows leaves an empty split part");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  DataSplit out;
  out.seed = seed;
  out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.calib.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                   perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_calib));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_calib), perm.end());
  return out;
}

double conformity_score(double q_lo, double q_hi, double y) {
  return std::max(q_lo - y, y - q_hi);
}

double order_statistic(std::span<const double> values, std::size_t k) {
  if (k < 1 || k > values.size()) {
    throw InputError("order statistic " + std::to_string(k) + " out of range for " +
                     std::to_string(values.size()) + " values");
  }
  std::vector<double> work(values.begin(), values.end());
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k - 1), work.end());
  return work[k - 1];
}

double q_hat(std::span<const double> scores, double alpha) {
  check_alpha(alpha);
  if (scores.empty()) throw InputError("q_hat needs at least one score");
  const std::size_t k = upper_rank(scores.size(), alpha);
  if (k > scores.size()) {
    throw InputError("calibration set of " + std::to_string(scores.size()) +
                     " rows is too small for alpha = " + std::to_string(alpha) +
                     "; use a larger calibration set");
  }
  return order_statistic(scores, k);
}

PredictionInterval make_interval(double lo, double hi) {
  if (lo > hi) return {hi, lo, true};
  return {lo, hi, false};
}

CqrModel cqr_fit(const FeatureMatrix& x_train, std::span<const double> y_train,
                 const FeatureMatrix& x_calib, std::span<const double> y_calib, double alpha,
                 const gbq::Hyperparams& hp, int jobs) {
  check_alpha(alpha);
  check_rows(x_train, y_train, "training");
  check_rows(x_calib, y_calib, "calibration");
  if (upper_rank(y_calib.size(), alpha) > y_calib.size()) {
    throw InputError("calibration set of " + std::to_string(y_calib.size()) +
                     " rows is too small for alpha = " + std::to_string(alpha));
  }
  CqrModel model;
  model.alpha = alpha;
  const gbq::LossSpec losses[] = {gbq::LossSpec::quantile(alpha / 2.0),
                                  gbq::LossSpec::quantile(1.0 - alpha / 2.0)};
  gbq::QuantileEnsemble* targets[] = {&model.lower, &model.upper};
  parallel_for(2, jobs, [&](std::size_t i) {
    *targets[i] = gbq::fit(x_train, y_train, losses[i], hp);
  });
  std::vector<double> scores(y_calib.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = conformity_score(model.lower.predict(x_calib.row(i)),
                                 model.upper.predict(x_calib.row(i)), y_calib[i]);
  }
  model.q_alpha = q_hat(scores, alpha);
  return model;
}

PredictionInterval cqr_interval(double q_lo, double q_hi, double q_alpha) {
  return make_interval(q_lo - q_alpha, q_hi + q_alpha);
}

PredictionInterval cqr_predict(const CqrModel& model, std::span<const double> x) {
  return cqr_interval(model.lower.predict(x), model.upper.predict(x), model.q_alpha);
}

std::vector<PredictionInterval> cqr_predict(const CqrModel& model, const FeatureMatrix& x,
                                            int jobs) {
  std::vector<PredictionInterval> out(x.rows());
  parallel_for(x.rows(), jobs, [&](std::size_t i) { out[i] = cqr_predict(model, x.row(i)); });
  return out;
}

PointFitter gbq_point_fitter(const gbq::Hyperparams& hp) {
  return [hp](const FeatureMatrix& x, std::span<const double> y) -> PointModel {
    auto model = std::make_shared<const gbq::QuantileEnsemble>(
        gbq::fit(x, y, gbq::LossSpec::squared(), hp));
    return [model](std::span<const double> row) { return model->predict(row); };
  };
}

std::vector<int> kfold_assignment(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw InputError("K must be >= 2");
  if (n < static_cast<std::size_t>(k)) throw InputError("fewer rows than folds");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold(n);
  for (std::size_t p = 0; p < n; ++p) fold[perm[p]] = static_cast<int>(p % static_cast<std::size_t>(k));
  return fold;
}

CrossFit cross_fit(const FeatureMatrix& x, std::span<const double> y, std::span<const int> fold,
                   const PointFitter& fitter, int jobs) {
  check_rows(x, y, "fitting");
  if (fold.size() != y.size()) throw InputError("fold assignment size mismatch");
  const int k = *std::max_element(fold.begin(), fold.end()) + 1;
  if (k < 2) throw InputError("K must be >= 2");
  CrossFit cf;
  cf.fold.assign(fold.begin(), fold.end());
  cf.fold_models.resize(static_cast<std::size_t>(k));
  parallel_for(static_cast<std::size_t>(k), jobs, [&](std::size_t f) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (fold[i] != static_cast<int>(f)) keep.push_back(i);
    }
    if (keep.empty()) throw InputError("a fold covers every row");
    const auto yk = select(y, keep);
    cf.fold_models[f] = fitter(x.select(keep), yk);
  });
  cf.residuals.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto& m = cf.fold_models[static_cast<std::size_t>(fold[i])];
    cf.residuals[i] = std::abs(y[i] - m(x.row(i)));
  }
  return cf;
}

std::vector<PredictionInterval> cv_intervals(const CrossFit& cf, const PointModel& full_model,
                                             const FeatureMatrix& x_test, double alpha) {
  const double half = q_hat(cf.residuals, alpha);
  std::vector<PredictionInterval> out(x_test.rows());
  for (std::size_t t = 0; t < x_test.rows(); ++t) {
    const double mu = full_model(x_test.row(t));
    out[t] = {mu - half, mu + half, false};
  }
  return out;
}

namespace {

// Endpoints from per-row centres c_i(x) and radii R_i: the lower rank of
// c - R and the upper rank of c + R.
PredictionInterval plus_interval(std::span<const double> centres, std::span<const double> radii,
                                 double alpha, std::vector<double>& work) {
  const std::size_t n = centres.size();
  const std::size_t k_lo = lower_rank(n, alpha);
  const std::size_t k_hi = upper_rank(n, alpha);
  if (k_lo < 1 || k_hi > n) {
    throw InputError(std::to_string(n) + " rows are too few for alpha = " +
                     std::to_string(alpha));
  }
  work.resize(n);
  for (std::size_t i = 0; i < n; ++i) work[i] = centres[i] - radii[i];
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k_lo - 1), work.end());
  const double lo = work[k_lo - 1];
  for (std::size_t i = 0; i < n; ++i) work[i] = centres[i] + radii[i];
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k_hi - 1), work.end());
  return make_interval(lo, work[k_hi - 1]);
}

}  // namespace

std::vector<PredictionInterval> cvplus_intervals(const CrossFit& cf, const FeatureMatrix& x_test,
                                                 double alpha, int jobs) {
  check_alpha(alpha);
  const std::size_t k = cf.fold_models.size();
  const std::size_t n = cf.fold.size();
  std::vector<PredictionInterval> out(x_test.rows());
  parallel_for(x_test.rows(), jobs, [&](std::size_t t) {
    std::vector<double> fold_pred(k);
    for (std::size_t f = 0; f < k; ++f) fold_pred[f] = cf.fold_models[f](x_test.row(t));
    std::vector<double> centres(n);
    for (std::size_t i = 0; i < n; ++i) centres[i] = fold_pred[static_cast<std::size_t>(cf.fold[i])];
    std::vector<double> work;
    out[t] = plus_interval(centres, cf.residuals, alpha, work);
  });
  return out;
}

std::vector<PredictionInterval> cv_fit_predict(const FeatureMatrix& x, std::span<const double> y,
                                               const FeatureMatrix& x_test, double alpha, int k,
                                               const PointFitter& fitter, std::uint64_t seed,
                                               int jobs) {
  check_alpha(alpha);
  const auto fold = kfold_assignment(y.size(), k, seed);
  const auto cf = cross_fit(x, y, fold, fitter, jobs);
  return cv_intervals(cf, fitter(x, y), x_test, alpha);
}

std::vector<PredictionInterval> cvplus_fit_predict(const FeatureMatrix& x,
                                                   std::span<const double> y,
                                                   const FeatureMatrix& x_test, double alpha,
                                                   int k, const PointFitter& fitter,
                                                   std::uint64_t seed, int jobs) {
  check_alpha(alpha);
  const auto fold = kfold_assignment(y.size(), k, seed);
  return cvplus_intervals(cross_fit(x, y, fold, fitter, jobs), x_test, alpha, jobs);
}

std::vector<std::vector<std::size_t>> bootstrap_resamples(std::size_t n, int b,
                                                          std::uint64_t seed) {
  if (b < 2) throw InputError("B must be >= 2");
  if (n == 0) throw InputError("cannot resample an empty set");
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(b));
  for (std::size_t r = 0; r < out.size(); ++r) {
    std::mt19937_64 rng(derive_seed(seed, r));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    out[r].resize(n);
    for (auto& idx : out[r]) idx = pick(rng);
  }
  return out;
}

JkabResult jkab_fit_predict(const FeatureMatrix& x, std::span<const double> y,
                            const FeatureMatrix& x_test, double alpha,
                            const std::vector<std::vector<std::size_t>>& resamples,
                            const PointFitter& fitter, int jobs) {
  check_alpha(alpha);
  check_rows(x, y, "fitting");
  const std::size_t n = y.size();
  const std::size_t b = resamples.size();
  if (b < 2) throw InputError("B must be >= 2");

  // in_bag[r * n + i] marks row i as drawn by resample r.
  std::vector<char> in_bag(b * n, 0);
  for (std::size_t r = 0; r < b; ++r) {
    if (resamples[r].empty()) throw InputError("empty bootstrap resample");
    for (std::size_t idx : resamples[r]) {
      if (idx >= n) throw InputError("bootstrap index out of range");
      in_bag[r * n + idx] = 1;
    }
  }
  JkabResult result;
  result.oob_count.assign(n, 0);
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < b; ++r) result.oob_count[i] += in_bag[r * n + i] ? 0 : 1;
    if (result.oob_count[i] > 0) kept.push_back(i);
  }
  result.excluded = n - kept.size();
  if (kept.empty()) throw InputError("every row is in bag for every bootstrap model");

  std::vector<PointModel> models(b);
  parallel_for(b, jobs, [&](std::size_t r) {
    const auto yr = select(y, resamples[r]);
    models[r] = fitter(x.select(resamples[r]), yr);
  });

  // weights(k, r) = 1/oob_count for the out-of-bag models of kept row k, so
  // the leave-one-out aggregates at a point are weights * predictions.
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kept.size()),
                                                  static_cast<Eigen::Index>(b));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const std::size_t i = kept[k];
    for (std::size_t r = 0; r < b; ++r) {
      if (!in_bag[r * n + i]) {
        weights(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(r)) =
            1.0 / static_cast<double>(result.oob_count[i]);
      }
    }
  }

  std::vector<double> radii(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const std::size_t i = kept[k];
    double centre = 0.0;
    for (std::size_t r = 0; r < b; ++r) {
      if (!in_bag[r * n + i]) centre += models[r](x.row(i));
    }
    radii[k] = std::abs(y[i] - centre / static_cast<double>(result.oob_count[i]));
  }

  result.intervals.resize(x_test.rows());
  parallel_for(x_test.rows(), jobs, [&](std::size_t t) {
    Eigen::VectorXd p(static_cast<Eigen::Index>(b));
    for (std::size_t r = 0; r < b; ++r) p(static_cast<Eigen::Index>(r)) = models[r](x_test.row(t));
    const Eigen::VectorXd centres = weights * p;
    std::vector<double> work;
    result.intervals[t] = plus_interval({centres.data(), kept.size()}, radii, alpha, work);
  });
  return result;
}

}  // namespace phevcqr::conformal
