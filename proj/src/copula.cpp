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

#include "phevcqr/copula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace phevcqr::synth {

MarginalModel::MarginalModel(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.empty()) throw std::invalid_argument("empty marginal");
  std::sort(sorted_.begin(), sorted_.end());
}

double MarginalModel::quantile(double u) const {
  const double n = static_cast<double>(sorted_.size());
  const double pos = u * (n + 1.0) - 1.0;  // 0-based order-statistic index
  if (pos <= 0.0) return sorted_.front();
  if (pos >= n - 1.0) return sorted_.back();
  const auto i = static_cast<std::size_t>(pos);
  const double w = pos - static_cast<double>(i);
  return sorted_[i] + w * (sorted_[i + 1] - sorted_[i]);
}

double MarginalModel::cdf(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

Eigen::MatrixXd pseudo_observations(const FeatureMatrix& data) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  Eigen::MatrixXd u(n, d);
  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < d; ++j) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return data(a, j) < data(b, j); });
    std::size_t i = 0;
    while (i < n) {
      std::size_t k = i;
      while (k + 1 < n && data(order[k + 1], j) == data(order[i], j)) ++k;
      const double rank = 0.5 * static_cast<double>(i + k) + 1.0;
      for (std::size_t m = i; m <= k; ++m) {
        u(static_cast<Eigen::Index>(order[m]), static_cast<Eigen::Index>(j)) =
            rank / static_cast<double>(n + 1);
      }
      i = k + 1;
    }
  }
  return u;
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("kendall_tau: size mismatch");
  const std::size_t n = x.size();
  long long concordant_minus_discordant = 0;
  long long ties_x = 0;
  long long ties_y = 0;
  long long pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[j] - xi;
      const double dy = y[j] - yi;
      ++pairs;
      if (dx == 0.0) ++ties_x;
      if (dy == 0.0) ++ties_y;
      const double s = dx * dy;
      concordant_minus_discordant += (s > 0.0) - (s < 0.0);
    }
  }
  const double denom = std::sqrt(static_cast<double>(pairs - ties_x)) *
                       std::sqrt(static_cast<double>(pairs - ties_y));
  if (denom == 0.0) return 0.0;
  return static_cast<double>(concordant_minus_discordant) / denom;
}

Eigen::MatrixXd nearest_correlation(const Eigen::MatrixXd& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("correlation repair: eigendecomposition failed");
  }
  Eigen::VectorXd values = eig.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd repaired =
      eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
  const Eigen::VectorXd scale = repaired.diagonal().cwiseSqrt().cwiseInverse();
  repaired = scale.asDiagonal() * repaired * scale.asDiagonal();
  repaired.diagonal().setOnes();
  return 0.5 * (repaired + repaired.transpose());
}

double tcopula_loglik(const Eigen::MatrixXd& u, const Eigen::MatrixXd& corr, double nu) {
  const Eigen::Index n = u.rows();
  const Eigen::Index d = u.cols();
  const double dd = static_cast<double>(d);
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("t-copula likelihood: correlation is not positive definite");
  }
  const Eigen::MatrixXd lower = llt.matrixL();
  const double log_det = 2.0 * lower.diagonal().array().log().sum();

  using boost::math::lgamma;
  const double joint_const = lgamma(0.5 * (nu + dd)) - lgamma(0.5 * nu) -
                             0.5 * dd * std::log(nu * std::numbers::pi) - 0.5 * log_det;
  const double marg_const = lgamma(0.5 * (nu + 1.0)) - lgamma(0.5 * nu) -
                            0.5 * std::log(nu * std::numbers::pi);

  const boost::math::students_t dist(nu);
  double total = 0.0;
  Eigen::VectorXd x(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    double marginal = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      x(j) = boost::math::quantile(dist, u(i, j));
      marginal += marg_const - 0.5 * (nu + 1.0) * std::log1p(x(j) * x(j) / nu);
    }
    const double quad = lower.triangularView<Eigen::Lower>().solve(x).squaredNorm();
    total += joint_const - 0.5 * (nu + dd) * std::log1p(quad / nu) - marginal;
  }
  return total;
}

CopulaModel fit_tcopula(const FeatureMatrix& data, int nu_min, int nu_max) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  if (n < 5) throw InputError("t-copula fit needs at least 5 rows");
  if (d < 1) throw InputError("t-copula fit needs at least one column");
  if (nu_min < 1 || nu_max < nu_min) throw InputError("invalid degrees-of-freedom grid");

  CopulaModel model;
  std::vector<std::vector<double>> columns(d, std::vector<double>(n));
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) columns[j][i] = data(i, j);
    const auto [lo, hi] = std::minmax_element(columns[j].begin(), columns[j].end());
    if (*lo == *hi) {
      throw InputError("t-copula fit: column " + std::to_string(j) + " is constant");
    }
    model.marginals.emplace_back(columns[j]);
  }

  const auto di = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(di, di);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      const double tau = kendall_tau(columns[a], columns[b]);
      const double rho = std::sin(0.5 * std::numbers::pi * tau);
      corr(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = rho;
      corr(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = rho;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spectrum(corr, Eigen::EigenvaluesOnly);
  if (spectrum.eigenvalues().minCoeff() < 1e-6) {
    corr = nearest_correlation(corr);
    Eigen::LLT<Eigen::MatrixXd> recheck(corr);
    if (recheck.info() != Eigen::Success) {
      throw std::runtime_error("t-copula fit: correlation matrix could not be repaired");
    }
  }
  model.correlation = corr;

  const Eigen::MatrixXd u = pseudo_observations(data);
  model.nu_min = nu_min;
  double best = -std::numeric_limits<double>::infinity();
  for (int nu = nu_min; nu <= nu_max; ++nu) {
    const double ll = tcopula_loglik(u, corr, static_cast<double>(nu));
    model.nu_loglik.push_back(ll);
    if (ll > best) {
      best = ll;
      model.nu = nu;
    }
  }
  return model;
}

FeatureMatrix sample_tcopula(const CopulaModel& model, std::size_t n, std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(model.marginals.size());
  FeatureMatrix out(n, static_cast<std::size_t>(d));
  if (n == 0) return out;
  Eigen::LLT<Eigen::MatrixXd> llt(model.correlation);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("t-copula sample: correlation is not positive definite");
  }
  const Eigen::MatrixXd lower = llt.matrixL();
  const double nu = static_cast<double>(model.nu);
  const boost::math::students_t dist(nu);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(nu);
  Eigen::VectorXd g(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) g(j) = normal(rng);
    const Eigen::VectorXd z = lower * g;
    const double w = std::sqrt(chi2(rng) / nu);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double u = boost::math::cdf(dist, z(j) / w);
      out(i, static_cast<std::size_t>(j)) =
          model.marginals[static_cast<std::size_t>(j)].quantile(u);
    }
  }
  return out;
}

}  // namespace phevcqr::synth
