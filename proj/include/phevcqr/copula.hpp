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

// Student-t copula over empirical marginals: rank-based fitting (Kendall tau
// inversion plus a grid search over the degrees of freedom) and sampling.

#ifndef PHEVCQR_COPULA_HPP_
#define PHEVCQR_COPULA_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "phevcqr/common.hpp"

namespace phevcqr::synth {

// Empirical marginal. The quantile function interpolates linearly between
// order statistics placed at probabilities k/(n+1) and clamps outside.
class MarginalModel {
 public:
  MarginalModel() = default;
  explicit MarginalModel(std::vector<double> values);

  const std::vector<double>& sorted() const { return sorted_; }
  double quantile(double u) const;
  // Right-continuous empirical CDF.
  double cdf(double x) const;

 private:
  std::vector<double> sorted_;
};

struct CopulaModel {
  Eigen::MatrixXd correlation;
  int nu = 0;
  std::vector<MarginalModel> marginals;
  // Log-likelihood of every grid value of nu, starting at nu_min.
  int nu_min = 2;
  std::vector<double> nu_loglik;
};

// Ranks scaled by 1/(n+1); tied values receive their average rank.
Eigen::MatrixXd pseudo_observations(const FeatureMatrix& data);

// Kendall's tau-b.
double kendall_tau(std::span<const double> x, std::span<const double> y);

// Eigenvalues clipped at `floor`, then rescaled to unit diagonal.
Eigen::MatrixXd nearest_correlation(const Eigen::MatrixXd& m, double floor = 1e-6);

// Sum over rows of the t-copula log density at pseudo-observations u.
double tcopula_loglik(const Eigen::MatrixXd& u, const Eigen::MatrixXd& correlation,
                      double nu);

// Needs n >= 5 rows and no constant column (InputError otherwise).
CopulaModel fit_tcopula(const FeatureMatrix& data, int nu_min = 2, int nu_max = 30);

// Rows of n draws; deterministic for a given seed.
FeatureMatrix sample_tcopula(const CopulaModel& model, std::size_t n, std::uint64_t seed);

}  // namespace phevcqr::synth

#endif  // PHEVCQR_COPULA_HPP_
