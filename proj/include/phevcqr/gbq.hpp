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

// Histogram-based gradient-boosted regression trees with squared or pinball
// loss. Trees grow leaf-wise (best gain first) over pre-binned features.

#ifndef PHEVCQR_GBQ_HPP_
#define PHEVCQR_GBQ_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "phevcqr/common.hpp"

namespace phevcqr::gbq {

struct Hyperparams {
  int n_trees = 955;
  double learning_rate = 0.19;
  int max_depth = 14;
  int max_leaves = 42;
  int min_samples_leaf = 20;
  int histogram_bins = 256;
  std::uint64_t seed = 0;

  bool operator==(const Hyperparams&) const = default;
};

// Throws InputError when a value is outside its domain.
void validate(const Hyperparams& hp);

struct LossSpec {
  enum class Kind { kSquared, kQuantile };
  Kind kind = Kind::kSquared;
  double tau = 0.5;

  static LossSpec squared() { return {Kind::kSquared, 0.5}; }
  static LossSpec quantile(double tau);

  bool operator==(const LossSpec&) const = default;
};

double pinball_loss(double y, double y_hat, double tau);

// Empirical tau-quantile with linear interpolation between order statistics
// (position (m - 1) tau). Reorders `values`.
double empirical_quantile(std::span<double> values, double tau);

struct Node {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x <= threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<Node> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  int leaf_count() const;
  int depth() const;
};

class QuantileEnsemble {
 public:
  QuantileEnsemble() = default;
  QuantileEnsemble(double base_score, std::vector<Tree> trees, LossSpec loss,
                   Hyperparams hp, std::size_t feature_count);

  // base_score + learning_rate * sum of tree outputs.
  double predict(std::span<const double> x) const;
  std::vector<double> predict(const FeatureMatrix& x) const;

  double base_score() const { return base_score_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const LossSpec& loss() const { return loss_; }
  const Hyperparams& hyperparams() const { return hp_; }
  std::size_t feature_count() const { return feature_count_; }
  // Mean training loss before the first tree and after each round.
  const std::vector<double>& training_loss() const { return training_loss_; }
  void set_training_loss(std::vector<double> history) { training_loss_ = std::move(history); }

  nlohmann::json to_json() const;
  // Throws InputError on an unknown format or version.
  static QuantileEnsemble from_json(const nlohmann::json& doc);

 private:
  double base_score_ = 0.0;
  std::vector<Tree> trees_;
  LossSpec loss_;
  Hyperparams hp_;
  std::size_t feature_count_ = 0;
  std::vector<double> training_loss_;
};

// Throws InputError on empty data, non-finite values, or fewer than
// 2 * min_samples_leaf rows.
QuantileEnsemble fit(const FeatureMatrix& x, std::span<const double> y, const LossSpec& loss,
                     const Hyperparams& hp);

}  // namespace phevcqr::gbq

#endif  // PHEVCQR_GBQ_HPP_
