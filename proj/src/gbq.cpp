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

#include "phevcqr/gbq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace phevcqr::gbq {

void validate(const Hyperparams& hp) {
  if (hp.n_trees < 1) throw InputError("n_trees must be >= 1");
  if (!(hp.learning_rate > 0.0 && hp.learning_rate <= 1.0)) {
    throw InputError("learning_rate must be in (0, 1]");
  }
  if (hp.max_depth < 1) throw InputError("max_depth must be >= 1");
  if (hp.max_leaves < 2) throw InputError("max_leaves must be >= 2");
  if (hp.min_samples_leaf < 1) throw InputError("min_samples_leaf must be >= 1");
  if (hp.histogram_bins < 2 || hp.histogram_bins > 256) {
    throw InputError("histogram_bins must be in [2, 256]");
  }
}

LossSpec LossSpec::quantile(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw InputError("quantile level must lie in (0, 1)");
  return {Kind::kQuantile, tau};
}

double pinball_loss(double y, double y_hat, double tau) {
  const double diff = y - y_hat;
  return diff >= 0.0 ? tau * diff : (tau - 1.0) * diff;
}

double empirical_quantile(std::span<double> values, double tau) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty set");
  const double h = static_cast<double>(values.size() - 1) * tau;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo),
                   values.end());
  const double a = values[lo];
  if (lo + 1 >= values.size()) return a;
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return a;
  const double b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1,
                                     values.end());
  return a + frac * (b - a);
}

double Tree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const Node& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

int Tree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(),
                                        [](const Node& n) { return n.feature < 0; }));
}

int Tree::depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    if (n.feature < 0) continue;
    depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
    deepest = std::max(deepest, depth[i] + 1);
  }
  return deepest;
}

QuantileEnsemble::QuantileEnsemble(double base_score, std::vector<Tree> trees, LossSpec loss,
                                   Hyperparams hp, std::size_t feature_count)
    : base_score_(base_score),
      trees_(std::move(trees)),
      loss_(loss),
      hp_(hp),
      feature_count_(feature_count) {}

double QuantileEnsemble::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(x);
  return base_score_ + hp_.learning_rate * sum;
}

std::vector<double> QuantileEnsemble::predict(const FeatureMatrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(x.row(i));
  return out;
}

namespace {

constexpr const char* kFormat = "phevcqr.gbq";
constexpr int kFormatVersion = 1;

double midpoint(double a, double b) {
  const double m = a + 0.5 * (b - a);
  return m >= b ? a : m;
}

// Cut points between distinct values; when there are more distinct values
// than bins, cuts follow the quantiles of the training column.
std::vector<double> make_thresholds(std::vector<double> values, int max_bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> distinct = values;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> cuts;
  if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
    for (std::size_t i = 1; i < distinct.size(); ++i) {
      cuts.push_back(midpoint(distinct[i - 1], distinct[i]));
    }
    return cuts;
  }
  const std::size_t n = values.size();
  for (int k = 1; k < max_bins; ++k) {
    const double v = values[static_cast<std::size_t>(k) * n / static_cast<std::size_t>(max_bins)];
    auto it = std::lower_bound(distinct.begin(), distinct.end(), v);
    if (it == distinct.begin()) continue;
    const double cut = midpoint(*(it - 1), v);
    if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
  }
  return cuts;
}

struct HistBin {
  double grad = 0.0;
  std::int64_t count = 0;
};

struct Split {
  int feature = -1;
  int bin = -1;
  double gain = 0.0;
};

struct Leaf {
  int node = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  int depth = 0;
  double grad = 0.0;
  std::int64_t count = 0;
  std::vector<HistBin> hist;
  Split best;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, const Hyperparams& hp) : hp_(hp), rows_(x.rows()) {
    const std::size_t cols = x.cols();
    thresholds_.resize(cols);
    offsets_.resize(cols + 1, 0);
    bins_.resize(rows_ * cols);
    std::vector<double> column(rows_);
    for (std::size_t f = 0; f < cols; ++f) {
      for (std::size_t i = 0; i < rows_; ++i) column[i] = x(i, f);
      thresholds_[f] = make_thresholds(column, hp.histogram_bins);
      const auto& cuts = thresholds_[f];
      for (std::size_t i = 0; i < rows_; ++i) {
        bins_[f * rows_ + i] = static_cast<std::uint8_t>(
            std::lower_bound(cuts.begin(), cuts.end(), column[i]) - cuts.begin());
      }
      offsets_[f + 1] = offsets_[f] + cuts.size() + 1;
    }
    order_.resize(rows_);
    scratch_.resize(rows_);
  }

  // Grows one tree on the gradients; leaf_of[i] receives the node index of
  // the leaf holding row i.
  Tree grow(std::span<const double> grad, std::vector<int>& leaf_of) {
    Tree tree;
    tree.nodes.emplace_back();
    std::iota(order_.begin(), order_.end(), 0);

    std::vector<Leaf> leaves;
    Leaf root;
    root.begin = 0;
    root.end = rows_;
    build_histogram(root, grad);
    find_split(root);
    leaves.push_back(std::move(root));

    while (static_cast<int>(leaves.size()) < hp_.max_leaves) {
      std::size_t pick = leaves.size();
      double best_gain = 0.0;
      for (std::size_t k = 0; k < leaves.size(); ++k) {
        const Leaf& l = leaves[k];
        if (l.best.feature < 0 || l.depth >= hp_.max_depth) continue;
        if (pick == leaves.size() || l.best.gain > best_gain) {
          pick = k;
          best_gain = l.best.gain;
        }
      }
      if (pick == leaves.size()) break;
      Leaf right = split(tree, leaves[pick], grad);
      find_split(leaves[pick]);
      find_split(right);
      leaves.push_back(std::move(right));
    }

    leaf_of.resize(rows_);
    for (const Leaf& l : leaves) {
      for (std::size_t k = l.begin; k < l.end; ++k) leaf_of[order_[k]] = l.node;
    }
    leaf_ranges_.clear();
    for (const Leaf& l : leaves) leaf_ranges_.push_back({l.node, l.begin, l.end});
    return tree;
  }

  struct LeafRange {
    int node;
    std::size_t begin;
    std::size_t end;
  };
  const std::vector<LeafRange>& leaf_ranges() const { return leaf_ranges_; }
  std::span<const std::size_t> rows_of(const LeafRange& r) const {
    return {order_.data() + r.begin, r.end - r.begin};
  }

 private:
  void build_histogram(Leaf& leaf, std::span<const double> grad) {
    leaf.hist.assign(offsets_.back(), HistBin{});
    leaf.grad = 0.0;
    leaf.count = static_cast<std::int64_t>(leaf.end - leaf.begin);
    for (std::size_t k = leaf.begin; k < leaf.end; ++k) leaf.grad += grad[order_[k]];
    const std::size_t cols = thresholds_.size();
    for (std::size_t f = 0; f < cols; ++f) {
      HistBin* h = leaf.hist.data() + offsets_[f];
      const std::uint8_t* b = bins_.data() + f * rows_;
      for (std::size_t k = leaf.begin; k < leaf.end; ++k) {
        const std::size_t i = order_[k];
        h[b[i]].grad += grad[i];
        ++h[b[i]].count;
      }
    }
  }

  void find_split(Leaf& leaf) {
    leaf.best = Split{};
    const auto min_leaf = static_cast<std::int64_t>(hp_.min_samples_leaf);
    if (leaf.count < 2 * min_leaf) return;
    const double n = static_cast<double>(leaf.count);
    const double parent = leaf.grad * leaf.grad / n;
    const double tolerance = 1e-12 * std::max(1.0, std::abs(parent));
    for (std::size_t f = 0; f < thresholds_.size(); ++f) {
      const HistBin* h = leaf.hist.data() + offsets_[f];
      const std::size_t nb = offsets_[f + 1] - offsets_[f];
      double g_left = 0.0;
      std::int64_t c_left = 0;
      for (std::size_t j = 0; j + 1 < nb; ++j) {
        g_left += h[j].grad;
        c_left += h[j].count;
        if (c_left < min_leaf) continue;
        const std::int64_t c_right = leaf.count - c_left;
        if (c_right < min_leaf) break;
        if (h[j].count == 0) continue;  // same partition as an earlier cut
        const double g_right = leaf.grad - g_left;
        const double gain = g_left * g_left / static_cast<double>(c_left) +
                            g_right * g_right / static_cast<double>(c_right) - parent;
        if (gain > tolerance && gain > leaf.best.gain) {
          leaf.best = {static_cast<int>(f), static_cast<int>(j), gain};
        }
      }
    }
  }

  // Splits `leaf` in place into its left child and returns the right child.
  Leaf split(Tree& tree, Leaf& leaf, std::span<const double> grad) {
    const auto f = static_cast<std::size_t>(leaf.best.feature);
    const auto cut = static_cast<std::uint8_t>(leaf.best.bin);
    const std::uint8_t* b = bins_.data() + f * rows_;

    std::size_t n_left = 0;
    std::size_t n_right = 0;
    const std::size_t width = leaf.end - leaf.begin;
    for (std::size_t k = leaf.begin; k < leaf.end; ++k) {
      const std::size_t i = order_[k];
      if (b[i] <= cut) {
        order_[leaf.begin + n_left++] = i;
      } else {
        scratch_[n_right++] = i;
      }
    }
    std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(n_right),
              order_.begin() + static_cast<std::ptrdiff_t>(leaf.begin + n_left));
    (void)width;

    const int left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    Node& parent = tree.nodes[static_cast<std::size_t>(leaf.node)];
    parent.feature = leaf.best.feature;
    parent.threshold = thresholds_[f][static_cast<std::size_t>(leaf.best.bin)];
    parent.left = left_id;
    parent.right = left_id + 1;

    Leaf left;
    left.node = left_id;
    left.begin = leaf.begin;
    left.end = leaf.begin + n_left;
    left.depth = leaf.depth + 1;
    Leaf right;
    right.node = left_id + 1;
    right.begin = left.end;
    right.end = leaf.end;
    right.depth = leaf.depth + 1;

    // Scan the smaller child; the larger one is parent minus smaller.
    Leaf& small = n_left <= n_right ? left : right;
    Leaf& large = n_left <= n_right ? right : left;
    build_histogram(small, grad);
    large.hist = std::move(leaf.hist);
    for (std::size_t k = 0; k < large.hist.size(); ++k) {
      large.hist[k].grad -= small.hist[k].grad;
      large.hist[k].count -= small.hist[k].count;
    }
    large.count = leaf.count - small.count;
    large.grad = 0.0;
    for (std::size_t k = large.begin; k < large.end; ++k) large.grad += grad[order_[k]];

    leaf = std::move(left);
    return right;
  }

  const Hyperparams& hp_;
  std::size_t rows_;
  std::vector<std::vector<double>> thresholds_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint8_t> bins_;  // feature-major
  std::vector<std::size_t> order_;
  std::vector<std::size_t> scratch_;
  std::vector<LeafRange> leaf_ranges_;
};

double mean_loss(std::span<const double> y, std::span<const double> pred, const LossSpec& loss) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - pred[i];
    total += loss.kind == LossSpec::Kind::kSquared ? d * d : pinball_loss(y[i], pred[i], loss.tau);
  }
  return total / static_cast<double>(y.size());
}

}  // namespace

QuantileEnsemble fit(const FeatureMatrix& x, std::span<const double> y, const LossSpec& loss,
                     const Hyperparams& hp) {
  validate(hp);
  if (loss.kind == LossSpec::Kind::kQuantile && !(loss.tau > 0.0 && loss.tau < 1.0)) {
    throw InputError("quantile level must lie in (0, 1)");
  }
  const std::size_t n = x.rows();
  if (n == 0 || x.cols() == 0) throw InputError("cannot fit on empty data");
  if (y.size() != n) throw InputError("feature and target row counts differ");
  if (n < 2 * static_cast<std::size_t>(hp.min_samples_leaf)) {
    throw InputError("need at least 2 * min_samples_leaf rows to fit");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(y[i])) throw InputError("non-finite target at row " + std::to_string(i));
    for (double v : x.row(i)) {
      if (!std::isfinite(v)) throw InputError("non-finite feature at row " + std::to_string(i));
    }
  }

  const bool quantile = loss.kind == LossSpec::Kind::kQuantile;
  std::vector<double> work(y.begin(), y.end());
  const double base = quantile ? empirical_quantile(work, loss.tau)
                               : std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> pred(n, base);
  std::vector<double> grad(n);
  std::vector<int> leaf_of;
  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(hp.n_trees));
  std::vector<double> history{mean_loss(y, pred, loss)};
  TreeBuilder builder(x, hp);

  for (int round = 0; round < hp.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = quantile ? loss.tau - (y[i] < pred[i] ? 1.0 : 0.0) : y[i] - pred[i];
    }
    Tree tree = builder.grow(grad, leaf_of);
    for (const auto& range : builder.leaf_ranges()) {
      const auto rows = builder.rows_of(range);
      double value = 0.0;
      if (quantile) {
        work.resize(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) work[k] = y[rows[k]] - pred[rows[k]];
        value = empirical_quantile(work, loss.tau);
      } else {
        for (std::size_t i : rows) value += grad[i];
        value /= static_cast<double>(rows.size());
      }
      tree.nodes[static_cast<std::size_t>(range.node)].value = value;
      for (std::size_t i : rows) pred[i] += hp.learning_rate * value;
    }
    trees.push_back(std::move(tree));
    history.push_back(mean_loss(y, pred, loss));
  }

  QuantileEnsemble model(base, std::move(trees), loss, hp, x.cols());
  model.set_training_loss(std::move(history));
  return model;
}

nlohmann::json QuantileEnsemble::to_json() const {
  nlohmann::ordered_json doc;
  doc["format"] = kFormat;
  doc["version"] = kFormatVersion;
  doc["feature_count"] = feature_count_;
  doc["base_score"] = base_score_;
  doc["learning_rate"] = hp_.learning_rate;
  doc["loss"] = {{"kind", loss_.kind == LossSpec::Kind::kSquared ? "squared" : "quantile"},
                 {"tau", loss_.tau}};
  doc["hyperparams"] = {{"n_trees", hp_.n_trees},
                        {"learning_rate", hp_.learning_rate},
                        {"max_depth", hp_.max_depth},
                        {"max_leaves", hp_.max_leaves},
                        {"min_samples_leaf", hp_.min_samples_leaf},
                        {"histogram_bins", hp_.histogram_bins},
                        {"seed", hp_.seed}};
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : trees_) {
    nlohmann::ordered_json nodes;
    std::vector<int> feature, left, right;
    std::vector<double> threshold, value;
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    nodes["feature"] = feature;
    nodes["threshold"] = threshold;
    nodes["left"] = left;
    nodes["right"] = right;
    nodes["value"] = value;
    trees.push_back(std::move(nodes));
  }
  doc["trees"] = std::move(trees);
  return nlohmann::json::parse(doc.dump());
}

QuantileEnsemble QuantileEnsemble::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kFormat) {
      throw InputError("not a gradient-boosted model document");
    }
    if (doc.at("version").get<int>() != kFormatVersion) {
      throw InputError("unsupported model version " + doc.at("version").dump());
    }
    const auto& hpj = doc.at("hyperparams");
    Hyperparams hp;
    hp.n_trees = hpj.at("n_trees").get<int>();
    hp.learning_rate = hpj.at("learning_rate").get<double>();
    hp.max_depth = hpj.at("max_depth").get<int>();
    hp.max_leaves = hpj.at("max_leaves").get<int>();
    hp.min_samples_leaf = hpj.at("min_samples_leaf").get<int>();
    hp.histogram_bins = hpj.at("histogram_bins").get<int>();
    hp.seed = hpj.at("seed").get<std::uint64_t>();
    LossSpec loss;
    const auto kind = doc.at("loss").at("kind").get<std::string>();
    if (kind == "squared") {
      loss = LossSpec::squared();
    } else if (kind == "quantile") {
      loss = LossSpec::quantile(doc.at("loss").at("tau").get<double>());
    } else {
      throw InputError("unknown loss kind '" + kind + "'");
    }
    const auto feature_count = doc.at("feature_count").get<std::size_t>();
    std::vector<Tree> trees;
    for (const auto& tj : doc.at("trees")) {
      const auto feature = tj.at("feature").get<std::vector<int>>();
      const auto threshold = tj.at("threshold").get<std::vector<double>>();
      const auto left = tj.at("left").get<std::vector<int>>();
      const auto right = tj.at("right").get<std::vector<int>>();
      const auto value = tj.at("value").get<std::vector<double>>();
      const std::size_t m = feature.size();
      if (m == 0 || threshold.size() != m || left.size() != m || right.size() != m ||
          value.size() != m) {
        throw InputError("malformed tree node arrays");
      }
      Tree t;
      for (std::size_t k = 0; k < m; ++k) {
        Node node{feature[k], threshold[k], left[k], right[k], value[k]};
        if (node.feature >= 0) {
          const auto lim = static_cast<int>(m);
          if (node.feature >= static_cast<int>(feature_count) || node.left <= 0 ||
              node.left >= lim || node.right <= 0 || node.right >= lim) {
            throw InputError("tree node " + std::to_string(k) + " has invalid links");
          }
        }
        t.nodes.push_back(node);
      }
      trees.push_back(std::move(t));
    }
    return QuantileEnsemble(doc.at("base_score").get<double>(), std::move(trees), loss, hp,
                            feature_count);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace phevcqr::gbq
