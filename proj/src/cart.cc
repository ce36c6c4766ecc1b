/*
 * Copyright 2026 The oobcurve Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "oobcurve/cart.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "oobcurve/random.h"

namespace oobcurve {

TreeParams ResolveTreeParams(const TreeParams& params, const Dataset& data) {
  TreeParams out = params;
  const int p = data.num_features();
  const bool classification = IsClassification(data.task());
  if (out.mtry == 0) {
    out.mtry = classification
                   ? std::max(1, static_cast<int>(std::floor(std::sqrt(p))))
                   : std::max(1, p / 3);
  }
  if (out.min_node_size == 0) out.min_node_size = classification ? 1 : 5;
  if (out.mtry < 1 || out.mtry > p) {
    throw TreeError("mtry must lie in [1, " + std::to_string(p) + "], got " +
                    std::to_string(out.mtry));
  }
  if (out.min_node_size < 1) throw TreeError("min_node_size must be >= 1");
  if (out.max_depth < 0) throw TreeError("max_depth must be >= 0");
  return out;
}

std::vector<int32_t> FeatureLevels(const Dataset& data) {
  std::vector<int32_t> levels(data.num_features(), 0);
  for (int j = 0; j < data.num_features(); ++j) {
    if (data.column(j).kind == FeatureKind::kCategorical) {
      levels[j] = std::max(1, data.column(j).num_levels());
    }
  }
  return levels;
}

Tree::Tree(TaskKind task, int num_classes, std::vector<int32_t> feature_levels,
           std::vector<TreeNode> nodes,
           std::vector<LevelDirection> level_directions)
    : task_(task),
      num_classes_(num_classes),
      feature_levels_(std::move(feature_levels)),
      nodes_(std::move(nodes)),
      level_directions_(std::move(level_directions)) {}

template <typename FeatureFn>
double Tree::Descend(FeatureFn&& feature) const {
  int id = 0;
  while (!nodes_[id].is_leaf()) {
    const TreeNode& node = nodes_[id];
    const double x = feature(node.feature);
    bool go_left;
    if (node.levels_offset < 0) {
      go_left = x <= node.value;
    } else {
      const int level = static_cast<int>(x);
      const int num_levels = feature_levels_[node.feature];
      const LevelDirection dir =
          level < num_levels ? level_directions_[node.levels_offset + level]
                             : LevelDirection::kUnseen;
      go_left = dir == LevelDirection::kUnseen ? node.default_left
                                               : dir == LevelDirection::kLeft;
    }
    id = go_left ? node.left : node.right;
  }
  return nodes_[id].value;
}

double Tree::Predict(std::span<const double> row) const {
  if (row.size() != feature_levels_.size()) {
    throw TreeError("row has " + std::to_string(row.size()) +
                    " features, tree expects " +
                    std::to_string(feature_levels_.size()));
  }
  for (size_t j = 0; j < feature_levels_.size(); ++j) {
    if (feature_levels_[j] > 0 && (row[j] < 0 || row[j] != std::floor(row[j]))) {
      throw TreeError("feature " + std::to_string(j) +
                      " is categorical but the row holds a non-level value");
    }
  }
  return Descend([&](int j) { return row[j]; });
}

double Tree::PredictRow(const Dataset& data, int row) const {
  return Descend([&](int j) { return data.feature(row, j); });
}

int Tree::num_leaves() const {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(),
                                        [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<int> depth(nodes_.size(), 0);
  int max_depth = 0;
  // Children are always created after their parent.
  for (size_t id = 0; id < nodes_.size(); ++id) {
    const TreeNode& node = nodes_[id];
    max_depth = std::max(max_depth, depth[id]);
    if (!node.is_leaf()) {
      depth[node.left] = depth[id] + 1;
      depth[node.right] = depth[id] + 1;
    }
  }
  return max_depth;
}

bool Tree::operator==(const Tree& other) const {
  if (task_ != other.task_ || num_classes_ != other.num_classes_ ||
      feature_levels_ != other.feature_levels_ ||
      nodes_.size() != other.nodes_.size() ||
      level_directions_ != other.level_directions_) {
    return false;
  }
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& a = nodes_[i];
    const TreeNode& b = other.nodes_[i];
    if (a.feature != b.feature || a.left != b.left || a.right != b.right ||
        a.levels_offset != b.levels_offset || a.value != b.value ||
        a.gain != b.gain || a.weight != b.weight ||
        a.default_left != b.default_left) {
      return false;
    }
  }
  return true;
}

namespace {

struct Candidate {
  bool valid = false;
  int feature = -1;
  // Numeric: threshold. Categorical: rank of the last level sent left.
  double threshold = 0.0;
  double gain = 0.0;
  // Categorical only: direction per level of the feature.
  std::vector<LevelDirection> directions;
  bool default_left = false;
};

// Equal-gain ties go to the lowest feature index, then the lowest threshold.
bool Better(const Candidate& c, const Candidate& best) {
  if (!best.valid) return true;
  const double tol = 1e-12 * std::max(1.0, std::abs(best.gain));
  if (c.gain > best.gain + tol) return true;
  if (c.gain < best.gain - tol) return false;
  if (c.feature != best.feature) return c.feature < best.feature;
  return c.threshold < best.threshold;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const TreeParams& params, uint64_t seed)
      : data_(data),
        params_(params),
        rng_(seed),
        classification_(IsClassification(data.task())),
        num_classes_(data.num_classes()),
        features_(data.num_features()) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  Tree Build(std::span<const int> rows) {
    // Collapse the multiset into distinct rows with multiplicities.
    std::vector<int> sorted(rows.begin(), rows.end());
    std::sort(sorted.begin(), sorted.end());
    for (const int r : sorted) {
      if (r < 0 || r >= data_.num_rows()) throw TreeError("row index out of range");
      if (!samples_.empty() && samples_.back() == r) {
        weights_.back() += 1.0;
      } else {
        samples_.push_back(r);
        weights_.push_back(1.0);
      }
    }
    struct Pending {
      int node;
      int begin;
      int end;
      int depth;
    };
    nodes_.emplace_back();
    std::vector<Pending> stack = {{0, 0, static_cast<int>(samples_.size()), 0}};
    while (!stack.empty()) {
      const Pending job = stack.back();
      stack.pop_back();
      int mid = 0;
      if (SplitNode(job.node, job.begin, job.end, job.depth, &mid)) {
        const int left = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        nodes_.emplace_back();
        nodes_[job.node].left = left;
        nodes_[job.node].right = left + 1;
        // Right first on the stack so the left subtree is grown first.
        stack.push_back({left + 1, mid, job.end, job.depth + 1});
        stack.push_back({left, job.begin, mid, job.depth + 1});
      }
    }
    return Tree(data_.task(), num_classes_, FeatureLevels(data_), std::move(nodes_),
                std::move(level_directions_));
  }

 private:
  // Either turns `node` into a leaf (returns false) or records its split and
  // partitions samples_[begin, end) so that the left child is [begin, mid).
  bool SplitNode(int node_id, int begin, int end, int depth, int* mid) {
    double weight = 0.0;
    std::vector<double> class_weight(classification_ ? num_classes_ : 0, 0.0);
    double sum = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
    for (int s = begin; s < end; ++s) {
      const double y = data_.response()[samples_[s]];
      const double w = weights_[s];
      weight += w;
      if (classification_) {
        class_weight[static_cast<int>(y)] += w;
      } else {
        sum += w * y;
        if (s == begin || y < y_min) y_min = y;
        if (s == begin || y > y_max) y_max = y;
      }
    }
    nodes_[node_id].weight = weight;
    bool pure;
    if (classification_) {
      pure = std::count_if(class_weight.begin(), class_weight.end(),
                           [](double c) { return c > 0.0; }) <= 1;
    } else {
      pure = y_min == y_max;
    }
    const bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
    if (pure || depth_capped || weight <= params_.min_node_size) {
      MakeLeaf(node_id, weight, class_weight, sum);
      return false;
    }

    // Draw mtry candidate features without replacement.
    const int p = static_cast<int>(features_.size());
    for (int k = 0; k < params_.mtry; ++k) {
      const int pick = k + static_cast<int>(UniformIndex(rng_, p - k));
      std::swap(features_[k], features_[pick]);
    }
    Candidate best;
    for (int k = 0; k < params_.mtry; ++k) {
      const int feature = features_[k];
      Candidate c = data_.column(feature).kind == FeatureKind::kNumeric
                        ? BestNumericSplit(feature, begin, end, class_weight, sum, weight)
                        : BestCategoricalSplit(feature, begin, end, class_weight,
                                               sum, weight);
      if (c.valid && Better(c, best)) best = std::move(c);
    }
    const double impurity =
        classification_ ? weight - SumSquaresOver(class_weight, weight)
                        : NodeRss(begin, end, sum / weight);
    if (!best.valid || best.gain <= 1e-12 * std::max(impurity, 1e-300)) {
      MakeLeaf(node_id, weight, class_weight, sum);
      return false;
    }

    TreeNode& node = nodes_[node_id];
    node.feature = best.feature;
    node.gain = best.gain;
    if (best.directions.empty()) {
      node.value = best.threshold;
    } else {
      node.levels_offset = static_cast<int32_t>(level_directions_.size());
      node.default_left = best.default_left;
      level_directions_.insert(level_directions_.end(), best.directions.begin(),
                               best.directions.end());
    }
    // Stable partition keeps the sample order deterministic.
    std::vector<int> left_s, right_s;
    std::vector<double> left_w, right_w;
    for (int s = begin; s < end; ++s) {
      const double x = data_.feature(samples_[s], best.feature);
      const bool go_left =
          best.directions.empty()
              ? x <= best.threshold
              : best.directions[static_cast<int>(x)] == LevelDirection::kLeft;
      (go_left ? left_s : right_s).push_back(samples_[s]);
      (go_left ? left_w : right_w).push_back(weights_[s]);
    }
    std::copy(left_s.begin(), left_s.end(), samples_.begin() + begin);
    std::copy(right_s.begin(), right_s.end(),
              samples_.begin() + begin + left_s.size());
    std::copy(left_w.begin(), left_w.end(), weights_.begin() + begin);
    std::copy(right_w.begin(), right_w.end(),
              weights_.begin() + begin + left_w.size());
    *mid = begin + static_cast<int>(left_s.size());
    return true;
  }

  static double SumSquaresOver(const std::vector<double>& counts, double total) {
    double s = 0.0;
    for (const double c : counts) s += c * c;
    return s / total;
  }

  double NodeRss(int begin, int end, double mean) const {
    double rss = 0.0;
    for (int s = begin; s < end; ++s) {
      const double d = data_.response()[samples_[s]] - mean;
      rss += weights_[s] * d * d;
    }
    return rss;
  }

  void MakeLeaf(int node_id, double weight, const std::vector<double>& class_weight,
                double sum) {
    TreeNode& node = nodes_[node_id];
    if (!classification_) {
      node.value = sum / weight;
      return;
    }
    const double top = *std::max_element(class_weight.begin(), class_weight.end());
    std::vector<int> tied;
    for (int k = 0; k < num_classes_; ++k) {
      if (class_weight[k] == top) tied.push_back(k);
    }
    node.value = tied.size() == 1 ? tied[0] : tied[UniformIndex(rng_, tied.size())];
  }

  Candidate BestNumericSplit(int feature, int begin, int end,
                             const std::vector<double>& node_classes,
                             double node_sum, double node_weight) {
    order_.clear();
    for (int s = begin; s < end; ++s) {
      order_.emplace_back(data_.feature(samples_[s], feature), s);
    }
    std::sort(order_.begin(), order_.end());
    Candidate best;
    best.feature = feature;
    if (order_.front().first == order_.back().first) return best;

    const double parent_score =
        classification_ ? SumSquaresOver(node_classes, node_weight)
                        : node_sum * node_sum / node_weight;
    std::vector<double> left_classes(classification_ ? num_classes_ : 0, 0.0);
    double left_weight = 0.0;
    double left_sum = 0.0;
    for (size_t i = 0; i + 1 < order_.size(); ++i) {
      const int s = order_[i].second;
      const double w = weights_[s];
      const double y = data_.response()[samples_[s]];
      left_weight += w;
      if (classification_) {
        left_classes[static_cast<int>(y)] += w;
      } else {
        left_sum += w * y;
      }
      const double x = order_[i].first;
      const double x_next = order_[i + 1].first;
      if (x == x_next) continue;
      const double right_weight = node_weight - left_weight;
      double score;
      if (classification_) {
        double left_sq = 0.0;
        double right_sq = 0.0;
        for (int k = 0; k < num_classes_; ++k) {
          const double r = node_classes[k] - left_classes[k];
          left_sq += left_classes[k] * left_classes[k];
          right_sq += r * r;
        }
        score = left_sq / left_weight + right_sq / right_weight;
      } else {
        const double right_sum = node_sum - left_sum;
        score = left_sum * left_sum / left_weight +
                right_sum * right_sum / right_weight;
      }
      const double gain = score - parent_score;
      if (!best.valid || gain > best.gain + 1e-12 * std::max(1.0, std::abs(best.gain))) {
        best.valid = true;
        best.gain = gain;
        double threshold = 0.5 * (x + x_next);
        if (threshold >= x_next) threshold = x;
        best.threshold = threshold;
      }
    }
    return best;
  }

  // Binary classification and regression: levels ordered by mean response,
  // then searched as an ordinal feature. Multiclass: one level versus rest.
  Candidate BestCategoricalSplit(int feature, int begin, int end,
                                 const std::vector<double>& node_classes,
                                 double node_sum, double node_weight) {
    const int num_levels = data_.column(feature).num_levels();
    std::vector<double> level_weight(num_levels, 0.0);
    std::vector<double> level_sum(num_levels, 0.0);  // regression / class 1
    std::vector<double> level_classes(
        classification_ ? static_cast<size_t>(num_levels) * num_classes_ : 0, 0.0);
    for (int s = begin; s < end; ++s) {
      const int level = static_cast<int>(data_.feature(samples_[s], feature));
      const double y = data_.response()[samples_[s]];
      const double w = weights_[s];
      level_weight[level] += w;
      if (classification_) {
        level_classes[static_cast<size_t>(level) * num_classes_ + static_cast<int>(y)] += w;
        if (static_cast<int>(y) == 1) level_sum[level] += w;
      } else {
        level_sum[level] += w * y;
      }
    }
    std::vector<int> present;
    for (int l = 0; l < num_levels; ++l) {
      if (level_weight[l] > 0.0) present.push_back(l);
    }
    Candidate best;
    best.feature = feature;
    if (present.size() < 2) return best;

    const double parent_score =
        classification_ ? SumSquaresOver(node_classes, node_weight)
                        : node_sum * node_sum / node_weight;
    auto score_of = [&](const std::vector<double>& left_classes, double left_weight,
                        double left_sum) {
      const double right_weight = node_weight - left_weight;
      if (classification_) {
        double left_sq = 0.0;
        double right_sq = 0.0;
        for (int k = 0; k < num_classes_; ++k) {
          const double r = node_classes[k] - left_classes[k];
          left_sq += left_classes[k] * left_classes[k];
          right_sq += r * r;
        }
        return left_sq / left_weight + right_sq / right_weight;
      }
      const double right_sum = node_sum - left_sum;
      return left_sum * left_sum / left_weight + right_sum * right_sum / right_weight;
    };

    auto make_directions = [&](const std::vector<int>& left_levels, double left_weight) {
      std::vector<LevelDirection> dirs(num_levels, LevelDirection::kUnseen);
      for (const int l : present) dirs[l] = LevelDirection::kRight;
      for (const int l : left_levels) dirs[l] = LevelDirection::kLeft;
      best.directions = std::move(dirs);
      // Unseen levels follow the child that received more training weight.
      best.default_left = left_weight > node_weight - left_weight;
    };

    const bool ordered = data_.task() != TaskKind::kMulticlassClassification;
    if (ordered) {
      std::vector<int> order = present;
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return level_sum[a] / level_weight[a] < level_sum[b] / level_weight[b];
      });
      std::vector<double> left_classes(classification_ ? num_classes_ : 0, 0.0);
      double left_weight = 0.0;
      double left_sum = 0.0;
      for (size_t i = 0; i + 1 < order.size(); ++i) {
        const int l = order[i];
        left_weight += level_weight[l];
        left_sum += level_sum[l];
        for (int k = 0; k < static_cast<int>(left_classes.size()); ++k) {
          left_classes[k] += level_classes[static_cast<size_t>(l) * num_classes_ + k];
        }
        const double gain = score_of(left_classes, left_weight, left_sum) - parent_score;
        if (!best.valid || gain > best.gain + 1e-12 * std::max(1.0, std::abs(best.gain))) {
          best.valid = true;
          best.gain = gain;
          best.threshold = static_cast<double>(i);
          make_directions(std::vector<int>(order.begin(), order.begin() + i + 1),
                          left_weight);
        }
      }
    } else {
      for (size_t i = 0; i < present.size(); ++i) {
        const int l = present[i];
        std::vector<double> left_classes(
            level_classes.begin() + static_cast<size_t>(l) * num_classes_,
            level_classes.begin() + static_cast<size_t>(l + 1) * num_classes_);
        const double gain =
            score_of(left_classes, level_weight[l], level_sum[l]) - parent_score;
        if (!best.valid || gain > best.gain + 1e-12 * std::max(1.0, std::abs(best.gain))) {
          best.valid = true;
          best.gain = gain;
          best.threshold = static_cast<double>(i);
          make_directions({l}, level_weight[l]);
        }
      }
    }
    return best;
  }

  const Dataset& data_;
  const TreeParams& params_;
  RandomEngine rng_;
  const bool classification_;
  const int num_classes_;
  std::vector<int> features_;
  std::vector<int> samples_;
  std::vector<double> weights_;
  std::vector<std::pair<double, int>> order_;
  std::vector<TreeNode> nodes_;
  std::vector<LevelDirection> level_directions_;
};

}  // namespace

Tree TrainTree(const Dataset& data, std::span<const int> rows,
               const TreeParams& params, uint64_t seed) {
  if (rows.empty()) throw TreeError("cannot train a tree on an empty row list");
  const TreeParams resolved = ResolveTreeParams(params, data);
  TreeBuilder builder(data, resolved, seed);
  return builder.Build(rows);
}

}  // namespace oobcurve
