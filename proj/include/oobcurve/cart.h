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

// Unpruned CART trees: Gini impurity for classification, residual sum of
// squares for regression, `mtry` random candidate features per split.

#ifndef OOBCURVE_CART_H_
#define OOBCURVE_CART_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "oobcurve/dataset.h"

namespace oobcurve {

class TreeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TreeParams {
  // 0 selects the task default: floor(sqrt(p)) for classification,
  // max(1, floor(p / 3)) for regression.
  int mtry = 0;
  // 0 selects the task default: 1 for classification, 5 for regression.
  // Nodes whose (bootstrap-weighted) size is <= min_node_size are not split.
  int min_node_size = 0;
  // 0 means no depth cap.
  int max_depth = 0;
};

// Fills task defaults and validates the ranges against `data`.
TreeParams ResolveTreeParams(const TreeParams& params, const Dataset& data);

// Split directions for categorical levels.
enum class LevelDirection : uint8_t { kRight = 0, kLeft = 1, kUnseen = 2 };

struct TreeNode {
  int32_t feature = -1;  // -1 marks a leaf.
  int32_t left = -1;
  int32_t right = -1;
  // Categorical splits: offset of the per-level directions in
  // Tree::level_directions(); -1 for numeric splits.
  int32_t levels_offset = -1;
  // Numeric split threshold (x <= value goes left) or leaf prediction.
  double value = 0.0;
  // Impurity decrease of the split, in bootstrap-weighted units: decrease of
  // n * Gini for classification, of the residual sum of squares otherwise.
  double gain = 0.0;
  // Bootstrap-weighted number of training rows that reached the node.
  double weight = 0.0;
  // Direction for categorical levels not present at training time.
  bool default_left = false;

  bool is_leaf() const { return feature < 0; }
};

class Tree {
 public:
  Tree() = default;
  // `feature_levels[j]` is the level count of categorical feature j and 0 for
  // numeric features.
  Tree(TaskKind task, int num_classes, std::vector<int32_t> feature_levels,
       std::vector<TreeNode> nodes, std::vector<LevelDirection> level_directions);

  // Class index (as a double) or regression value. `row` holds the p feature
  // values; categorical cells must be non-negative integer level indices.
  double Predict(std::span<const double> row) const;
  // Same as Predict() on row `row` of `data`, without copying it.
  double PredictRow(const Dataset& data, int row) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::vector<LevelDirection>& level_directions() const {
    return level_directions_;
  }
  const std::vector<int32_t>& feature_levels() const { return feature_levels_; }
  TaskKind task() const { return task_; }
  int num_classes() const { return num_classes_; }

  int num_leaves() const;
  int depth() const;

  bool operator==(const Tree& other) const;

 private:
  template <typename FeatureFn>
  double Descend(FeatureFn&& feature) const;

  TaskKind task_ = TaskKind::kRegression;
  int num_classes_ = 0;
  std::vector<int32_t> feature_levels_;
  std::vector<TreeNode> nodes_;
  std::vector<LevelDirection> level_directions_;
};

// Level count per feature as stored in trees (0 for numeric features).
std::vector<int32_t> FeatureLevels(const Dataset& data);

// Grows a tree on the multiset `rows` (duplicates act as bootstrap
// multiplicities). Tie-breaking among equal-gain splits prefers the lowest
// feature index, then the lowest threshold; leaf majority ties are broken
// uniformly at random from the tree's stream. Throws TreeError on an empty
// row list or invalid parameters.
Tree TrainTree(const Dataset& data, std::span<const int> rows,
               const TreeParams& params, uint64_t seed);

}  // namespace oobcurve

#endif  // OOBCURVE_CART_H_
