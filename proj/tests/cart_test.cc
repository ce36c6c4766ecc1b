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

#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "oobcurve/dataset.h"

namespace oobcurve {
namespace {

Dataset Numeric(const std::vector<std::vector<double>>& cols, std::vector<double> y,
                TaskKind task) {
  std::vector<ColumnSpec> specs;
  std::vector<double> features;
  for (size_t j = 0; j < cols.size(); ++j) {
    specs.push_back({"x" + std::to_string(j), FeatureKind::kNumeric, {}});
    features.insert(features.end(), cols[j].begin(), cols[j].end());
  }
  std::vector<std::string> labels;
  if (task != TaskKind::kRegression) {
    const int k = static_cast<int>(*std::max_element(y.begin(), y.end())) + 1;
    for (int c = 0; c < std::max(k, 2); ++c) labels.push_back(std::to_string(c));
  }
  return Dataset(std::move(specs), std::move(features), std::move(y), task,
                 std::move(labels), "y");
}

// Reference greedy CART: every feature, every midpoint, impurity computed from
// scratch. Equal gains keep the first candidate (lowest feature, then lowest
// threshold).
class OracleTree {
 public:
  OracleTree(const Dataset& data, int min_node_size) : data_(data), min_(min_node_size) {
    std::vector<int> rows(data.num_rows());
    std::iota(rows.begin(), rows.end(), 0);
    root_ = Grow(rows);
  }

  double Predict(const std::vector<double>& row) const {
    const Node* n = root_.get();
    while (n->feature >= 0) {
      n = row[n->feature] <= n->threshold ? n->left.get() : n->right.get();
    }
    return n->value;
  }

 private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    std::unique_ptr<Node> left, right;
  };

  bool classification() const { return data_.task() != TaskKind::kRegression; }

  // n * Gini for classes, residual sum of squares otherwise.
  double Impurity(const std::vector<int>& rows) const {
    if (rows.empty()) return 0.0;
    if (classification()) {
      std::vector<double> counts(data_.num_classes(), 0.0);
      for (int r : rows) counts[data_.label(r)] += 1.0;
      double gini = 1.0;
      for (double c : counts) gini -= (c / rows.size()) * (c / rows.size());
      return rows.size() * gini;
    }
    double mean = 0.0;
    for (int r : rows) mean += data_.response()[r];
    mean /= rows.size();
    double rss = 0.0;
    for (int r : rows) rss += std::pow(data_.response()[r] - mean, 2);
    return rss;
  }

  std::unique_ptr<Node> Grow(const std::vector<int>& rows) {
    auto node = std::make_unique<Node>();
    const double parent = Impurity(rows);
    if (classification()) {
      std::vector<int> counts(data_.num_classes(), 0);
      for (int r : rows) ++counts[data_.label(r)];
      node->value = std::max_element(counts.begin(), counts.end()) - counts.begin();
    } else {
      for (int r : rows) node->value += data_.response()[r];
      node->value /= rows.size();
    }
    if (parent <= 1e-12 || static_cast<int>(rows.size()) <= min_) return node;
    double best_gain = -1.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (int j = 0; j < data_.num_features(); ++j) {
      std::vector<double> xs;
      for (int r : rows) xs.push_back(data_.feature(r, j));
      std::sort(xs.begin(), xs.end());
      xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
      for (size_t i = 0; i + 1 < xs.size(); ++i) {
        const double threshold = 0.5 * (xs[i] + xs[i + 1]);
        std::vector<int> left, right;
        for (int r : rows) (data_.feature(r, j) <= threshold ? left : right).push_back(r);
        const double gain = parent - Impurity(left) - Impurity(right);
        if (best_feature < 0 || gain > best_gain + 1e-12 * std::max(1.0, std::abs(best_gain))) {
          best_gain = gain;
          best_feature = j;
          best_threshold = threshold;
        }
      }
    }
    if (best_feature < 0 || best_gain <= 1e-12 * parent) return node;
    std::vector<int> left, right;
    for (int r : rows) {
      (data_.feature(r, best_feature) <= best_threshold ? left : right).push_back(r);
    }
    node->feature = best_feature;
    node->threshold = best_threshold;
    node->left = Grow(left);
    node->right = Grow(right);
    return node;
  }

  const Dataset& data_;
  int min_;
  std::unique_ptr<Node> root_;
};

std::vector<int> AllRows(const Dataset& d) {
  std::vector<int> rows(d.num_rows());
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

TEST(TrainTreeTest, SeparableOneFeature) {
  const Dataset d = Numeric({{1, 2, 3, 4}}, {0, 0, 1, 1}, TaskKind::kBinaryClassification);
  TreeParams params;
  params.mtry = 1;
  const Tree tree = TrainTree(d, AllRows(d), params, 1);
  ASSERT_EQ(tree.num_leaves(), 2);
  const TreeNode& root = tree.nodes()[0];
  EXPECT_EQ(root.feature, 0);
  EXPECT_GT(root.value, 2.0);
  EXPECT_LT(root.value, 3.0);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(tree.PredictRow(d, i), d.label(i));
  EXPECT_EQ(tree.Predict(std::vector<double>{1.5}), 0.0);
  const OracleTree oracle(d, 1);
  EXPECT_EQ(tree.Predict(std::vector<double>{2.5}),
            oracle.Predict({2.5}));
}

TEST(TrainTreeTest, ConstantResponseIsSingleLeaf) {
  const Dataset d = Numeric({{1, 2, 3, 4, 5, 6, 7}}, {5, 5, 5, 5, 5, 5, 5},
                            TaskKind::kRegression);
  const Tree tree = TrainTree(d, AllRows(d), TreeParams(), 3);
  ASSERT_EQ(tree.num_leaves(), 1);
  EXPECT_EQ(tree.Predict(std::vector<double>{100.0}), 5.0);
}

TEST(TrainTreeTest, MatchesExhaustiveOracleClassification) {
  const GeneratorSpec spec = ParseGeneratorSpec("two-gaussians(n=120,p=4,sep=1)");
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset train = Synthesize(spec, seed);
    const Dataset test = Synthesize(spec, seed + 1000);
    TreeParams params;
    params.mtry = train.num_features();
    const Tree tree = TrainTree(train, AllRows(train), params, seed);
    const OracleTree oracle(train, 1);
    for (int i = 0; i < test.num_rows(); ++i) {
      ASSERT_EQ(tree.PredictRow(test, i), oracle.Predict(test.row(i))) << "seed " << seed;
    }
  }
}

TEST(TrainTreeTest, MatchesExhaustiveOracleRegression) {
  const GeneratorSpec spec = ParseGeneratorSpec("linear-regression(n=120,p=3,noise=1)");
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset train = Synthesize(spec, seed);
    const Dataset test = Synthesize(spec, seed + 1000);
    TreeParams params;
    params.mtry = train.num_features();
    const Tree tree = TrainTree(train, AllRows(train), params, seed);
    const OracleTree oracle(train, 5);
    for (int i = 0; i < test.num_rows(); ++i) {
      ASSERT_NEAR(tree.PredictRow(test, i), oracle.Predict(test.row(i)), 1e-9);
    }
  }
}

TEST(TrainTreeTest, HoldoutErrorOnSeparatedGaussians) {
  // Average single-tree hold-out error over 100 seeds, for the tree and the
  // oracle (which sees every feature).
  const GeneratorSpec spec = ParseGeneratorSpec("two-gaussians(n=200,p=5,sep=3)");
  double tree_error = 0.0;
  double oracle_error = 0.0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const Dataset train = Synthesize(spec, seed);
    const Dataset test = Synthesize(spec, seed + 5000);
    const Tree tree = TrainTree(train, AllRows(train), TreeParams(), seed);
    const OracleTree oracle(train, 1);
    for (int i = 0; i < test.num_rows(); ++i) {
      tree_error += tree.PredictRow(test, i) != test.label(i);
      oracle_error += oracle.Predict(test.row(i)) != test.label(i);
    }
  }
  EXPECT_LT(tree_error / (100.0 * 200), 0.15);
  EXPECT_LT(oracle_error / (100.0 * 200), 0.15);
}

TEST(TrainTreeTest, PureLeavesFitTrainingData) {
  const Dataset d = Synthesize(ParseGeneratorSpec("two-gaussians(n=150,p=3,sep=0.5)"), 4);
  TreeParams params;
  params.mtry = d.num_features();
  const Tree tree = TrainTree(d, AllRows(d), params, 4);
  for (int i = 0; i < d.num_rows(); ++i) EXPECT_EQ(tree.PredictRow(d, i), d.label(i));
}

TEST(TrainTreeTest, BootstrapMultiplicityActsAsWeight) {
  const Dataset d = Numeric({{1, 2, 3}}, {0, 1, 1}, TaskKind::kRegression);
  TreeParams params;
  params.min_node_size = 10;  // never split
  const std::vector<int> rows = {0, 0, 0, 1};
  const Tree tree = TrainTree(d, rows, params, 1);
  EXPECT_DOUBLE_EQ(tree.Predict(std::vector<double>{2.0}), 0.25);
}

TEST(TrainTreeTest, MaxDepthCaps) {
  const Dataset d = Synthesize(ParseGeneratorSpec("two-gaussians(n=200,p=3,sep=0.5)"), 8);
  TreeParams params;
  params.max_depth = 2;
  EXPECT_LE(TrainTree(d, AllRows(d), params, 1).depth(), 2);
}

TEST(TrainTreeTest, CategoricalSplitSeparatesLevels) {
  const Dataset d = ParseCsv("c,y\nred,0\nblue,1\nred,0\ngreen,1\nblue,1\nred,0\n", "y");
  TreeParams params;
  params.mtry = 1;
  const Tree tree = TrainTree(d, AllRows(d), params, 2);
  for (int i = 0; i < d.num_rows(); ++i) EXPECT_EQ(tree.PredictRow(d, i), d.label(i));
}

TEST(TrainTreeTest, Deterministic) {
  const Dataset d = Synthesize(ParseGeneratorSpec("two-gaussians(n=100,p=6,sep=1)"), 1);
  EXPECT_EQ(TrainTree(d, AllRows(d), TreeParams(), 42),
            TrainTree(d, AllRows(d), TreeParams(), 42));
}

TEST(TrainTreeTest, InvalidParameters) {
  const Dataset d = Numeric({{1, 2}}, {0, 1}, TaskKind::kBinaryClassification);
  TreeParams params;
  params.mtry = 3;
  EXPECT_THROW(TrainTree(d, AllRows(d), params, 1), TreeError);
  EXPECT_THROW(TrainTree(d, std::vector<int>{}, TreeParams(), 1), TreeError);
}

TEST(ResolveTreeParamsTest, TaskDefaults) {
  const Dataset c = Synthesize(ParseGeneratorSpec("two-gaussians(n=10,p=10,sep=1)"), 1);
  const TreeParams pc = ResolveTreeParams(TreeParams(), c);
  EXPECT_EQ(pc.mtry, 3);
  EXPECT_EQ(pc.min_node_size, 1);
  const Dataset r = Synthesize(ParseGeneratorSpec("linear-regression(n=10,p=10,noise=1)"), 1);
  const TreeParams pr = ResolveTreeParams(TreeParams(), r);
  EXPECT_EQ(pr.mtry, 3);
  EXPECT_EQ(pr.min_node_size, 5);
}

}  // namespace
}  // namespace oobcurve
