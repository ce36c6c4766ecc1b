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

#include "oobcurve/forest.h"

#include <cmath>
#include <filesystem>
#include <numeric>

#include <gtest/gtest.h>

#include "oobcurve/dataset.h"

namespace oobcurve {
namespace {

Dataset Gaussians(int n, uint64_t seed = 1) {
  return Synthesize(ParseGeneratorSpec("two-gaussians(n=" + std::to_string(n) +
                                       ",p=5,sep=1)"),
                    seed);
}

TEST(TrainForestTest, SingleTreeOobFraction) {
  const Dataset d = Gaussians(200);
  double oob = 0.0;
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    const Forest f = TrainForest(d, 1, ForestParams(), seed);
    ASSERT_EQ(f.num_trees(), 1);
    oob += f.num_oob(0);
  }
  const double expected = std::pow(1.0 - 1.0 / 200, 200);
  // One tree's OOB fraction has sd ~0.034; the mean over 1000 has ~0.0011.
  EXPECT_NEAR(oob / (1000.0 * 200), expected, 0.005);
}

TEST(TrainForestTest, IndependentOfThreadCount) {
  const Dataset d = Gaussians(120);
  const Forest one = TrainForest(d, 40, ForestParams(), 9, 1);
  const Forest eight = TrainForest(d, 40, ForestParams(), 9, 8);
  EXPECT_EQ(one, eight);
  for (int t = 0; t < one.num_trees(); ++t) {
    ASSERT_TRUE(std::equal(one.inbag(t).begin(), one.inbag(t).end(), eight.inbag(t).begin()));
  }
}

TEST(TrainForestTest, EveryRowOobAtTwoThousandTrees) {
  const Dataset d = Gaussians(200);
  const Forest f = TrainForest(d, 2000, ForestParams(), 3);
  const VoteMatrix votes = OobVotesPrefix(f, d, 2000);
  for (int i = 0; i < d.num_rows(); ++i) EXPECT_GE(votes.oob_count(i), 1);
}

TEST(TrainForestTest, BootstrapHasSizeN) {
  const Dataset d = Gaussians(50);
  const Forest f = TrainForest(d, 5, ForestParams(), 1);
  for (int t = 0; t < 5; ++t) {
    int total = 0;
    for (uint16_t m : f.inbag(t)) total += m;
    EXPECT_EQ(total, 50);
  }
}

TEST(TrainForestTest, SubsamplingWithoutReplacement) {
  const Dataset d = Gaussians(50);
  ForestParams params;
  params.replace = false;
  params.sample_fraction = 0.5;
  const Forest f = TrainForest(d, 5, params, 1);
  for (int t = 0; t < 5; ++t) {
    int total = 0;
    for (uint16_t m : f.inbag(t)) {
      EXPECT_LE(m, 1);
      total += m;
    }
    EXPECT_EQ(total, 25);
  }
}

TEST(TrainForestTest, PrefixesShareFingerprint) {
  const Dataset d = Gaussians(60);
  const Forest a = TrainForest(d, 10, ForestParams(), 5);
  const Forest b = TrainForest(d, 20, ForestParams(), 5);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  for (int t = 0; t < 10; ++t) EXPECT_EQ(a.tree(t), b.tree(t));
  EXPECT_NE(a.fingerprint(), TrainForest(d, 10, ForestParams(), 6).fingerprint());
}

TEST(OobVotesTest, FirstPrefixIsFirstTree) {
  const Dataset d = Gaussians(80);
  const Forest f = TrainForest(d, 5, ForestParams(), 2);
  const VoteMatrix v = OobVotesPrefix(f, d, 1);
  const std::vector<double> preds = PredictTree(f.tree(0), d);
  for (int i = 0; i < d.num_rows(); ++i) {
    const bool oob = f.is_oob(0, i);
    EXPECT_EQ(v.oob_count(i), oob ? 1 : 0);
    for (int k = 0; k < 2; ++k) {
      EXPECT_EQ(v.votes(i, k), oob && preds[i] == k ? 1 : 0);
    }
  }
}

TEST(OobVotesTest, IncrementalEqualsScratch) {
  const Dataset d = Gaussians(100);
  const Forest f = TrainForest(d, 150, ForestParams(), 4);
  const VoteMatrix prior = OobVotesPrefix(f, d, 136);
  EXPECT_EQ(OobVotesPrefix(f, d, 137, &prior), OobVotesPrefix(f, d, 137));
}

TEST(OobVotesTest, VoteCountIdentity) {
  const Dataset d = Gaussians(100);
  const Forest f = TrainForest(d, 60, ForestParams(), 8);
  const VoteMatrix v = OobVotesPrefix(f, d, 60);
  int64_t votes = 0;
  for (int i = 0; i < d.num_rows(); ++i) {
    for (int k = 0; k < 2; ++k) votes += v.votes(i, k);
  }
  int64_t oob = 0;
  for (int t = 0; t < 60; ++t) oob += f.num_oob(t);
  EXPECT_EQ(votes, oob);
}

TEST(OobVotesTest, StreamingMatchesStoredForest) {
  const Dataset d = Gaussians(90);
  const Forest f = TrainForest(d, 300, ForestParams(), 12);
  EXPECT_EQ(StreamOobVotes(d, 300, ForestParams(), 12, 1), OobVotesPrefix(f, d, 300));
  EXPECT_EQ(StreamOobVotes(d, 300, ForestParams(), 12, 4), OobVotesPrefix(f, d, 300));
}

TEST(OobVotesTest, RegressionSums) {
  const Dataset d = Synthesize(ParseGeneratorSpec("linear-regression(n=60,p=3,noise=1)"), 1);
  const Forest f = TrainForest(d, 30, ForestParams(), 1);
  const VoteMatrix v = OobVotesPrefix(f, d, 30);
  std::vector<double> sums(d.num_rows(), 0.0);
  for (int t = 0; t < 30; ++t) {
    const std::vector<double> p = PredictTree(f.tree(t), d);
    for (int i = 0; i < d.num_rows(); ++i) {
      if (f.is_oob(t, i)) sums[i] += p[i];
    }
  }
  for (int i = 0; i < d.num_rows(); ++i) EXPECT_NEAR(v.sum(i), sums[i], 1e-9);
}

VoteMatrix OneRowVotes(const std::vector<int>& per_class) {
  VoteMatrix v(1, static_cast<int>(per_class.size()), 0);
  for (size_t k = 0; k < per_class.size(); ++k) {
    for (int c = 0; c < per_class[k]; ++c) {
      v.AddTree(std::vector<double>{static_cast<double>(k)}, {});
    }
  }
  return v;
}

TEST(PredictFromVotesTest, Majority) {
  const OobPredictions p = PredictFromVotes(OneRowVotes({3, 1}), 1);
  EXPECT_DOUBLE_EQ(p.probabilities[1], 0.25);
  EXPECT_EQ(p.labels[0], 0);
  EXPECT_EQ(p.num_undefined, 0);
}

TEST(PredictFromVotesTest, TiesSplitEvenlyOverSeeds) {
  const VoteMatrix v = OneRowVotes({2, 2});
  int ones = 0;
  for (uint64_t seed = 0; seed < 10000; ++seed) ones += PredictFromVotes(v, seed).labels[0];
  EXPECT_NEAR(ones / 10000.0, 0.5, 0.02);
}

TEST(PredictFromVotesTest, NoOobTreesIsUndefined) {
  VoteMatrix v(2, 2, 0);
  v.AddTree(std::vector<double>{1.0, 0.0}, std::vector<uint16_t>{0, 3});
  const OobPredictions p = PredictFromVotes(v, 1);
  EXPECT_EQ(p.num_undefined, 1);
  EXPECT_TRUE(p.defined[0]);
  EXPECT_FALSE(p.defined[1]);
  EXPECT_EQ(p.labels[1], kUndefinedLabel);
  EXPECT_TRUE(std::isnan(p.probabilities[2]));
}

TEST(SerializeForestTest, RoundTrip) {
  const Dataset d = ParseCsv("c,x,y\na,1,0\nb,2,1\na,3,0\nc,4,1\nb,5,1\na,6,0\n", "y");
  const Forest f = TrainForest(d, 7, ForestParams(), 21);
  EXPECT_EQ(DeserializeForest(SerializeForest(f)), f);
  const auto path = std::filesystem::temp_directory_path() / "oobcurve_forest_test.json";
  SaveForest(f, path.string());
  EXPECT_EQ(LoadForest(path.string()), f);
  std::filesystem::remove(path);
  EXPECT_THROW(DeserializeForest("{}"), std::exception);
}

}  // namespace
}  // namespace oobcurve
