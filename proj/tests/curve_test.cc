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

#include "oobcurve/curve.h"

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "oobcurve/dataset.h"
#include "oobcurve/forest.h"
#include "oobcurve/measures.h"
#include "oobcurve/theory.h"

namespace oobcurve {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Curve MakeCurve(const std::string& measure, std::vector<double> values, int first_t = 1) {
  Curve c;
  c.measure = measure;
  c.values = std::move(values);
  for (size_t i = 0; i < c.values.size(); ++i) c.grid.push_back(first_t + static_cast<int>(i));
  UpdateFirstDefined(c);
  return c;
}

const std::vector<MeasureId> kClassification = {
    MeasureId::kErrorRate, MeasureId::kBalancedErrorRate, MeasureId::kBrier,
    MeasureId::kLogLoss, MeasureId::kAuc};

TEST(OobCurveTest, ErrorRateMatchesRecomputedVotes) {
  const Dataset d = Synthesize(ParseGeneratorSpec("two-gaussians(n=60,p=4,sep=1)"), 3);
  const Forest f = TrainForest(d, 40, ForestParams(), 17);
  const uint64_t tie_seed = 99;
  const std::vector<Curve> curves =
      ComputeOobCurves(f, d, std::vector<MeasureId>{MeasureId::kErrorRate}, tie_seed);
  const Curve& c = curves[0];
  ASSERT_GT(c.first_defined_t, 1);
  EXPECT_TRUE(std::isnan(c.at(c.first_defined_t - 1)));

  for (int t = c.first_defined_t; t <= 40; ++t) {
    // Votes tallied by hand from the trees and their in-bag counts.
    std::vector<std::array<int, 2>> votes(d.num_rows(), {0, 0});
    for (int s = 0; s < t; ++s) {
      const std::vector<double> pred = PredictTree(f.tree(s), d);
      for (int i = 0; i < d.num_rows(); ++i) {
        if (f.is_oob(s, i)) ++votes[i][static_cast<int>(pred[i])];
      }
    }
    const OobPredictions p =
        PredictFromVotes(OobVotesPrefix(f, d, t), PrefixTieSeed(tie_seed, t));
    int wrong = 0;
    for (int i = 0; i < d.num_rows(); ++i) {
      ASSERT_GT(votes[i][0] + votes[i][1], 0);
      if (votes[i][0] != votes[i][1]) {
        ASSERT_EQ(p.labels[i], votes[i][1] > votes[i][0] ? 1 : 0);
      }
      wrong += p.labels[i] != d.label(i);
    }
    EXPECT_DOUBLE_EQ(c.at(t), static_cast<double>(wrong) / d.num_rows()) << "T=" << t;
  }
}

TEST(OobCurveTest, PrefixConsistency) {
  const Dataset d = Synthesize(ParseGeneratorSpec("two-gaussians(n=80,p=4,sep=1)"), 5);
  const std::vector<Curve> full =
      ComputeOobCurves(TrainForest(d, 60, ForestParams(), 2), d, kClassification, 7);
  const std::vector<Curve> part =
      ComputeOobCurves(TrainForest(d, 35, ForestParams(), 2), d, kClassification, 7);
  for (size_t m = 0; m < full.size(); ++m) {
    for (int t = 1; t <= 35; ++t) {
      const double a = full[m].at(t);
      const double b = part[m].at(t);
      EXPECT_TRUE(a == b || (std::isnan(a) && std::isnan(b))) << full[m].measure << " T=" << t;
    }
  }
}

TEST(OobCurveTest, StreamingMatchesStoredForest) {
  const Dataset d = Synthesize(ParseGeneratorSpec("two-gaussians(n=70,p=3,sep=1)"), 1);
  const std::vector<Curve> stored =
      ComputeOobCurves(TrainForest(d, 50, ForestParams(), 4), d, kClassification, 8);
  EXPECT_EQ(StreamOobCurves(d, 50, ForestParams(), 4, kClassification, 8, 1), stored);
  EXPECT_EQ(StreamOobCurves(d, 50, ForestParams(), 4, kClassification, 8, 3), stored);
}

TEST(OobCurveTest, TieSeedOnlyAffectsLabelMeasures) {
  const Dataset d = Synthesize(ParseGeneratorSpec("two-gaussians(n=70,p=3,sep=1)"), 2);
  const Forest f = TrainForest(d, 30, ForestParams(), 4);
  const std::vector<Curve> a = ComputeOobCurves(f, d, kClassification, 1);
  const std::vector<Curve> b = ComputeOobCurves(f, d, kClassification, 2);
  for (size_t m = 2; m < a.size(); ++m) EXPECT_EQ(a[m].values.size(), b[m].values.size());
  for (size_t m = 2; m < a.size(); ++m) {
    for (size_t i = 0; i < a[m].values.size(); ++i) {
      const double x = a[m].values[i], y = b[m].values[i];
      EXPECT_TRUE(x == y || (std::isnan(x) && std::isnan(y)));
    }
  }
  const Dataset r = Synthesize(ParseGeneratorSpec("linear-regression(n=60,p=3,noise=1)"), 2);
  const std::vector<MeasureId> reg = {MeasureId::kMse, MeasureId::kMae};
  const Forest fr = TrainForest(r, 20, ForestParams(), 4);
  const std::vector<Curve> ra = ComputeOobCurves(fr, r, reg, 1);
  const std::vector<Curve> rb = ComputeOobCurves(fr, r, reg, 2);
  for (size_t m = 0; m < ra.size(); ++m) {
    EXPECT_EQ(std::vector<double>(ra[m].values.begin() + ra[m].first_defined_t - 1,
                                  ra[m].values.end()),
              std::vector<double>(rb[m].values.begin() + rb[m].first_defined_t - 1,
                                  rb[m].values.end()));
  }
}

TEST(OobCurveTest, MeasureTaskMismatch) {
  const Dataset d = Synthesize(ParseGeneratorSpec("linear-regression(n=30,p=2,noise=1)"), 1);
  const Forest f = TrainForest(d, 5, ForestParams(), 1);
  EXPECT_THROW(ComputeOobCurves(f, d, std::vector<MeasureId>{MeasureId::kBrier}, 1),
               std::exception);
}

TEST(OobCurveTest, MeanBrierCurveNonIncreasing) {
  const Dataset d = Synthesize(ParseGeneratorSpec("two-gaussians(n=200,p=5,sep=3)"), 1);
  std::vector<Curve> runs;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    runs.push_back(StreamOobCurves(d, 300, ForestParams(), seed,
                                   std::vector<MeasureId>{MeasureId::kBrier}, seed)[0]);
  }
  const Curve mean = AverageCurves(runs);
  for (int t = mean.first_defined_t; t < 300; ++t) {
    EXPECT_LE(mean.at(t + 1), mean.at(t) + 0.002) << "T=" << t;
  }
}

TEST(OobCurveTest, HoldoutCurvesUseEveryTree) {
  const GeneratorSpec spec = ParseGeneratorSpec("two-gaussians(n=80,p=3,sep=2)");
  const Dataset train = Synthesize(spec, 1);
  const Dataset test = Synthesize(spec, 2);
  const Forest f = TrainForest(train, 25, ForestParams(), 3);
  const std::vector<Curve> c =
      ComputeHoldoutCurves(f, test, std::vector<MeasureId>{MeasureId::kErrorRate}, 1);
  EXPECT_EQ(c[0].first_defined_t, 1);
  EXPECT_EQ(c[0].metadata.at("kind"), "holdout");
}

TEST(AverageCurvesTest, IdempotentAndMidpoint) {
  const Curve a = MakeCurve("brier", {0.4, 0.3, 0.2});
  const Curve b = MakeCurve("brier", {0.2, 0.1, 0.0});
  const std::vector<Curve> same = {a, a, a};
  EXPECT_EQ(AverageCurves(same).values, a.values);
  const std::vector<Curve> pair = {a, b};
  const Curve mid = AverageCurves(pair);
  EXPECT_DOUBLE_EQ(mid.at(2), 0.2);
  EXPECT_EQ(mid.metadata.at("runs"), "2");
}

TEST(AverageCurvesTest, DefinednessPolicies) {
  const Curve a = MakeCurve("brier", {kNaN, 0.3, 0.2});
  const Curve b = MakeCurve("brier", {kNaN, kNaN, 0.4});
  const std::vector<Curve> both = {a, b};
  const Curve all = AverageCurves(both, AveragePolicy::kAllDefined);
  EXPECT_TRUE(std::isnan(all.at(2)));
  EXPECT_EQ(all.first_defined_t, 3);
  EXPECT_DOUBLE_EQ(all.at(3), 0.3);
  const Curve any = AverageCurves(both, AveragePolicy::kAnyDefined);
  EXPECT_DOUBLE_EQ(any.at(2), 0.3);
  EXPECT_EQ(any.first_defined_t, 2);
}

TEST(AverageCurvesTest, Mismatches) {
  const std::vector<Curve> measures = {MakeCurve("brier", {0.1}), MakeCurve("auc", {0.1})};
  EXPECT_THROW(AverageCurves(measures), CurveError);
  const std::vector<Curve> grids = {MakeCurve("brier", {0.1}), MakeCurve("brier", {0.1}, 2)};
  EXPECT_THROW(AverageCurves(grids), CurveError);
  EXPECT_THROW(AverageCurves(std::vector<Curve>{}), CurveError);
}

TEST(NonmonotonicityTest, DecreasingCurveIsMonotone) {
  std::vector<double> v;
  for (int t = 1; t <= 300; ++t) v.push_back(0.3 + 1.0 / t);
  EXPECT_FALSE(AnalyzeNonmonotonicity(MakeCurve("error_rate", v)).is_nonmonotone);
}

TEST(NonmonotonicityTest, RiseAfterMinimum) {
  // 0.30 at T=10 down to 0.20 at T=60, then up to 0.21 at T=2000.
  std::vector<double> v(2000);
  for (int t = 1; t <= 2000; ++t) {
    v[t - 1] = t <= 60 ? 0.30 - 0.1 * (t - 10) / 50.0 : 0.20 + 0.01 * (t - 60) / 1940.0;
  }
  const NonmonotonicityReport r = AnalyzeNonmonotonicity(MakeCurve("error_rate", v));
  EXPECT_TRUE(r.is_nonmonotone);
  EXPECT_EQ(r.argmin_t, 60);
  EXPECT_DOUBLE_EQ(r.min_value, 0.20);
  EXPECT_NEAR(r.final_value, 0.21, 1e-15);
  EXPECT_NEAR(r.excess, 0.01, 1e-15);
  EXPECT_FALSE(AnalyzeNonmonotonicity(MakeCurve("error_rate", v), 10, 150, 0.02).is_nonmonotone);
}

TEST(NonmonotonicityTest, AnalyticMixtureCurve) {
  DifficultyVector d;
  d.epsilons = {0.05, 0.1, 0.15, 0.2, 0.55, 0.6};
  std::vector<int> grid(2000);
  std::iota(grid.begin(), grid.end(), 1);
  EXPECT_TRUE(AnalyzeNonmonotonicity(ExpectedErrorCurve(d, grid, false)).is_nonmonotone);
}

TEST(NonmonotonicityTest, HigherIsBetterIsMirrored) {
  std::vector<double> v(200);
  for (int t = 1; t <= 200; ++t) v[t - 1] = t <= 50 ? 0.7 + 0.002 * t : 0.8 - 0.0002 * (t - 50);
  const NonmonotonicityReport r = AnalyzeNonmonotonicity(MakeCurve("auc", v));
  EXPECT_TRUE(r.is_nonmonotone);
  EXPECT_EQ(r.argmin_t, 50);
}

TEST(NonmonotonicityTest, UndefinedWindow) {
  EXPECT_THROW(AnalyzeNonmonotonicity(MakeCurve("brier", std::vector<double>(200, kNaN))),
               CurveError);
}

TEST(ConvergenceTest, ConstantCurve) {
  const Curve c = MakeCurve("brier", {kNaN, kNaN, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2,
                                      0.2, 0.2, 0.2});
  const ConvergenceSummary s = SummarizeConvergence(c, 0.001);
  EXPECT_EQ(s.t_at_tolerance, 3);
  EXPECT_DOUBLE_EQ(s.effective_t, 3 * std::exp(-1.0));
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.gain, 0.0);
}

TEST(ConvergenceTest, ExpectedBrierInversion) {
  // 0.3 * 0.7 / T <= 0.001 first holds at T = 210.
  DifficultyVector d;
  d.epsilons = {0.3};
  std::vector<int> grid(1000000);
  std::iota(grid.begin(), grid.end(), 1);
  const Curve c = ExpectedCurve(d, grid, ExpectedMeasure::kBrier, false);
  const ConvergenceSummary s = SummarizeConvergence(c, 0.001);
  EXPECT_EQ(s.t_at_tolerance, 210);
  EXPECT_NEAR(s.gain, ExpectedBrier(0.3, 11) - ExpectedBrier(0.3, 1000000), 1e-15);
}

TEST(ConvergenceTest, NeverConverged) {
  std::vector<double> v;
  for (int t = 1; t <= 20; ++t) v.push_back(t % 2 ? 0.5 : 0.1);
  const ConvergenceSummary s = SummarizeConvergence(MakeCurve("brier", v), 0.01);
  EXPECT_FALSE(s.converged);
  EXPECT_EQ(s.t_at_tolerance, 20);
}

TEST(CurveCsvTest, RoundTrip) {
  Curve a = MakeCurve("brier", {kNaN, 0.25, 0.1 + 0.2});
  Curve b = MakeCurve("logloss", {kNaN, 0.7, 1.0 / 3.0});
  a.metadata["dataset"] = b.metadata["dataset"] = "toy";
  const std::vector<Curve> curves = {a, b};
  const std::string text = FormatCurvesCsv(curves);
  EXPECT_NE(text.find("#dataset=toy"), std::string::npos);
  EXPECT_NE(text.find("NA"), std::string::npos);
  EXPECT_EQ(ParseCurvesCsv(text), curves);
  const auto path = std::filesystem::temp_directory_path() / "oobcurve_curve_test.csv";
  WriteCurvesCsv(curves, path.string());
  EXPECT_EQ(ReadCurvesCsv(path.string()), curves);
  std::filesystem::remove(path);
  EXPECT_THROW(ParseCurvesCsv("T,brier\n1,abc\n"), CurveError);
}

TEST(ThinCurveTest, KeepsGridPoints) {
  const Curve c = MakeCurve("brier", {0.5, 0.4, 0.3, 0.2});
  const Curve thin = ThinCurve(c, std::vector<int>{2, 4});
  EXPECT_EQ(thin.grid, (std::vector<int>{2, 4}));
  EXPECT_EQ(thin.values, (std::vector<double>{0.4, 0.2}));
  EXPECT_THROW(ThinCurve(c, std::vector<int>{9}), CurveError);
}

}  // namespace
}  // namespace oobcurve
