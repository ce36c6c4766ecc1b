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

#include "oobcurve/correlation.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace oobcurve {
namespace {

using Reals = std::vector<double>;

std::optional<double> PairwiseTauB(const Reals& x, const Reals& y) {
  int64_t c = 0, d = 0, tx = 0, ty = 0;
  const int64_t n = static_cast<int64_t>(x.size());
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = i + 1; j < n; ++j) {
      const double sx = (x[i] > x[j]) - (x[i] < x[j]);
      const double sy = (y[i] > y[j]) - (y[i] < y[j]);
      tx += sx == 0;
      ty += sy == 0;
      c += sx * sy > 0;
      d += sx * sy < 0;
    }
  }
  const int64_t n0 = n * (n - 1) / 2;
  if (tx == n0 || ty == n0) return std::nullopt;
  return static_cast<double>(c - d) /
         std::sqrt(static_cast<double>(n0 - tx) * static_cast<double>(n0 - ty));
}

Curve MakeCurve(const std::string& measure, Reals values) {
  Curve c;
  c.measure = measure;
  c.values = std::move(values);
  for (size_t i = 0; i < c.values.size(); ++i) c.grid.push_back(static_cast<int>(i) + 1);
  UpdateFirstDefined(c);
  return c;
}

TEST(PearsonTest, SelfNegationAndConstant) {
  const Reals x = {0.3, 0.1, 0.7, 0.2};
  Reals neg;
  for (double v : x) neg.push_back(-v);
  EXPECT_DOUBLE_EQ(*Pearson(x, x), 1.0);
  EXPECT_DOUBLE_EQ(*Pearson(x, neg), -1.0);
  EXPECT_FALSE(Pearson(x, Reals(4, 2.0)).has_value());
  EXPECT_THROW(Pearson(Reals{1}, Reals{1}), CorrelationError);
}

TEST(PearsonTest, KnownValue) {
  // Sxy = 2, Sxx = 2, Syy = 8/3.
  EXPECT_NEAR(*Pearson(Reals{1, 2, 3}, Reals{1, 3, 2}), 0.5, 1e-15);
}

TEST(KendallTest, SelfAndNegation) {
  const Reals x = {5, 1, 4, 4, 2};
  Reals neg;
  for (double v : x) neg.push_back(-v);
  EXPECT_DOUBLE_EQ(*KendallTauB(x, x), 1.0);
  EXPECT_DOUBLE_EQ(*KendallTauB(x, neg), -1.0);
  EXPECT_FALSE(KendallTauB(x, Reals(5, 1.0)).has_value());
}

TEST(KendallTest, CountsMatchPairEnumeration) {
  const Reals x = {1, 2, 2, 3, 3, 3};
  const Reals y = {2, 1, 1, 3, 2, 3};
  const KendallCounts k = CountKendallPairs(x, y);
  EXPECT_EQ(k.pairs, 15);
  EXPECT_EQ(k.ties_x, 4);
  EXPECT_EQ(k.ties_y, 3);
  // Concordant 8, discordant 2.
  EXPECT_EQ(k.concordant_minus_discordant, 6);
}

TEST(KendallTest, MatchesPairwiseOnRandomGrids) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 3 + static_cast<int>(rng() % 498);
    const int levels = 2 + static_cast<int>(rng() % 40);
    Reals x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng() % levels);
      y[i] = static_cast<double>(rng() % levels) * 0.5;
    }
    ASSERT_EQ(KendallTauB(x, y), PairwiseTauB(x, y)) << "rep " << rep;
  }
}

TEST(CorrelateCurvesTest, MatrixAgainstOracles) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.01);
  Reals a, b, c;
  for (int t = 1; t <= 600; ++t) {
    a.push_back(0.2 + 1.0 / t + noise(rng));
    b.push_back(0.1 + 0.5 / t + noise(rng));
    c.push_back(0.9 - 1.0 / t + noise(rng));
  }
  const std::vector<Curve> curves = {MakeCurve("error_rate", a), MakeCurve("brier", b),
                                     MakeCurve("auc", c)};
  const CorrelationMatrix m = CorrelateCurves(curves, 500);
  EXPECT_EQ(m.num_points, 500);
  const Reals a5(a.begin(), a.begin() + 500), b5(b.begin(), b.begin() + 500),
      c5(c.begin(), c.begin() + 500);
  EXPECT_EQ(*m.kendall_at(0, 1), *PairwiseTauB(a5, b5));
  EXPECT_EQ(*m.kendall_at(0, 2), *PairwiseTauB(a5, c5));
  EXPECT_NEAR(*m.pearson_at(1, 2), *Pearson(b5, c5), 1e-15);
  EXPECT_LT(*m.pearson_at(0, 2), 0.0);
  EXPECT_EQ(*m.pearson_at(1, 1), 1.0);
  EXPECT_EQ(m.kendall_at(2, 0), m.kendall_at(0, 2));
}

TEST(CorrelateCurvesTest, SkipsUndefinedPointsAndConstantCurves) {
  const double nan = std::nan("");
  const std::vector<Curve> curves = {MakeCurve("a", {nan, 0.5, 0.4, 0.3, 0.25}),
                                     MakeCurve("b", {0.9, nan, 0.7, 0.6, 0.5}),
                                     MakeCurve("c", {1, 1, 1, 1, 1})};
  const CorrelationMatrix m = CorrelateCurves(curves, 500);
  EXPECT_EQ(m.num_points, 3);
  EXPECT_DOUBLE_EQ(*m.pearson_at(0, 1), *Pearson(Reals{0.4, 0.3, 0.25}, Reals{0.7, 0.6, 0.5}));
  EXPECT_FALSE(m.pearson_at(0, 2).has_value());
  EXPECT_FALSE(m.kendall_at(2, 2).has_value());
  EXPECT_THROW(CorrelateCurves(std::vector<Curve>{curves[0]}, 500), CorrelationError);
  EXPECT_THROW(CorrelateCurves(curves, 3), CorrelationError);
}

TEST(CorrelationReportTest, AverageSkipsMissingEntries) {
  const std::vector<Curve> first = {MakeCurve("x", {1, 2, 3, 4}), MakeCurve("y", {1, 3, 2, 4})};
  const std::vector<Curve> second = {MakeCurve("x", {1, 2, 3, 4}),
                                     MakeCurve("y", {4, 3, 2, 1}), MakeCurve("z", {5, 5, 5, 5})};
  const CorrelationMatrix m1 = CorrelateCurves(first, 500);
  const CorrelationMatrix m2 = CorrelateCurves(second, 500);
  const CorrelationReport r = BuildCorrelationReport({"d1", "d2"}, {m1, m2});
  ASSERT_EQ(r.average.measures, (std::vector<std::string>{"x", "y", "z"}));
  EXPECT_DOUBLE_EQ(*r.average.pearson_at(0, 1), 0.5 * (*m1.pearson_at(0, 1) - 1.0));
  EXPECT_FALSE(r.average.pearson_at(0, 2).has_value());
  const std::string json = CorrelationReportToJson(r);
  EXPECT_NE(json.find("null"), std::string::npos);
  EXPECT_NE(json.find("\"d2\""), std::string::npos);
}

}  // namespace
}  // namespace oobcurve
