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

#include "oobcurve/dataset.h"

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

namespace oobcurve {
namespace {

std::string TenRowCsv() {
  std::string csv = "x1,x2,y\n";
  for (int i = 0; i < 10; ++i) {
    csv += std::to_string(i) + "," + std::to_string(i * 0.5) + "," +
           (i % 2 ? "b" : "a") + "\n";
  }
  return csv;
}

TEST(ParseCsvTest, StringTargetIsBinary) {
  const Dataset d = ParseCsv(TenRowCsv(), "y");
  EXPECT_EQ(d.num_rows(), 10);
  EXPECT_EQ(d.num_features(), 2);
  EXPECT_EQ(d.task(), TaskKind::kBinaryClassification);
  EXPECT_EQ(d.num_classes(), 2);
  EXPECT_EQ(d.class_labels(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.label(0), 0);
  EXPECT_EQ(d.label(1), 1);
  EXPECT_DOUBLE_EQ(d.feature(3, 1), 1.5);
}

TEST(ParseCsvTest, ForcedRegressionOnStringsFails) {
  EXPECT_THROW(ParseCsv(TenRowCsv(), "y", TaskKind::kRegression), DatasetError);
}

TEST(ParseCsvTest, RowWithEmptyCellIsDropped) {
  std::string csv = TenRowCsv();
  csv.replace(csv.find("3,1.500000"), 1, "");
  const Dataset d = ParseCsv(csv, "y");
  EXPECT_EQ(d.num_rows(), 9);
  EXPECT_EQ(d.num_dropped_rows(), 1);
}

TEST(ParseCsvTest, NaCellIsMissing) {
  const Dataset d = ParseCsv("x,y\n1,0\nNA,1\n2,1\n3,0\n", "y");
  EXPECT_EQ(d.num_rows(), 3);
  EXPECT_EQ(d.num_dropped_rows(), 1);
}

TEST(ParseCsvTest, MissingTargetColumn) {
  EXPECT_THROW(ParseCsv(TenRowCsv(), "z"), DatasetError);
}

TEST(ParseCsvTest, MalformedRowReportsLine) {
  try {
    ParseCsv("x,y\n1,0\n2,1,7\n", "y");
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
}

TEST(ParseCsvTest, SingleClassTargetFails) {
  EXPECT_THROW(ParseCsv("x,y\n1,a\n2,a\n3,a\n", "y"), DatasetError);
}

TEST(ParseCsvTest, IntegerTargetTyping) {
  const Dataset binary = ParseCsv("x,y\n1,0\n2,1\n3,1\n", "y");
  EXPECT_EQ(binary.task(), TaskKind::kBinaryClassification);
  const Dataset multi = ParseCsv("x,y\n1,0\n2,1\n3,2\n", "y");
  EXPECT_EQ(multi.task(), TaskKind::kMulticlassClassification);
  EXPECT_EQ(multi.num_classes(), 3);
  const Dataset reg = ParseCsv("x,y\n1,0.5\n2,1.25\n3,2\n", "y");
  EXPECT_EQ(reg.task(), TaskKind::kRegression);
  const Dataset forced = ParseCsv("x,y\n1,0\n2,1\n3,2\n", "y", TaskKind::kRegression);
  EXPECT_EQ(forced.task(), TaskKind::kRegression);
}

TEST(ParseCsvTest, NumericClassLabelsAscend) {
  const Dataset d = ParseCsv("x,y\n1,3\n2,1\n3,2\n", "y");
  EXPECT_EQ(d.class_labels(), (std::vector<std::string>{"1", "2", "3"}));
  EXPECT_EQ(d.label(0), 2);
}

TEST(ParseCsvTest, ForcedBinaryNeedsTwoClasses) {
  EXPECT_THROW(ParseCsv("x,y\n1,0\n2,1\n3,2\n", "y", TaskKind::kBinaryClassification),
               DatasetError);
}

TEST(ParseCsvTest, CategoricalFeatureAndQuotes) {
  const Dataset d = ParseCsv("c,y\n\"red, dark\",0\nblue,1\n\"red, dark\",1\n", "y");
  ASSERT_EQ(d.column(0).kind, FeatureKind::kCategorical);
  EXPECT_EQ(d.column(0).num_levels(), 2);
  EXPECT_EQ(d.feature(0, 0), d.feature(2, 0));
  EXPECT_NE(d.feature(0, 0), d.feature(1, 0));
}

TEST(CsvRoundTripTest, WriteThenParse) {
  const Dataset d = Synthesize(ParseGeneratorSpec("two-gaussians(n=20,p=3,sep=1)"), 3);
  const Dataset back = ParseCsv(FormatCsv(d), "y");
  ASSERT_EQ(back.num_rows(), d.num_rows());
  for (int i = 0; i < d.num_rows(); ++i) {
    EXPECT_EQ(back.label(i), d.label(i));
    for (int j = 0; j < d.num_features(); ++j) {
      EXPECT_DOUBLE_EQ(back.feature(i, j), d.feature(i, j));
    }
  }
  const auto path = std::filesystem::temp_directory_path() / "oobcurve_dataset_test.csv";
  WriteCsv(d, path.string());
  EXPECT_EQ(LoadCsv(path.string(), "y"), back);
  std::filesystem::remove(path);
}

TEST(GeneratorTest, TwoGaussiansIsBalanced) {
  const Dataset d = Synthesize(ParseGeneratorSpec("two-gaussians(n=200,p=5,sep=3.0)"), 1);
  EXPECT_EQ(d.task(), TaskKind::kBinaryClassification);
  EXPECT_EQ(d.num_rows(), 200);
  EXPECT_EQ(d.num_features(), 5);
  int ones = 0;
  for (int i = 0; i < d.num_rows(); ++i) ones += d.label(i);
  EXPECT_EQ(ones, 100);
}

TEST(GeneratorTest, LabelNoiseFlipsAboutThirtyPercent) {
  // Unflipped labels alternate 0, 1, 0, ...
  const auto flipped = [](const Dataset& d) {
    int count = 0;
    for (int i = 0; i < d.num_rows(); ++i) count += d.label(i) != i % 2;
    return count;
  };
  const GeneratorSpec spec = ParseGeneratorSpec("label-noise(n=100,p=4,flip=0.3)");
  const int at_seven = flipped(Synthesize(spec, 7));
  // Binomial(100, 0.3) has sd 4.6.
  EXPECT_GE(at_seven, 16);
  EXPECT_LE(at_seven, 44);
  double total = 0.0;
  for (uint64_t seed = 0; seed < 200; ++seed) total += flipped(Synthesize(spec, seed));
  EXPECT_NEAR(total / 200 / 100, 0.3, 0.01);
}

TEST(GeneratorTest, Deterministic) {
  for (const char* text : {"two-gaussians(n=50,p=3,sep=2)", "label-noise(n=50,p=2,flip=0.1)",
                           "linear-regression(n=50,p=3,noise=1)",
                           "fig1-analog(n=100,p=3,frac=0.2)"}) {
    const GeneratorSpec spec = ParseGeneratorSpec(text);
    EXPECT_EQ(Synthesize(spec, 9), Synthesize(spec, 9)) << text;
    EXPECT_FALSE(Synthesize(spec, 9) == Synthesize(spec, 10)) << text;
  }
}

TEST(GeneratorTest, Fig1AnalogHasLabelBalancedClusters) {
  const Dataset d = Synthesize(ParseGeneratorSpec("fig1-analog(n=200,p=4,frac=0.1)"), 5);
  EXPECT_EQ(d.num_rows(), 200);
  // The last 20 rows form two clusters of identical points, half of each class.
  for (int c = 0; c < 2; ++c) {
    int ones = 0;
    const int first = 180 + 10 * c;
    for (int i = first; i < first + 10; ++i) {
      ones += d.label(i);
      EXPECT_EQ(d.row(i), d.row(first));
    }
    EXPECT_EQ(ones, 5);
  }
}

TEST(GeneratorTest, SpecParsing) {
  const GeneratorSpec spec = ParseGeneratorSpec("two-gaussians(n=200,p=5,sep=3)");
  EXPECT_EQ(spec.name, "two-gaussians");
  EXPECT_EQ(spec.n, 200);
  EXPECT_EQ(spec.p, 5);
  EXPECT_DOUBLE_EQ(spec.param, 3.0);
  EXPECT_EQ(ParseGeneratorSpec(spec.ToString()).ToString(), spec.ToString());
  EXPECT_THROW(Synthesize(ParseGeneratorSpec("no-such(n=10,p=2,x=1)"), 1), DatasetError);
}

TEST(SelectRowsTest, KeepsOrder) {
  const Dataset d = Synthesize(ParseGeneratorSpec("two-gaussians(n=10,p=2,sep=1)"), 2);
  const std::vector<int> rows = {4, 1, 4};
  const Dataset s = SelectRows(d, rows);
  ASSERT_EQ(s.num_rows(), 3);
  EXPECT_EQ(s.row(0), d.row(4));
  EXPECT_EQ(s.row(1), d.row(1));
  EXPECT_EQ(s.label(2), d.label(4));
}

}  // namespace
}  // namespace oobcurve
