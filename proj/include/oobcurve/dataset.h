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

// Tabular datasets: CSV ingestion, task typing and synthetic generators.

#ifndef OOBCURVE_DATASET_H_
#define OOBCURVE_DATASET_H_

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace oobcurve {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TaskKind {
  kBinaryClassification,
  kMulticlassClassification,
  kRegression,
};

const char* TaskKindName(TaskKind task);
// Accepts "binary", "multiclass", "classification" (alias of multiclass) and
// "regression".
std::optional<TaskKind> ParseTaskKind(const std::string& name);

inline bool IsClassification(TaskKind task) {
  return task != TaskKind::kRegression;
}

enum class FeatureKind { kNumeric, kCategorical };

struct ColumnSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  // Level names in encoding order; empty for numeric columns.
  std::vector<std::string> levels;

  int num_levels() const { return static_cast<int>(levels.size()); }
};

// Immutable feature matrix + response. Features are stored column-major;
// categorical cells hold their level index as a double.
class Dataset {
 public:
  Dataset(std::vector<ColumnSpec> columns, std::vector<double> features,
          std::vector<double> response, TaskKind task,
          std::vector<std::string> class_labels, std::string target_name);

  int num_rows() const { return num_rows_; }
  int num_features() const { return static_cast<int>(columns_.size()); }
  TaskKind task() const { return task_; }
  // K for classification, 0 for regression.
  int num_classes() const { return static_cast<int>(class_labels_.size()); }

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  const ColumnSpec& column(int j) const { return columns_[j]; }
  const std::string& target_name() const { return target_name_; }
  const std::vector<std::string>& class_labels() const { return class_labels_; }

  double feature(int row, int col) const {
    return features_[static_cast<size_t>(col) * num_rows_ + row];
  }
  std::span<const double> feature_column(int col) const {
    return {features_.data() + static_cast<size_t>(col) * num_rows_,
            static_cast<size_t>(num_rows_)};
  }
  std::vector<double> row(int r) const;

  std::span<const double> response() const { return response_; }
  int label(int row) const { return static_cast<int>(response_[row]); }

  // Rows dropped during ingestion because of missing cells.
  int num_dropped_rows() const { return num_dropped_rows_; }
  void set_num_dropped_rows(int n) { num_dropped_rows_ = n; }

  bool operator==(const Dataset& other) const;

 private:
  std::vector<ColumnSpec> columns_;
  std::vector<double> features_;
  std::vector<double> response_;
  TaskKind task_;
  std::vector<std::string> class_labels_;
  std::string target_name_;
  int num_rows_ = 0;
  int num_dropped_rows_ = 0;
};

// Integer targets with at most this many distinct values are typed as
// classification unless a task is forced.
inline constexpr int kMaxInferredClasses = 10;

// Reads an RFC-4180 CSV with a header row. Empty and "NA" cells mark a row as
// missing; such rows are dropped and counted. Throws DatasetError on a missing
// target column, malformed rows (with line numbers), a single-class
// classification target or a task that contradicts the target type.
// Forcing a classification task types the target as classes; a two-class
// target then always becomes binary, and forcing binary requires K = 2.
Dataset LoadCsv(const std::string& path, const std::string& target,
                std::optional<TaskKind> task = std::nullopt);
Dataset ParseCsv(const std::string& content, const std::string& target,
                 std::optional<TaskKind> task = std::nullopt);

// Writes the dataset back as CSV (features first, target last). Categorical
// cells and class labels are written with their level names.
void WriteCsv(const Dataset& data, const std::string& path);
std::string FormatCsv(const Dataset& data);

// Bundled generators:
//   two-gaussians(n, p, sep)       balanced binary classes, unit-variance
//                                  Gaussians whose means differ by `sep` in
//                                  every coordinate.
//   label-noise(n, p, flip)        two-gaussians(sep=2) with each label
//                                  flipped independently with prob. `flip`.
//   linear-regression(n, p, sd)    y = x . beta + N(0, sd^2), beta_j = 1/(j+1).
//   fig1-analog(n, p, frac)        well separated two-gaussians(sep=3) plus a
//                                  fraction `frac` of rows sitting in
//                                  label-balanced clusters of identical
//                                  feature vectors; those rows are wrongly
//                                  predicted by slightly more than half of the
//                                  trees, the mixture that makes mean OOB
//                                  error curves rise after their minimum.
struct GeneratorSpec {
  std::string name;
  int n = 0;
  int p = 0;
  double param = 0.0;

  std::string ToString() const;
};

// Parses "two-gaussians(n=200,p=5,sep=3.0)". The parameter key of the third
// argument is free-form ("sep", "flip", "noise", "frac").
GeneratorSpec ParseGeneratorSpec(const std::string& text);

Dataset Synthesize(const GeneratorSpec& spec, uint64_t seed);

// A new dataset restricted to the given rows, in the given order.
Dataset SelectRows(const Dataset& data, std::span<const int> rows);

}  // namespace oobcurve

#endif  // OOBCURVE_DATASET_H_
