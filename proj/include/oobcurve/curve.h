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

// Performance curves as a function of the number of trees.
//
// An OOB curve evaluates a measure on the out-of-bag predictions of every
// tree prefix 1..T in a single pass. A point is defined once every training
// row has been out-of-bag for at least one tree of the prefix.

#ifndef OOBCURVE_CURVE_H_
#define OOBCURVE_CURVE_H_

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oobcurve/dataset.h"
#include "oobcurve/forest.h"
#include "oobcurve/measures.h"

namespace oobcurve {

class CurveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using CurveMetadata = std::map<std::string, std::string>;

struct Curve {
  // A measure name (see MeasureName()) or the name of an analytic curve.
  std::string measure;
  // Tree counts, strictly increasing.
  std::vector<int> grid;
  // NaN where undefined.
  std::vector<double> values;
  // Smallest grid point with a defined value; 0 when none is defined.
  int first_defined_t = 0;
  CurveMetadata metadata;

  bool defined(size_t index) const;
  // Value at tree count `t`; throws when `t` is not on the grid.
  double at(int t) const;
  // Final defined value; throws when nothing is defined.
  double final_value() const;
  // Whether larger values are better (AUC, R^2).
  bool higher_is_better() const;

  bool operator==(const Curve& other) const;
};

// Recomputes first_defined_t from the values.
void UpdateFirstDefined(Curve& curve);

// Folds trees one at a time and records every requested measure after each.
class CurveAccumulator {
 public:
  // `holdout` evaluates every tree on every row of `data` (test-set curves).
  CurveAccumulator(const Dataset& data, std::vector<MeasureId> measures,
                   uint64_t tie_seed, uint64_t fingerprint, bool holdout = false);

  // `predictions` must hold the tree's prediction for every row it counts
  // (the OOB rows, or all rows for hold-out curves).
  void AddTree(std::span<const double> predictions, std::span<const uint16_t> inbag);

  const VoteMatrix& votes() const { return votes_; }
  int num_trees() const { return votes_.prefix(); }
  std::vector<Curve> curves() const;

 private:
  void EvaluatePrefix();

  const Dataset& data_;
  std::vector<MeasureId> measures_;
  uint64_t tie_seed_;
  bool holdout_;
  std::vector<int> labels_;
  VoteMatrix votes_;
  int num_undefined_rows_;
  std::vector<std::vector<double>> values_;
};

// Checks that every measure applies to the task.
void CheckMeasures(std::span<const MeasureId> measures, TaskKind task);

// The tie-breaking stream for prefix `t` of a curve.
uint64_t PrefixTieSeed(uint64_t tie_seed, int t);

// OOB curves on the grid 1..num_trees of a trained forest.
std::vector<Curve> ComputeOobCurves(const Forest& forest, const Dataset& data,
                                    std::span<const MeasureId> measures,
                                    uint64_t tie_seed);

// Same values as TrainForest() followed by ComputeOobCurves(), without keeping
// the trees in memory.
std::vector<Curve> StreamOobCurves(const Dataset& data, int num_trees,
                                   const ForestParams& params, uint64_t master_seed,
                                   std::span<const MeasureId> measures,
                                   uint64_t tie_seed, int num_threads = 1);

// Curves of the forest's predictions on an independent test set.
std::vector<Curve> ComputeHoldoutCurves(const Forest& forest, const Dataset& test,
                                        std::span<const MeasureId> measures,
                                        uint64_t tie_seed);

enum class AveragePolicy {
  // A point is defined iff it is defined in every input.
  kAllDefined,
  // A point is the mean over the inputs where it is defined.
  kAnyDefined,
};

const char* AveragePolicyName(AveragePolicy policy);
AveragePolicy ParseAveragePolicy(const std::string& name);

// Pointwise mean. Metadata is taken from the first curve, with "runs" set.
Curve AverageCurves(std::span<const Curve> curves,
                    AveragePolicy policy = AveragePolicy::kAllDefined);

// Restricts a curve to the grid points in `grid` (which must be on the curve's
// grid).
Curve ThinCurve(const Curve& curve, std::span<const int> grid);

struct NonmonotonicityReport {
  bool is_nonmonotone = false;
  // Tree count of the best value within the window (the minimum, or the
  // maximum for higher-better measures).
  int argmin_t = 0;
  double min_value = 0.0;
  double final_value = 0.0;
  // How much worse the final value is than the best value in the window.
  double excess = 0.0;
};

inline constexpr int kDefaultWindowStart = 10;
inline constexpr int kDefaultWindowEnd = 150;
inline constexpr double kDefaultNonmonotonicityDelta = 0.005;

// Flags curves whose final value is at least `delta` worse than their best
// value within [window_start, window_end]. Throws CurveError when no point in
// the window is defined.
NonmonotonicityReport AnalyzeNonmonotonicity(
    const Curve& curve, int window_start = kDefaultWindowStart,
    int window_end = kDefaultWindowEnd, double delta = kDefaultNonmonotonicityDelta);

struct ConvergenceSummary {
  // Smallest tree count from which every later point lies within the
  // tolerance of the final value.
  int t_at_tolerance = 0;
  // t_at_tolerance * exp(-1): the equivalent count for predictions on new data.
  double effective_t = 0.0;
  // False when only the last grid point qualifies.
  bool converged = false;
  int t_max = 0;
  // Improvement from the first defined point at or after `gain_start` to the
  // end; positive when the curve got better.
  int gain_start_t = 0;
  double start_value = 0.0;
  double final_value = 0.0;
  double gain = 0.0;
};

inline constexpr int kDefaultGainStart = 11;

ConvergenceSummary SummarizeConvergence(const Curve& curve, double tolerance,
                                        int gain_start = kDefaultGainStart);

// CSV with `#key=value` metadata lines, a `T,<measure>...` header and one row
// per grid point; undefined values are written as NA. All curves must share a
// grid. Metadata comes from the first curve.
std::string FormatCurvesCsv(std::span<const Curve> curves);
void WriteCurvesCsv(std::span<const Curve> curves, const std::string& path);
std::vector<Curve> ParseCurvesCsv(const std::string& content);
std::vector<Curve> ReadCurvesCsv(const std::string& path);

}  // namespace oobcurve

#endif  // OOBCURVE_CURVE_H_
