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

// Performance measures for classification and regression.
//
// All functions are pure. Entries that carry no prediction (label
// kUndefinedLabel, a NaN probability row or a NaN regression value) are
// skipped; the number of skipped entries is written to `num_excluded` when
// requested. Probability matrices are row-major n x K.

#ifndef OOBCURVE_MEASURES_H_
#define OOBCURVE_MEASURES_H_

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oobcurve/dataset.h"

namespace oobcurve {

class MeasureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class MeasureId {
  kErrorRate,
  kBalancedErrorRate,
  kBrier,
  kLogLoss,
  kAuc,
  kMse,
  kMae,
  kMedSe,
  kMedAe,
  kRSquared,
};

enum class MeasureInput { kLabels, kProbabilities, kNumeric };

struct MeasureInfo {
  MeasureId id;
  const char* name;
  MeasureInput input;
  bool higher_is_better;
};

const MeasureInfo& GetMeasureInfo(MeasureId id);
const char* MeasureName(MeasureId id);
std::optional<MeasureId> ParseMeasure(const std::string& name);
const std::vector<MeasureId>& AllMeasures();
// Whether the measure can be evaluated on a task of this kind.
bool MeasureSupportsTask(MeasureId id, TaskKind task);
// The measure set evaluated by default for a task kind.
std::vector<MeasureId> DefaultMeasures(TaskKind task);

inline constexpr double kLogLossOffset = 1e-15;
inline constexpr double kProbabilityTolerance = 1e-9;

double ErrorRate(std::span<const int> truth, std::span<const int> predicted,
                 int* num_excluded = nullptr);
double Accuracy(std::span<const int> truth, std::span<const int> predicted,
                int* num_excluded = nullptr);

// Macro-average of the per-class error rates over the classes that have at
// least one defined entry.
double BalancedErrorRate(std::span<const int> truth,
                         std::span<const int> predicted,
                         int* num_excluded = nullptr);

enum class BrierMode {
  // (y - p_1)^2, two classes only.
  kBinaryHalved,
  // sum_k (p_k - I(y = k))^2; twice the halved form when K = 2.
  kMulticlass,
};

double BrierScore(std::span<const int> truth, std::span<const double> probabilities,
                  int num_classes, BrierMode mode, int* num_excluded = nullptr);

// Mean of -ln(p_{i, y_i}); `offset` is added only where that probability is
// exactly zero.
double LogLoss(std::span<const int> truth, std::span<const double> probabilities,
               int num_classes, double offset = kLogLossOffset,
               int* num_excluded = nullptr);

// Mann-Whitney AUC of binary labels (1 = positive) against scores, ties
// counting one half. O(n log n) via mid-ranks.
double Auc(std::span<const int> truth, std::span<const double> scores,
           int* num_excluded = nullptr);

// Average of the pairwise AUC(j, k) over all ordered class pairs, where
// AUC(j, k) ranks the rows of classes j and k by their class-j probability.
double AucMulticlass(std::span<const int> truth,
                     std::span<const double> probabilities, int num_classes,
                     int* num_excluded = nullptr);

struct RegressionMeasures {
  double mse = 0.0;
  double mae = 0.0;
  double medse = 0.0;
  double medae = 0.0;
  // Empty with fewer than 2 entries or a constant truth.
  std::optional<double> rsquared;
};

RegressionMeasures ComputeRegressionMeasures(std::span<const double> truth,
                                             std::span<const double> predicted,
                                             int* num_excluded = nullptr);
// Throws MeasureError when the truth is constant.
double RSquared(std::span<const double> truth, std::span<const double> predicted);

// Median with the mean of the two central order statistics for even counts.
double Median(std::vector<double> values);

}  // namespace oobcurve

#endif  // OOBCURVE_MEASURES_H_
