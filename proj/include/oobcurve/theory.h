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

// Expected performance curves of a binary majority vote as a function of the
// number of trees, given the per-observation probability eps_i that a single
// tree misclassifies observation i.
//
// With X ~ Binomial(T, eps) wrong votes out of T:
//   error rate  P(X > T/2) + 0.5 P(X = T/2)
//   Brier       E[(X/T)^2] = eps^2 + eps (1 - eps) / T
//   log loss    E[-ln(1 - X/T + a)], exactly or by a second-order expansion.

#ifndef OOBCURVE_THEORY_H_
#define OOBCURVE_THEORY_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oobcurve/curve.h"
#include "oobcurve/dataset.h"
#include "oobcurve/forest.h"
#include "oobcurve/measures.h"

namespace oobcurve {

class TheoryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

double ExpectedErrorRate(double eps, int num_trees);

double ExpectedBrier(double eps, int num_trees);
// Squared error of the mean of T i.i.d. tree errors with the given mean and
// variance: mean^2 + variance / T.
double ExpectedSquaredError(double error_mean, double error_variance, int num_trees);

double ExpectedLogLossTaylor(double eps, int num_trees,
                             double offset = kLogLossOffset);
// Exact expectation over the binomial support; O(T).
double ExpectedLogLossExact(double eps, int num_trees, double offset = kLogLossOffset);

// round(T * exp(-1)), halves rounded up, at least 1.
int OobEffectiveTrees(int num_trees);

struct DifficultyVector {
  std::vector<double> epsilons;
  // False for user-specified values.
  bool estimated = false;
  // Forest size used for the estimate.
  int num_trees = 0;
};

// Throws TheoryError unless every entry lies in [0, 1].
void ValidateDifficulties(std::span<const double> epsilons);

enum class ExpectedMeasure { kErrorRate, kBrier, kLogLossTaylor, kLogLossExact };

const char* ExpectedMeasureName(ExpectedMeasure measure);
ExpectedMeasure ParseExpectedMeasure(const std::string& name);

// Mean over observations of the expected per-observation measure at each grid
// point. With `oob_adjust`, T is replaced by OobEffectiveTrees(T). The result
// carries metadata source=analytic.
Curve ExpectedCurve(const DifficultyVector& difficulties, std::span<const int> grid,
                    ExpectedMeasure measure, bool oob_adjust,
                    double offset = kLogLossOffset);
Curve ExpectedErrorCurve(const DifficultyVector& difficulties,
                         std::span<const int> grid, bool oob_adjust);

// eps_i = |y_i - p_i| from the OOB class-1 vote ratio of a binary forest.
// Throws TheoryError for non-binary tasks or rows without OOB trees.
DifficultyVector EstimateDifficulties(const VoteMatrix& votes, const Dataset& data);
DifficultyVector EstimateDifficulties(const Forest& forest, const Dataset& data);
// Streams the forest instead of keeping it; suited to 10^4..10^5 trees.
DifficultyVector EstimateDifficulties(const Dataset& data, int num_trees,
                                      const ForestParams& params, uint64_t master_seed,
                                      int num_threads = 1);

struct Histogram {
  // bins + 1 edges; the last bin includes its upper edge.
  std::vector<double> edges;
  std::vector<int> counts;
};

Histogram DifficultyHistogram(std::span<const double> epsilons, int bins = 20);

// Expected AUC of two observations whose class-1 vote ratios are
// Binomial(T, p_j) / T. Labels must differ.
double AucTwoPointScenario(int y1, int y2, double p1_mean, double p2_mean,
                           int num_trees, int replicates, uint64_t seed);
double AucTwoPointExact(int y1, int y2, double p1_mean, double p2_mean, int num_trees);

}  // namespace oobcurve

#endif  // OOBCURVE_THEORY_H_
