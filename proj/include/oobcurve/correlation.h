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

// Linear and rank correlation between measure curves.

#ifndef OOBCURVE_CORRELATION_H_
#define OOBCURVE_CORRELATION_H_

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oobcurve/curve.h"

namespace oobcurve {

class CorrelationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Empty when either input is constant.
std::optional<double> Pearson(std::span<const double> x, std::span<const double> y);

// Pair counts behind Kendall's tau-b over n points.
struct KendallCounts {
  int64_t pairs = 0;         // n (n - 1) / 2
  int64_t ties_x = 0;        // pairs tied in x
  int64_t ties_y = 0;        // pairs tied in y
  int64_t concordant_minus_discordant = 0;
};

// O(n log n) pair counting by merge sort.
KendallCounts CountKendallPairs(std::span<const double> x, std::span<const double> y);

// (n_c - n_d) / sqrt((n_0 - n_x)(n_0 - n_y)); empty when either input is
// constant.
std::optional<double> KendallTauB(const KendallCounts& counts);
std::optional<double> KendallTauB(std::span<const double> x, std::span<const double> y);

// Symmetric matrices over a list of measure names, row-major; missing entries
// are empty.
struct CorrelationMatrix {
  std::vector<std::string> measures;
  std::vector<std::optional<double>> pearson;
  std::vector<std::optional<double>> kendall;
  // Grid points the correlations were computed on.
  int num_points = 0;

  size_t size() const { return measures.size(); }
  const std::optional<double>& pearson_at(size_t i, size_t j) const {
    return pearson[i * size() + j];
  }
  const std::optional<double>& kendall_at(size_t i, size_t j) const {
    return kendall[i * size() + j];
  }
};

inline constexpr int kDefaultCorrelationMaxT = 500;

// Correlations between curves on the grid points <= max_t where all of them
// are defined. Requires >= 2 curves on a shared grid and >= 3 such points.
CorrelationMatrix CorrelateCurves(std::span<const Curve> curves,
                                  int max_t = kDefaultCorrelationMaxT);

struct CorrelationReport {
  std::vector<std::string> datasets;
  std::vector<CorrelationMatrix> per_dataset;
  // Entry-wise mean over the datasets where the entry is present, on the
  // union of measures in first-appearance order.
  CorrelationMatrix average;
};

CorrelationReport BuildCorrelationReport(std::vector<std::string> datasets,
                                         std::vector<CorrelationMatrix> matrices);

// JSON rendering; missing entries are null.
std::string CorrelationReportToJson(const CorrelationReport& report);

}  // namespace oobcurve

#endif  // OOBCURVE_CORRELATION_H_
