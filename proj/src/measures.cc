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

#include "oobcurve/measures.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oobcurve/forest.h"

namespace oobcurve {
namespace {

const std::vector<MeasureInfo>& Registry() {
  static const std::vector<MeasureInfo> registry = {
      {MeasureId::kErrorRate, "error_rate", MeasureInput::kLabels, false},
      {MeasureId::kBalancedErrorRate, "balanced_error_rate", MeasureInput::kLabels, false},
      {MeasureId::kBrier, "brier", MeasureInput::kProbabilities, false},
      {MeasureId::kLogLoss, "logloss", MeasureInput::kProbabilities, false},
      {MeasureId::kAuc, "auc", MeasureInput::kProbabilities, true},
      {MeasureId::kMse, "mse", MeasureInput::kNumeric, false},
      {MeasureId::kMae, "mae", MeasureInput::kNumeric, false},
      {MeasureId::kMedSe, "medse", MeasureInput::kNumeric, false},
      {MeasureId::kMedAe, "medae", MeasureInput::kNumeric, false},
      {MeasureId::kRSquared, "rsquared", MeasureInput::kNumeric, true},
  };
  return registry;
}

void CheckSameLength(size_t a, size_t b) {
  if (a != b) {
    throw MeasureError("length mismatch: " + std::to_string(a) + " vs " +
                       std::to_string(b));
  }
}

void CheckDefinedCount(int defined) {
  if (defined == 0) throw MeasureError("no defined entries to evaluate");
}

void SetExcluded(int* out, int value) {
  if (out) *out = value;
}

// Validates the probability rows and returns, per row, whether it is defined.
std::vector<uint8_t> DefinedProbabilityRows(std::span<const int> truth,
                                            std::span<const double> probabilities,
                                            int num_classes) {
  if (num_classes < 2) throw MeasureError("probabilities need at least 2 classes");
  CheckSameLength(probabilities.size(), truth.size() * num_classes);
  std::vector<uint8_t> defined(truth.size(), 1);
  for (size_t i = 0; i < truth.size(); ++i) {
    const double* row = probabilities.data() + i * num_classes;
    if (std::any_of(row, row + num_classes, [](double p) { return std::isnan(p); })) {
      defined[i] = 0;
      continue;
    }
    double total = 0.0;
    for (int k = 0; k < num_classes; ++k) {
      if (row[k] < 0.0) throw MeasureError("negative probability");
      total += row[k];
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance) {
      throw MeasureError("probability row " + std::to_string(i) +
                         " sums to " + std::to_string(total));
    }
    if (truth[i] < 0 || truth[i] >= num_classes) {
      throw MeasureError("label out of range");
    }
  }
  return defined;
}

// Sum over positives of their mid-rank among all scored rows, minus the
// minimum possible rank sum. Equals #(pos > neg) + 0.5 #(pos == neg).
double MannWhitneyU(std::span<const double> scores, std::span<const uint8_t> positive,
                    double* num_pos, double* num_neg) {
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  double pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j+1 share their mean.
    const double mid_rank = 0.5 * static_cast<double>(i + j + 2);
    for (size_t k = i; k <= j; ++k) {
      if (positive[order[k]]) {
        rank_sum += mid_rank;
        pos += 1.0;
      }
    }
    i = j + 1;
  }
  *num_pos = pos;
  *num_neg = static_cast<double>(n) - pos;
  return rank_sum - pos * (pos + 1.0) / 2.0;
}

}  // namespace

const MeasureInfo& GetMeasureInfo(MeasureId id) {
  return Registry()[static_cast<size_t>(id)];
}

const char* MeasureName(MeasureId id) { return GetMeasureInfo(id).name; }

std::optional<MeasureId> ParseMeasure(const std::string& name) {
  for (const MeasureInfo& info : Registry()) {
    if (name == info.name) return info.id;
  }
  return std::nullopt;
}

const std::vector<MeasureId>& AllMeasures() {
  static const std::vector<MeasureId> all = [] {
    std::vector<MeasureId> out;
    for (const MeasureInfo& info : Registry()) out.push_back(info.id);
    return out;
  }();
  return all;
}

bool MeasureSupportsTask(MeasureId id, TaskKind task) {
  const bool numeric = GetMeasureInfo(id).input == MeasureInput::kNumeric;
  return numeric == (task == TaskKind::kRegression);
}

std::vector<MeasureId> DefaultMeasures(TaskKind task) {
  if (task == TaskKind::kRegression) {
    return {MeasureId::kMse, MeasureId::kMae, MeasureId::kMedSe, MeasureId::kMedAe,
            MeasureId::kRSquared};
  }
  return {MeasureId::kErrorRate, MeasureId::kBalancedErrorRate, MeasureId::kBrier,
          MeasureId::kLogLoss, MeasureId::kAuc};
}

double ErrorRate(std::span<const int> truth, std::span<const int> predicted,
                 int* num_excluded) {
  CheckSameLength(truth.size(), predicted.size());
  int defined = 0;
  int errors = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == kUndefinedLabel) continue;
    ++defined;
    if (truth[i] != predicted[i]) ++errors;
  }
  SetExcluded(num_excluded, static_cast<int>(truth.size()) - defined);
  CheckDefinedCount(defined);
  return static_cast<double>(errors) / defined;
}

double Accuracy(std::span<const int> truth, std::span<const int> predicted,
                int* num_excluded) {
  return 1.0 - ErrorRate(truth, predicted, num_excluded);
}

double BalancedErrorRate(std::span<const int> truth, std::span<const int> predicted,
                         int* num_excluded) {
  CheckSameLength(truth.size(), predicted.size());
  const int k = truth.empty() ? 0 : *std::max_element(truth.begin(), truth.end()) + 1;
  std::vector<int> count(k, 0);
  std::vector<int> errors(k, 0);
  int defined = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == kUndefinedLabel) continue;
    if (truth[i] < 0) throw MeasureError("negative class label");
    ++defined;
    ++count[truth[i]];
    if (truth[i] != predicted[i]) ++errors[truth[i]];
  }
  SetExcluded(num_excluded, static_cast<int>(truth.size()) - defined);
  CheckDefinedCount(defined);
  double sum = 0.0;
  int classes = 0;
  for (int c = 0; c < k; ++c) {
    if (count[c] == 0) continue;
    sum += static_cast<double>(errors[c]) / count[c];
    ++classes;
  }
  return sum / classes;
}

double BrierScore(std::span<const int> truth, std::span<const double> probabilities,
                  int num_classes, BrierMode mode, int* num_excluded) {
  if (mode == BrierMode::kBinaryHalved && num_classes != 2) {
    throw MeasureError("binary Brier score requires exactly 2 classes");
  }
  const auto defined = DefinedProbabilityRows(truth, probabilities, num_classes);
  double sum = 0.0;
  int count = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    if (!defined[i]) continue;
    ++count;
    const double* row = probabilities.data() + i * num_classes;
    if (mode == BrierMode::kBinaryHalved) {
      const double d = truth[i] - row[1];
      sum += d * d;
    } else {
      for (int k = 0; k < num_classes; ++k) {
        const double d = row[k] - (truth[i] == k ? 1.0 : 0.0);
        sum += d * d;
      }
    }
  }
  SetExcluded(num_excluded, static_cast<int>(truth.size()) - count);
  CheckDefinedCount(count);
  return sum / count;
}

double LogLoss(std::span<const int> truth, std::span<const double> probabilities,
               int num_classes, double offset, int* num_excluded) {
  if (!(offset > 0.0)) throw MeasureError("log-loss offset must be positive");
  const auto defined = DefinedProbabilityRows(truth, probabilities, num_classes);
  double sum = 0.0;
  int count = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    if (!defined[i]) continue;
    ++count;
    const double p = probabilities[i * num_classes + truth[i]];
    sum -= std::log(p == 0.0 ? offset : p);
  }
  SetExcluded(num_excluded, static_cast<int>(truth.size()) - count);
  CheckDefinedCount(count);
  return sum / count;
}

double Auc(std::span<const int> truth, std::span<const double> scores,
           int* num_excluded) {
  CheckSameLength(truth.size(), scores.size());
  std::vector<double> kept_scores;
  std::vector<uint8_t> positive;
  for (size_t i = 0; i < truth.size(); ++i) {
    if (std::isnan(scores[i])) continue;
    if (truth[i] != 0 && truth[i] != 1) throw MeasureError("AUC labels must be 0/1");
    kept_scores.push_back(scores[i]);
    positive.push_back(truth[i] == 1);
  }
  SetExcluded(num_excluded, static_cast<int>(truth.size() - kept_scores.size()));
  double num_pos = 0.0;
  double num_neg = 0.0;
  const double u = MannWhitneyU(kept_scores, positive, &num_pos, &num_neg);
  if (num_pos == 0.0 || num_neg == 0.0) {
    throw MeasureError("AUC needs both classes among the defined entries");
  }
  return u / (num_pos * num_neg);
}

double AucMulticlass(std::span<const int> truth, std::span<const double> probabilities,
                     int num_classes, int* num_excluded) {
  const auto defined = DefinedProbabilityRows(truth, probabilities, num_classes);
  std::vector<int> count(num_classes, 0);
  int excluded = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    if (defined[i]) {
      ++count[truth[i]];
    } else {
      ++excluded;
    }
  }
  SetExcluded(num_excluded, excluded);
  for (int c = 0; c < num_classes; ++c) {
    if (count[c] == 0) {
      throw MeasureError("class " + std::to_string(c) +
                         " has no defined entries for the multiclass AUC");
    }
  }
  double total = 0.0;
  std::vector<double> scores;
  std::vector<uint8_t> positive;
  for (int j = 0; j < num_classes; ++j) {
    for (int k = 0; k < num_classes; ++k) {
      if (j == k) continue;
      scores.clear();
      positive.clear();
      for (size_t i = 0; i < truth.size(); ++i) {
        if (!defined[i] || (truth[i] != j && truth[i] != k)) continue;
        scores.push_back(probabilities[i * num_classes + j]);
        positive.push_back(truth[i] == j);
      }
      double num_pos = 0.0;
      double num_neg = 0.0;
      const double u = MannWhitneyU(scores, positive, &num_pos, &num_neg);
      total += u / (num_pos * num_neg);
    }
  }
  return total / (static_cast<double>(num_classes) * (num_classes - 1));
}

double Median(std::vector<double> values) {
  if (values.empty()) throw MeasureError("median of an empty set");
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

RegressionMeasures ComputeRegressionMeasures(std::span<const double> truth,
                                             std::span<const double> predicted,
                                             int* num_excluded) {
  CheckSameLength(truth.size(), predicted.size());
  std::vector<double> squared;
  std::vector<double> absolute;
  std::vector<double> kept_truth;
  for (size_t i = 0; i < truth.size(); ++i) {
    if (std::isnan(predicted[i])) continue;
    const double d = truth[i] - predicted[i];
    squared.push_back(d * d);
    absolute.push_back(std::abs(d));
    kept_truth.push_back(truth[i]);
  }
  const int defined = static_cast<int>(squared.size());
  SetExcluded(num_excluded, static_cast<int>(truth.size()) - defined);
  CheckDefinedCount(defined);
  RegressionMeasures out;
  const double sse = std::accumulate(squared.begin(), squared.end(), 0.0);
  out.mse = sse / defined;
  out.mae = std::accumulate(absolute.begin(), absolute.end(), 0.0) / defined;
  out.medse = Median(squared);
  out.medae = Median(absolute);
  if (defined >= 2) {
    const double mean =
        std::accumulate(kept_truth.begin(), kept_truth.end(), 0.0) / defined;
    double sst = 0.0;
    for (const double y : kept_truth) sst += (y - mean) * (y - mean);
    if (sst > 0.0) out.rsquared = 1.0 - sse / sst;
  }
  return out;
}

double RSquared(std::span<const double> truth, std::span<const double> predicted) {
  const RegressionMeasures m = ComputeRegressionMeasures(truth, predicted);
  if (!m.rsquared) {
    throw MeasureError("R^2 is undefined for a constant truth or fewer than 2 entries");
  }
  return *m.rsquared;
}

}  // namespace oobcurve
