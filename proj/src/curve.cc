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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "oobcurve/random.h"

namespace oobcurve {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Slack for comparisons against user thresholds.
constexpr double kCompareSlack = 1e-12;

std::string FormatValue(double v) {
  if (std::isnan(v)) return "NA";
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::vector<std::string> SplitComma(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseValue(const std::string& text, int line) {
  if (text == "NA") return kNaN;
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw CurveError("line " + std::to_string(line) + ": bad value '" + text + "'");
}

}  // namespace

bool Curve::defined(size_t index) const { return !std::isnan(values[index]); }

double Curve::at(int t) const {
  const auto it = std::lower_bound(grid.begin(), grid.end(), t);
  if (it == grid.end() || *it != t) {
    throw CurveError("tree count " + std::to_string(t) + " is not on the grid");
  }
  return values[it - grid.begin()];
}

double Curve::final_value() const {
  for (size_t i = values.size(); i-- > 0;) {
    if (defined(i)) return values[i];
  }
  throw CurveError("curve '" + measure + "' has no defined value");
}

bool Curve::higher_is_better() const {
  const auto id = ParseMeasure(measure);
  return id && GetMeasureInfo(*id).higher_is_better;
}

bool Curve::operator==(const Curve& other) const {
  if (measure != other.measure || grid != other.grid ||
      first_defined_t != other.first_defined_t || metadata != other.metadata ||
      values.size() != other.values.size()) {
    return false;
  }
  for (size_t i = 0; i < values.size(); ++i) {
    if (defined(i) != other.defined(i)) return false;
    if (defined(i) && values[i] != other.values[i]) return false;
  }
  return true;
}

void UpdateFirstDefined(Curve& curve) {
  curve.first_defined_t = 0;
  for (size_t i = 0; i < curve.values.size(); ++i) {
    if (curve.defined(i)) {
      curve.first_defined_t = curve.grid[i];
      return;
    }
  }
}

void CheckMeasures(std::span<const MeasureId> measures, TaskKind task) {
  if (measures.empty()) throw CurveError("no measures requested");
  for (const MeasureId id : measures) {
    if (!MeasureSupportsTask(id, task)) {
      throw CurveError(std::string("measure '") + MeasureName(id) +
                       "' does not apply to a " + TaskKindName(task) + " task");
    }
  }
}

uint64_t PrefixTieSeed(uint64_t tie_seed, int t) {
  return DeriveSeed(tie_seed, static_cast<uint64_t>(t));
}

CurveAccumulator::CurveAccumulator(const Dataset& data, std::vector<MeasureId> measures,
                                   uint64_t tie_seed, uint64_t fingerprint,
                                   bool holdout)
    : data_(data),
      measures_(std::move(measures)),
      tie_seed_(tie_seed),
      holdout_(holdout),
      votes_(data.num_rows(), IsClassification(data.task()) ? data.num_classes() : 0,
             fingerprint),
      num_undefined_rows_(data.num_rows()),
      values_(measures_.size()) {
  CheckMeasures(measures_, data.task());
  if (IsClassification(data.task())) {
    labels_.resize(data.num_rows());
    for (int i = 0; i < data.num_rows(); ++i) labels_[i] = data.label(i);
  }
}

void CurveAccumulator::AddTree(std::span<const double> predictions,
                               std::span<const uint16_t> inbag) {
  if (predictions.size() != static_cast<size_t>(data_.num_rows())) {
    throw CurveError("prediction vector does not match the dataset");
  }
  const std::span<const uint16_t> counted =
      holdout_ ? std::span<const uint16_t>() : inbag;
  for (int i = 0; i < data_.num_rows(); ++i) {
    if (votes_.oob_count(i) == 0 && (counted.empty() || counted[i] == 0)) {
      --num_undefined_rows_;
    }
  }
  votes_.AddTree(predictions, counted);
  EvaluatePrefix();
}

void CurveAccumulator::EvaluatePrefix() {
  if (num_undefined_rows_ > 0) {
    for (auto& v : values_) v.push_back(kNaN);
    return;
  }
  const OobPredictions pred =
      PredictFromVotes(votes_, PrefixTieSeed(tie_seed_, votes_.prefix()));
  const int k = data_.num_classes();
  std::optional<RegressionMeasures> regression;
  if (!IsClassification(data_.task())) {
    regression = ComputeRegressionMeasures(data_.response(), pred.values);
  }
  std::vector<double> positive_scores;
  for (size_t m = 0; m < measures_.size(); ++m) {
    double value = kNaN;
    switch (measures_[m]) {
      case MeasureId::kErrorRate:
        value = ErrorRate(labels_, pred.labels);
        break;
      case MeasureId::kBalancedErrorRate:
        value = BalancedErrorRate(labels_, pred.labels);
        break;
      case MeasureId::kBrier:
        value = BrierScore(labels_, pred.probabilities, k,
                           k == 2 ? BrierMode::kBinaryHalved : BrierMode::kMulticlass);
        break;
      case MeasureId::kLogLoss:
        value = LogLoss(labels_, pred.probabilities, k);
        break;
      case MeasureId::kAuc:
        if (k == 2) {
          positive_scores.resize(labels_.size());
          for (size_t i = 0; i < labels_.size(); ++i) {
            positive_scores[i] = pred.probabilities[2 * i + 1];
          }
          value = Auc(labels_, positive_scores);
        } else {
          value = AucMulticlass(labels_, pred.probabilities, k);
        }
        break;
      case MeasureId::kMse:
        value = regression->mse;
        break;
      case MeasureId::kMae:
        value = regression->mae;
        break;
      case MeasureId::kMedSe:
        value = regression->medse;
        break;
      case MeasureId::kMedAe:
        value = regression->medae;
        break;
      case MeasureId::kRSquared:
        value = regression->rsquared.value_or(kNaN);
        break;
    }
    values_[m].push_back(value);
  }
}

std::vector<Curve> CurveAccumulator::curves() const {
  std::vector<Curve> out(measures_.size());
  std::vector<int> grid(votes_.prefix());
  for (int t = 0; t < votes_.prefix(); ++t) grid[t] = t + 1;
  for (size_t m = 0; m < measures_.size(); ++m) {
    Curve& c = out[m];
    c.measure = MeasureName(measures_[m]);
    c.grid = grid;
    c.values = values_[m];
    UpdateFirstDefined(c);
    c.metadata["kind"] = holdout_ ? "holdout" : "oob";
    c.metadata["task"] = TaskKindName(data_.task());
    c.metadata["rows"] = std::to_string(data_.num_rows());
    c.metadata["tie_seed"] = std::to_string(tie_seed_);
  }
  return out;
}

std::vector<Curve> ComputeOobCurves(const Forest& forest, const Dataset& data,
                                    std::span<const MeasureId> measures,
                                    uint64_t tie_seed) {
  if (data.num_rows() != forest.num_rows() || data.task() != forest.task()) {
    throw CurveError("dataset does not match the forest");
  }
  CurveAccumulator acc(data, {measures.begin(), measures.end()}, tie_seed,
                       forest.fingerprint());
  std::vector<double> predictions(data.num_rows());
  for (int t = 0; t < forest.num_trees(); ++t) {
    const auto inbag = forest.inbag(t);
    for (int i = 0; i < data.num_rows(); ++i) {
      predictions[i] = inbag[i] == 0 ? forest.tree(t).PredictRow(data, i) : 0.0;
    }
    acc.AddTree(predictions, inbag);
  }
  std::vector<Curve> curves = acc.curves();
  for (Curve& c : curves) {
    c.metadata["master_seed"] = std::to_string(forest.master_seed());
    c.metadata["trees"] = std::to_string(forest.num_trees());
  }
  return curves;
}

std::vector<Curve> StreamOobCurves(const Dataset& data, int num_trees,
                                   const ForestParams& params, uint64_t master_seed,
                                   std::span<const MeasureId> measures,
                                   uint64_t tie_seed, int num_threads) {
  CurveAccumulator acc(data, {measures.begin(), measures.end()}, tie_seed,
                       ForestFingerprint(master_seed, data.num_rows(), params));
  StreamTrees(data, num_trees, params, master_seed, num_threads,
              [&](int, std::span<const double> predictions,
                  std::span<const uint16_t> inbag) { acc.AddTree(predictions, inbag); });
  std::vector<Curve> curves = acc.curves();
  for (Curve& c : curves) {
    c.metadata["master_seed"] = std::to_string(master_seed);
    c.metadata["trees"] = std::to_string(num_trees);
  }
  return curves;
}

std::vector<Curve> ComputeHoldoutCurves(const Forest& forest, const Dataset& test,
                                        std::span<const MeasureId> measures,
                                        uint64_t tie_seed) {
  if (test.task() != forest.task() ||
      (IsClassification(test.task()) && test.num_classes() != forest.num_classes())) {
    throw CurveError("test set does not match the forest's task");
  }
  CurveAccumulator acc(test, {measures.begin(), measures.end()}, tie_seed,
                       forest.fingerprint(), /*holdout=*/true);
  for (int t = 0; t < forest.num_trees(); ++t) {
    acc.AddTree(PredictTree(forest.tree(t), test), {});
  }
  std::vector<Curve> curves = acc.curves();
  for (Curve& c : curves) {
    c.metadata["master_seed"] = std::to_string(forest.master_seed());
    c.metadata["trees"] = std::to_string(forest.num_trees());
  }
  return curves;
}

const char* AveragePolicyName(AveragePolicy policy) {
  return policy == AveragePolicy::kAllDefined ? "all_defined" : "any_defined";
}

AveragePolicy ParseAveragePolicy(const std::string& name) {
  if (name == "all_defined") return AveragePolicy::kAllDefined;
  if (name == "any_defined") return AveragePolicy::kAnyDefined;
  throw CurveError("unknown average policy '" + name + "'");
}

Curve AverageCurves(std::span<const Curve> curves, AveragePolicy policy) {
  if (curves.empty()) throw CurveError("no curves to average");
  const Curve& first = curves.front();
  for (const Curve& c : curves) {
    if (c.measure != first.measure) {
      throw CurveError("cannot average '" + c.measure + "' with '" + first.measure + "'");
    }
    if (c.grid != first.grid || c.values.size() != first.grid.size()) {
      throw CurveError("cannot average curves on different grids");
    }
  }
  Curve out;
  out.measure = first.measure;
  out.grid = first.grid;
  out.metadata = first.metadata;
  out.metadata["runs"] = std::to_string(curves.size());
  out.metadata["average_policy"] = AveragePolicyName(policy);
  out.values.assign(first.grid.size(), kNaN);
  for (size_t i = 0; i < first.grid.size(); ++i) {
    // Running mean: exact when every input agrees.
    double mean = 0.0;
    int count = 0;
    for (const Curve& c : curves) {
      if (!c.defined(i)) continue;
      ++count;
      mean += (c.values[i] - mean) / count;
    }
    const bool keep = policy == AveragePolicy::kAllDefined
                          ? count == static_cast<int>(curves.size())
                          : count > 0;
    if (keep) out.values[i] = mean;
  }
  UpdateFirstDefined(out);
  return out;
}

Curve ThinCurve(const Curve& curve, std::span<const int> grid) {
  Curve out;
  out.measure = curve.measure;
  out.metadata = curve.metadata;
  for (const int t : grid) {
    out.grid.push_back(t);
    out.values.push_back(curve.at(t));
  }
  if (!std::is_sorted(out.grid.begin(), out.grid.end()) ||
      std::adjacent_find(out.grid.begin(), out.grid.end()) != out.grid.end()) {
    throw CurveError("thinning grid must be strictly increasing");
  }
  UpdateFirstDefined(out);
  return out;
}

NonmonotonicityReport AnalyzeNonmonotonicity(const Curve& curve, int window_start,
                                             int window_end, double delta) {
  if (window_start > window_end) throw CurveError("empty window");
  // Work on the oriented curve, where lower is always better.
  const double sign = curve.higher_is_better() ? -1.0 : 1.0;
  NonmonotonicityReport report;
  bool found = false;
  double best = 0.0;
  for (size_t i = 0; i < curve.grid.size(); ++i) {
    const int t = curve.grid[i];
    if (t < window_start || t > window_end || !curve.defined(i)) continue;
    const double v = sign * curve.values[i];
    if (!found || v < best) {
      best = v;
      report.argmin_t = t;
      found = true;
    }
  }
  if (!found) {
    throw CurveError("curve '" + curve.measure + "' has no defined point in [" +
                     std::to_string(window_start) + ", " +
                     std::to_string(window_end) + "]");
  }
  report.min_value = sign * best;
  report.final_value = curve.final_value();
  report.excess = sign * report.final_value - best;
  report.is_nonmonotone = report.excess >= delta - kCompareSlack;
  return report;
}

ConvergenceSummary SummarizeConvergence(const Curve& curve, double tolerance,
                                        int gain_start) {
  if (!(tolerance >= 0.0)) throw CurveError("tolerance must be non-negative");
  ConvergenceSummary s;
  s.final_value = curve.final_value();
  size_t last = curve.values.size();
  while (last > 0 && !curve.defined(last - 1)) --last;
  s.t_max = curve.grid[last - 1];
  // Walk backwards while points stay within the tolerance band.
  size_t start = last - 1;
  while (start > 0 && curve.defined(start - 1) &&
         std::abs(curve.values[start - 1] - s.final_value) <=
             tolerance + kCompareSlack) {
    --start;
  }
  s.t_at_tolerance = curve.grid[start];
  s.effective_t = s.t_at_tolerance * std::exp(-1.0);
  s.converged = s.t_at_tolerance < s.t_max;

  bool found = false;
  for (size_t i = 0; i < last; ++i) {
    if (curve.grid[i] >= gain_start && curve.defined(i)) {
      s.gain_start_t = curve.grid[i];
      s.start_value = curve.values[i];
      found = true;
      break;
    }
  }
  if (!found) {
    throw CurveError("curve '" + curve.measure + "' is not defined at or after T=" +
                     std::to_string(gain_start));
  }
  s.gain = curve.higher_is_better() ? s.final_value - s.start_value
                                    : s.start_value - s.final_value;
  return s;
}

std::string FormatCurvesCsv(std::span<const Curve> curves) {
  if (curves.empty()) throw CurveError("no curves to write");
  for (const Curve& c : curves) {
    if (c.grid != curves.front().grid || c.values.size() != c.grid.size()) {
      throw CurveError("curves written to one file must share a grid");
    }
  }
  std::string out;
  for (const auto& [key, value] : curves.front().metadata) {
    out += "#" + key + "=" + value + "\n";
  }
  out += "T";
  for (const Curve& c : curves) out += "," + c.measure;
  out += "\n";
  for (size_t i = 0; i < curves.front().grid.size(); ++i) {
    out += std::to_string(curves.front().grid[i]);
    for (const Curve& c : curves) out += "," + FormatValue(c.values[i]);
    out += "\n";
  }
  return out;
}

void WriteCurvesCsv(std::span<const Curve> curves, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw CurveError("cannot write " + path);
  file << FormatCurvesCsv(curves);
  if (!file) throw CurveError("error writing " + path);
}

std::vector<Curve> ParseCurvesCsv(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  CurveMetadata metadata;
  std::vector<Curve> curves;
  bool have_header = false;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const size_t eq = line.find('=');
      if (eq == std::string::npos) {
        metadata[line.substr(1)] = "";
      } else {
        metadata[line.substr(1, eq - 1)] = line.substr(eq + 1);
      }
      continue;
    }
    const std::vector<std::string> fields = SplitComma(line);
    if (!have_header) {
      if (fields.size() < 2 || fields[0] != "T") {
        throw CurveError("line " + std::to_string(line_number) +
                         ": expected a header 'T,<measure>,...'");
      }
      for (size_t j = 1; j < fields.size(); ++j) {
        Curve c;
        c.measure = fields[j];
        curves.push_back(std::move(c));
      }
      have_header = true;
      continue;
    }
    if (fields.size() != curves.size() + 1) {
      throw CurveError("line " + std::to_string(line_number) + ": expected " +
                       std::to_string(curves.size() + 1) + " fields");
    }
    const double t = ParseValue(fields[0], line_number);
    if (std::isnan(t) || t < 1 || t != std::floor(t)) {
      throw CurveError("line " + std::to_string(line_number) + ": bad tree count");
    }
    if (!curves.front().grid.empty() && t <= curves.front().grid.back()) {
      throw CurveError("line " + std::to_string(line_number) +
                       ": tree counts must increase");
    }
    for (size_t j = 0; j < curves.size(); ++j) {
      curves[j].grid.push_back(static_cast<int>(t));
      curves[j].values.push_back(ParseValue(fields[j + 1], line_number));
    }
  }
  if (!have_header) throw CurveError("curve file has no header");
  for (Curve& c : curves) {
    c.metadata = metadata;
    UpdateFirstDefined(c);
  }
  return curves;
}

std::vector<Curve> ReadCurvesCsv(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw CurveError("cannot read " + path);
  std::stringstream buffer;
  buffer << file.rdbuf();
  return ParseCurvesCsv(buffer.str());
}

}  // namespace oobcurve
