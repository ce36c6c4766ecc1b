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

// Repeated-forest studies: for every dataset, grow R forests of T trees with
// independent seeds, average their OOB curves and summarise them.
//
// Output layout under `output_dir`:
//   <dataset>/curves.csv            averaged OOB curves, one column per measure
//   <dataset>/nonmonotonicity.json  per-measure non-monotonicity reports
//   <dataset>/summary.json          convergence and gain per measure
//   <dataset>/epsilons.csv          estimated difficulties (binary tasks)
//   <dataset>/epsilon_histogram.csv
//   <dataset>/analytic.csv          expected curves from the difficulties
//   correlation.json                curve correlations per dataset + average
//   study.json                      resolved configuration and outcomes
//
// Every random stream is derived from (master_seed, dataset name, repetition),
// so results do not depend on the number of threads or on the other datasets.

#ifndef OOBCURVE_STUDY_H_
#define OOBCURVE_STUDY_H_

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oobcurve/correlation.h"
#include "oobcurve/curve.h"
#include "oobcurve/dataset.h"
#include "oobcurve/forest.h"
#include "oobcurve/measures.h"

namespace oobcurve {

class StudyConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DatasetSource {
  // Output directory name; defaults to the generator spec or the file stem.
  std::string name;
  std::optional<GeneratorSpec> generator;
  std::string path;
  std::string target;
  std::optional<TaskKind> task;
  // Generator seed; derived from the master seed and name when absent.
  std::optional<uint64_t> seed;
};

// Named lists of bundled generator datasets: "clean", "noisy", "regression",
// "fig1-analog" and "synthetic" (all of them).
std::vector<DatasetSource> BundledSuite(const std::string& name);
std::vector<std::string> BundledSuiteNames();

// Parses "two-gaussians(n=200,p=5,sep=3)", "suite:<name>" or
// "<path>:<target>[:<task>]".
std::vector<DatasetSource> ParseDatasetSource(const std::string& text);

inline constexpr int kPaperScaleRepetitions = 1000;

struct StudyConfig {
  std::vector<DatasetSource> datasets;
  int num_trees = 2000;
  int repetitions = 100;
  // Raises the repetitions to kPaperScaleRepetitions.
  bool paper_scale = false;
  uint64_t master_seed = 1;
  std::string output_dir = "study_output";
  // 0 uses DefaultThreads().
  int threads = 0;
  // Empty lists select DefaultMeasures().
  std::vector<MeasureId> classification_measures;
  std::vector<MeasureId> regression_measures;
  ForestParams forest;
  // Trees of the forest used to estimate difficulties; 0 disables it.
  int epsilon_trees = 10000;
  int window_start = kDefaultWindowStart;
  int window_end = kDefaultWindowEnd;
  double delta = kDefaultNonmonotonicityDelta;
  double convergence_tolerance = 0.005;
  int gain_start = kDefaultGainStart;
  int correlation_max_t = kDefaultCorrelationMaxT;
  AveragePolicy average_policy = AveragePolicy::kAllDefined;
  // Tree counts written to curves.csv; empty writes every T.
  std::vector<int> output_grid;

  int effective_repetitions() const {
    return paper_scale ? std::max(repetitions, kPaperScaleRepetitions) : repetitions;
  }
};

StudyConfig ParseStudyConfig(const std::string& json_text);
StudyConfig LoadStudyConfig(const std::string& path);
std::string StudyConfigToJson(const StudyConfig& config);
// Sets one top-level field from its command-line text, e.g. ("num_trees",
// "500") or ("datasets", "suite:clean").
void ApplyConfigOverride(StudyConfig& config, const std::string& key,
                         const std::string& value);
// Throws StudyConfigError on invalid settings.
void ValidateStudyConfig(const StudyConfig& config);

struct DatasetOutcome {
  std::string name;
  bool ok = false;
  std::string error;
  TaskKind task = TaskKind::kBinaryClassification;
  // Averaged curves and their summaries, one per measure. A summary is empty
  // when the curve is not defined where it needs to be.
  std::vector<Curve> mean_curves;
  std::vector<std::optional<NonmonotonicityReport>> nonmonotonicity;
  std::vector<std::optional<ConvergenceSummary>> convergence;
};

struct StudyResult {
  std::vector<DatasetOutcome> datasets;
  CorrelationReport correlation;

  bool any_failed() const;
  // 0 when every dataset succeeded, 2 otherwise.
  int exit_code() const;
};

// Seeds of the repetition streams.
uint64_t DatasetSeed(uint64_t master_seed, const std::string& name);
uint64_t RepetitionSeed(uint64_t master_seed, const std::string& name, int repetition);
uint64_t RepetitionTieSeed(uint64_t master_seed, const std::string& name,
                           int repetition);

// Runs the study and writes its outputs. Dataset failures are recorded in the
// result and never abort the other datasets. Progress goes to `log` if given.
StudyResult RunStudy(const StudyConfig& config, std::ostream* log = nullptr);

// Loads or synthesizes one dataset source.
Dataset MaterializeDataset(const DatasetSource& source, uint64_t master_seed);

}  // namespace oobcurve

#endif  // OOBCURVE_STUDY_H_
