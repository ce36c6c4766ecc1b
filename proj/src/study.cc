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

#include "oobcurve/study.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "oobcurve/parallel.h"
#include "oobcurve/random.h"
#include "oobcurve/theory.h"

namespace oobcurve {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string SanitizeName(const std::string& text) {
  std::string out;
  for (const char c : text) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                      c == '_' || c == '.';
    if (keep) {
      out += c;
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "dataset" : out;
}

DatasetSource GeneratorSource(const std::string& name, const std::string& spec) {
  DatasetSource s;
  s.name = name;
  s.generator = ParseGeneratorSpec(spec);
  return s;
}

Json SourceToJson(const DatasetSource& s) {
  Json j;
  j["name"] = s.name;
  if (s.generator) {
    j["generator"] = s.generator->ToString();
  } else {
    j["path"] = s.path;
    j["target"] = s.target;
    if (s.task) j["task"] = TaskKindName(*s.task);
  }
  if (s.seed) j["seed"] = *s.seed;
  return j;
}

std::vector<DatasetSource> SourcesFromJson(const Json& j) {
  if (j.is_string()) return ParseDatasetSource(j.get<std::string>());
  if (!j.is_object()) throw StudyConfigError("dataset entries must be strings or objects");
  if (j.contains("suite")) {
    auto suite = BundledSuite(j.at("suite").get<std::string>());
    return suite;
  }
  DatasetSource s;
  if (j.contains("generator")) {
    s.generator = ParseGeneratorSpec(j.at("generator").get<std::string>());
  } else if (j.contains("path")) {
    s.path = j.at("path").get<std::string>();
    if (!j.contains("target")) throw StudyConfigError("dataset '" + s.path + "' needs a target");
    s.target = j.at("target").get<std::string>();
    if (j.contains("task")) {
      s.task = ParseTaskKind(j.at("task").get<std::string>());
      if (!s.task) throw StudyConfigError("unknown task '" + j.at("task").dump() + "'");
    }
  } else {
    throw StudyConfigError("dataset entry needs 'generator', 'path' or 'suite'");
  }
  if (j.contains("seed")) s.seed = j.at("seed").get<uint64_t>();
  if (j.contains("name")) {
    s.name = j.at("name").get<std::string>();
  } else if (s.generator) {
    s.name = SanitizeName(s.generator->ToString());
  } else {
    s.name = SanitizeName(fs::path(s.path).stem().string());
  }
  return {s};
}

std::vector<MeasureId> MeasuresFromJson(const Json& j) {
  std::vector<MeasureId> out;
  for (const auto& item : j) {
    const std::string name = item.get<std::string>();
    const auto id = ParseMeasure(name);
    if (!id) throw StudyConfigError("unknown measure '" + name + "'");
    out.push_back(*id);
  }
  return out;
}

Json MeasuresToJson(const std::vector<MeasureId>& ids) {
  Json out = Json::array();
  for (const MeasureId id : ids) out.push_back(MeasureName(id));
  return out;
}

Json ConfigToJson(const StudyConfig& c) {
  Json j;
  Json sources = Json::array();
  for (const DatasetSource& s : c.datasets) sources.push_back(SourceToJson(s));
  j["datasets"] = sources;
  j["num_trees"] = c.num_trees;
  j["repetitions"] = c.repetitions;
  j["paper_scale"] = c.paper_scale;
  j["master_seed"] = c.master_seed;
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  j["classification_measures"] = MeasuresToJson(c.classification_measures);
  j["regression_measures"] = MeasuresToJson(c.regression_measures);
  j["mtry"] = c.forest.tree.mtry;
  j["min_node_size"] = c.forest.tree.min_node_size;
  j["max_depth"] = c.forest.tree.max_depth;
  j["replace"] = c.forest.replace;
  j["sample_fraction"] = c.forest.sample_fraction;
  j["epsilon_trees"] = c.epsilon_trees;
  j["window_start"] = c.window_start;
  j["window_end"] = c.window_end;
  j["delta"] = c.delta;
  j["convergence_tolerance"] = c.convergence_tolerance;
  j["gain_start"] = c.gain_start;
  j["correlation_max_t"] = c.correlation_max_t;
  j["average_policy"] = AveragePolicyName(c.average_policy);
  j["output_grid"] = c.output_grid;
  return j;
}

StudyConfig ConfigFromJson(const Json& j) {
  if (!j.is_object()) throw StudyConfigError("study config must be a JSON object");
  static const std::set<std::string> known = [] {
    std::set<std::string> keys;
    const Json defaults = ConfigToJson(StudyConfig());
    for (const auto& [key, value] : defaults.items()) keys.insert(key);
    return keys;
  }();
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw StudyConfigError("unknown config field '" + key + "'");
  }
  StudyConfig c;
  try {
    if (j.contains("datasets")) {
      for (const auto& item : j.at("datasets")) {
        for (DatasetSource& s : SourcesFromJson(item)) c.datasets.push_back(std::move(s));
      }
    }
    const auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("num_trees", c.num_trees);
    get("repetitions", c.repetitions);
    get("paper_scale", c.paper_scale);
    get("master_seed", c.master_seed);
    get("output_dir", c.output_dir);
    get("threads", c.threads);
    if (j.contains("classification_measures")) {
      c.classification_measures = MeasuresFromJson(j.at("classification_measures"));
    }
    if (j.contains("regression_measures")) {
      c.regression_measures = MeasuresFromJson(j.at("regression_measures"));
    }
    get("mtry", c.forest.tree.mtry);
    get("min_node_size", c.forest.tree.min_node_size);
    get("max_depth", c.forest.tree.max_depth);
    get("replace", c.forest.replace);
    get("sample_fraction", c.forest.sample_fraction);
    get("epsilon_trees", c.epsilon_trees);
    get("window_start", c.window_start);
    get("window_end", c.window_end);
    get("delta", c.delta);
    get("convergence_tolerance", c.convergence_tolerance);
    get("gain_start", c.gain_start);
    get("correlation_max_t", c.correlation_max_t);
    if (j.contains("average_policy")) {
      c.average_policy = ParseAveragePolicy(j.at("average_policy").get<std::string>());
    }
    get("output_grid", c.output_grid);
  } catch (const nlohmann::json::exception& e) {
    throw StudyConfigError(std::string("bad config value: ") + e.what());
  } catch (const DatasetError& e) {
    throw StudyConfigError(e.what());
  } catch (const CurveError& e) {
    throw StudyConfigError(e.what());
  }
  return c;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("error writing " + path.string());
}

std::string FormatDouble(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

Json NonmonotonicityJson(const NonmonotonicityReport& r) {
  Json j;
  j["is_nonmonotone"] = r.is_nonmonotone;
  j["argmin_t"] = r.argmin_t;
  j["min_value"] = r.min_value;
  j["final_value"] = r.final_value;
  j["excess"] = r.excess;
  return j;
}

Json ConvergenceJson(const ConvergenceSummary& s) {
  Json j;
  j["t_at_tolerance"] = s.t_at_tolerance;
  j["effective_t"] = s.effective_t;
  j["converged"] = s.converged;
  j["t_max"] = s.t_max;
  j["gain_start_t"] = s.gain_start_t;
  j["start_value"] = s.start_value;
  j["final_value"] = s.final_value;
  j["gain"] = s.gain;
  return j;
}

// Per-dataset state shared by the work units of a study.
struct DatasetState {
  DatasetSource source;
  std::optional<Dataset> data;
  std::vector<MeasureId> measures;
  std::vector<std::vector<Curve>> runs;
  std::vector<std::string> unit_errors;
  std::optional<DifficultyVector> difficulties;
  std::string load_error;
};

struct WorkUnit {
  size_t dataset;
  // -1 estimates difficulties.
  int repetition;
};

void WriteDatasetOutputs(const StudyConfig& config, const DatasetState& state,
                         const DatasetOutcome& outcome, const fs::path& dir) {
  fs::create_directories(dir);
  const Dataset& data = *state.data;
  const int reps = config.effective_repetitions();

  std::vector<Curve> written = outcome.mean_curves;
  for (Curve& c : written) {
    c.metadata.erase("tie_seed");
    c.metadata["master_seed"] = std::to_string(config.master_seed);
    c.metadata["dataset"] = state.source.name;
    if (!config.output_grid.empty()) c = ThinCurve(c, config.output_grid);
  }
  WriteCurvesCsv(written, (dir / "curves.csv").string());

  Json nonmono;
  nonmono["window"] = {config.window_start, config.window_end};
  nonmono["delta"] = config.delta;
  Json per = Json::object();
  for (size_t m = 0; m < outcome.mean_curves.size(); ++m) {
    const auto& r = outcome.nonmonotonicity[m];
    per[outcome.mean_curves[m].measure] = r ? NonmonotonicityJson(*r) : Json();
  }
  nonmono["measures"] = per;
  WriteText(dir / "nonmonotonicity.json", nonmono.dump(2) + "\n");

  Json summary;
  summary["dataset"] = state.source.name;
  summary["task"] = TaskKindName(data.task());
  summary["rows"] = data.num_rows();
  summary["features"] = data.num_features();
  summary["dropped_rows"] = data.num_dropped_rows();
  summary["num_trees"] = config.num_trees;
  summary["repetitions"] = reps;
  summary["convergence_tolerance"] = config.convergence_tolerance;
  Json measures = Json::object();
  for (size_t m = 0; m < outcome.mean_curves.size(); ++m) {
    Json entry;
    entry["first_defined_t"] = outcome.mean_curves[m].first_defined_t;
    const auto& s = outcome.convergence[m];
    entry["convergence"] = s ? ConvergenceJson(*s) : Json();
    measures[outcome.mean_curves[m].measure] = entry;
  }
  summary["measures"] = measures;
  WriteText(dir / "summary.json", summary.dump(2) + "\n");

  if (state.difficulties) {
    const DifficultyVector& d = *state.difficulties;
    std::string eps = "row,label,epsilon\n";
    for (int i = 0; i < data.num_rows(); ++i) {
      eps += std::to_string(i) + "," + std::to_string(data.label(i)) + "," +
             FormatDouble(d.epsilons[i]) + "\n";
    }
    WriteText(dir / "epsilons.csv", eps);
    const Histogram h = DifficultyHistogram(d.epsilons);
    std::string hist = "bin_start,bin_end,count\n";
    for (size_t b = 0; b < h.counts.size(); ++b) {
      hist += FormatDouble(h.edges[b]) + "," + FormatDouble(h.edges[b + 1]) + "," +
              std::to_string(h.counts[b]) + "\n";
    }
    WriteText(dir / "epsilon_histogram.csv", hist);
    const std::vector<int> grid = written.front().grid;
    std::vector<Curve> analytic;
    for (const ExpectedMeasure m : {ExpectedMeasure::kErrorRate, ExpectedMeasure::kBrier,
                                    ExpectedMeasure::kLogLossTaylor}) {
      analytic.push_back(ExpectedCurve(d, grid, m, /*oob_adjust=*/true));
    }
    analytic.front().metadata["dataset"] = state.source.name;
    analytic.front().metadata["epsilon_trees"] = std::to_string(d.num_trees);
    WriteCurvesCsv(analytic, (dir / "analytic.csv").string());
  }
}

}  // namespace

std::vector<DatasetSource> BundledSuite(const std::string& name) {
  if (name == "clean") {
    return {GeneratorSource("gauss-sep3", "two-gaussians(n=200,p=5,sep=3)"),
            GeneratorSource("gauss-sep2", "two-gaussians(n=200,p=5,sep=2)")};
  }
  if (name == "noisy") {
    return {GeneratorSource("noise-flip10", "label-noise(n=200,p=4,flip=0.1)")};
  }
  if (name == "regression") {
    return {GeneratorSource("linreg-sd1", "linear-regression(n=200,p=5,noise=1)")};
  }
  if (name == "fig1-analog") {
    return {GeneratorSource("fig1-frac10", "fig1-analog(n=200,p=5,frac=0.1)"),
            GeneratorSource("fig1-frac15", "fig1-analog(n=200,p=4,frac=0.15)")};
  }
  if (name == "synthetic") {
    std::vector<DatasetSource> all;
    for (const char* part : {"clean", "noisy", "fig1-analog", "regression"}) {
      for (DatasetSource& s : BundledSuite(part)) all.push_back(std::move(s));
    }
    return all;
  }
  throw StudyConfigError("unknown suite '" + name + "'");
}

std::vector<std::string> BundledSuiteNames() {
  return {"clean", "noisy", "regression", "fig1-analog", "synthetic"};
}

std::vector<DatasetSource> ParseDatasetSource(const std::string& text) {
  if (text.rfind("suite:", 0) == 0) return BundledSuite(text.substr(6));
  if (text.find('(') != std::string::npos) {
    DatasetSource s;
    try {
      s.generator = ParseGeneratorSpec(text);
    } catch (const DatasetError& e) {
      throw StudyConfigError(e.what());
    }
    s.name = SanitizeName(s.generator->ToString());
    return {s};
  }
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ':')) parts.push_back(part);
  if (parts.size() < 2 || parts.size() > 3 || parts[0].empty() || parts[1].empty()) {
    throw StudyConfigError("expected <path>:<target>[:<task>], got '" + text + "'");
  }
  DatasetSource s;
  s.path = parts[0];
  s.target = parts[1];
  if (parts.size() == 3) {
    s.task = ParseTaskKind(parts[2]);
    if (!s.task) throw StudyConfigError("unknown task '" + parts[2] + "'");
  }
  s.name = SanitizeName(fs::path(s.path).stem().string());
  return {s};
}

StudyConfig ParseStudyConfig(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw StudyConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return ConfigFromJson(j);
}

StudyConfig LoadStudyConfig(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw StudyConfigError("cannot read config '" + path + "'");
  std::stringstream buffer;
  buffer << file.rdbuf();
  return ParseStudyConfig(buffer.str());
}

std::string StudyConfigToJson(const StudyConfig& config) {
  return ConfigToJson(config).dump(2) + "\n";
}

void ApplyConfigOverride(StudyConfig& config, const std::string& key,
                         const std::string& value) {
  Json j = ConfigToJson(config);
  if (!j.contains(key)) throw StudyConfigError("unknown config field '" + key + "'");
  Json parsed;
  if (key == "datasets") {
    if (!value.empty() && value[0] == '[') {
      parsed = Json::parse(value, nullptr, /*allow_exceptions=*/false);
      if (parsed.is_discarded()) throw StudyConfigError("datasets override is not JSON");
    } else {
      parsed = Json::array({value});
    }
  } else if (j.at(key).is_string()) {
    parsed = value;
  } else if (j.at(key).is_array()) {
    // Comma-separated list.
    parsed = Json::array();
    std::stringstream in(value);
    std::string item;
    const bool numeric = key == "output_grid";
    while (std::getline(in, item, ',')) {
      if (item.empty()) continue;
      if (numeric) {
        try {
          parsed.push_back(std::stoi(item));
        } catch (const std::exception&) {
          throw StudyConfigError("bad integer '" + item + "' for " + key);
        }
      } else {
        parsed.push_back(item);
      }
    }
  } else {
    parsed = Json::parse(value, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded() || parsed.is_string() || parsed.is_object() ||
        parsed.is_array()) {
      throw StudyConfigError("bad value '" + value + "' for " + key);
    }
  }
  j[key] = parsed;
  config = ConfigFromJson(j);
}

void ValidateStudyConfig(const StudyConfig& c) {
  if (c.datasets.empty()) throw StudyConfigError("no datasets configured");
  if (c.num_trees < 11) throw StudyConfigError("num_trees must be >= 11");
  if (c.repetitions < 1) throw StudyConfigError("repetitions must be >= 1");
  if (c.threads < 0) throw StudyConfigError("threads must be >= 0");
  if (c.epsilon_trees < 0) throw StudyConfigError("epsilon_trees must be >= 0");
  if (c.window_start < 1 || c.window_start > c.window_end) {
    throw StudyConfigError("window must satisfy 1 <= window_start <= window_end");
  }
  if (!(c.delta >= 0.0)) throw StudyConfigError("delta must be >= 0");
  if (!(c.convergence_tolerance >= 0.0)) {
    throw StudyConfigError("convergence_tolerance must be >= 0");
  }
  if (c.correlation_max_t < 3) throw StudyConfigError("correlation_max_t must be >= 3");
  if (c.forest.tree.mtry < 0 || c.forest.tree.min_node_size < 0 ||
      c.forest.tree.max_depth < 0) {
    throw StudyConfigError("tree parameters must be >= 0");
  }
  for (const MeasureId id : c.classification_measures) {
    if (!MeasureSupportsTask(id, TaskKind::kBinaryClassification)) {
      throw StudyConfigError(std::string("'") + MeasureName(id) +
                             "' is not a classification measure");
    }
  }
  for (const MeasureId id : c.regression_measures) {
    if (!MeasureSupportsTask(id, TaskKind::kRegression)) {
      throw StudyConfigError(std::string("'") + MeasureName(id) +
                             "' is not a regression measure");
    }
  }
  int previous = 0;
  for (const int t : c.output_grid) {
    if (t <= previous || t > c.num_trees) {
      throw StudyConfigError("output_grid must increase within [1, num_trees]");
    }
    previous = t;
  }
  std::set<std::string> names;
  for (const DatasetSource& s : c.datasets) {
    if (s.name.empty()) throw StudyConfigError("dataset without a name");
    if (!names.insert(s.name).second) {
      throw StudyConfigError("duplicate dataset name '" + s.name + "'");
    }
  }
}

bool StudyResult::any_failed() const {
  for (const DatasetOutcome& d : datasets) {
    if (!d.ok) return true;
  }
  return false;
}

int StudyResult::exit_code() const { return any_failed() ? 2 : 0; }

uint64_t DatasetSeed(uint64_t master_seed, const std::string& name) {
  return DeriveSeed(master_seed, HashName(name));
}

uint64_t RepetitionSeed(uint64_t master_seed, const std::string& name, int repetition) {
  return DeriveSeed(DatasetSeed(master_seed, name), static_cast<uint64_t>(repetition));
}

uint64_t RepetitionTieSeed(uint64_t master_seed, const std::string& name,
                           int repetition) {
  return DeriveSeed(RepetitionSeed(master_seed, name, repetition), HashName("ties"));
}

Dataset MaterializeDataset(const DatasetSource& source, uint64_t master_seed) {
  if (source.generator) {
    const uint64_t seed = source.seed.value_or(
        DeriveSeed(DatasetSeed(master_seed, source.name), HashName("data")));
    return Synthesize(*source.generator, seed);
  }
  return LoadCsv(source.path, source.target, source.task);
}

StudyResult RunStudy(const StudyConfig& config, std::ostream* log) {
  ValidateStudyConfig(config);
  const int threads = config.threads > 0 ? config.threads : DefaultThreads();
  const int reps = config.effective_repetitions();
  const fs::path out_dir(config.output_dir);
  fs::create_directories(out_dir);

  std::vector<DatasetState> states(config.datasets.size());
  std::vector<WorkUnit> units;
  for (size_t d = 0; d < states.size(); ++d) {
    DatasetState& st = states[d];
    st.source = config.datasets[d];
    try {
      st.data = MaterializeDataset(st.source, config.master_seed);
      const bool regression = st.data->task() == TaskKind::kRegression;
      st.measures = regression ? config.regression_measures
                               : config.classification_measures;
      if (st.measures.empty()) st.measures = DefaultMeasures(st.data->task());
      CheckMeasures(st.measures, st.data->task());
      ResolveTreeParams(config.forest.tree, *st.data);
    } catch (const std::exception& e) {
      st.data.reset();
      st.load_error = e.what();
      if (log) *log << "dataset " << st.source.name << ": " << e.what() << "\n";
      continue;
    }
    st.runs.resize(reps);
    st.unit_errors.resize(reps + 1);
    for (int r = 0; r < reps; ++r) units.push_back({d, r});
    if (st.data->task() == TaskKind::kBinaryClassification && config.epsilon_trees > 0) {
      units.push_back({d, -1});
    }
  }

  ParallelFor(static_cast<int>(units.size()), threads, [&](int u) {
    const WorkUnit unit = units[u];
    DatasetState& st = states[unit.dataset];
    const std::string& name = st.source.name;
    try {
      if (unit.repetition < 0) {
        const uint64_t seed =
            DeriveSeed(DatasetSeed(config.master_seed, name), HashName("epsilons"));
        st.difficulties = EstimateDifficulties(*st.data, config.epsilon_trees,
                                               config.forest, seed, 1);
      } else {
        st.runs[unit.repetition] = StreamOobCurves(
            *st.data, config.num_trees, config.forest,
            RepetitionSeed(config.master_seed, name, unit.repetition), st.measures,
            RepetitionTieSeed(config.master_seed, name, unit.repetition), 1);
      }
    } catch (const std::exception& e) {
      st.unit_errors[unit.repetition < 0 ? reps : unit.repetition] = e.what();
    }
  });

  StudyResult result;
  std::vector<std::string> corr_names;
  std::vector<CorrelationMatrix> corr_matrices;
  Json outcomes = Json::array();
  Json corr_skipped = Json::object();
  for (DatasetState& st : states) {
    DatasetOutcome outcome;
    outcome.name = st.source.name;
    outcome.error = st.load_error;
    if (outcome.error.empty()) {
      for (const std::string& e : st.unit_errors) {
        if (!e.empty()) {
          outcome.error = e;
          break;
        }
      }
    }
    if (outcome.error.empty()) {
      try {
        outcome.task = st.data->task();
        for (size_t m = 0; m < st.measures.size(); ++m) {
          std::vector<Curve> per_run;
          per_run.reserve(reps);
          for (int r = 0; r < reps; ++r) per_run.push_back(st.runs[r][m]);
          Curve mean = AverageCurves(per_run, config.average_policy);
          mean.metadata["trees"] = std::to_string(config.num_trees);
          std::optional<NonmonotonicityReport> nm;
          std::optional<ConvergenceSummary> conv;
          try {
            nm = AnalyzeNonmonotonicity(mean, config.window_start, config.window_end,
                                        config.delta);
          } catch (const CurveError&) {
          }
          try {
            conv = SummarizeConvergence(mean, config.convergence_tolerance,
                                        config.gain_start);
          } catch (const CurveError&) {
          }
          outcome.mean_curves.push_back(std::move(mean));
          outcome.nonmonotonicity.push_back(nm);
          outcome.convergence.push_back(conv);
        }
        WriteDatasetOutputs(config, st, outcome, out_dir / st.source.name);
        outcome.ok = true;
      } catch (const std::exception& e) {
        outcome.error = e.what();
      }
    }
    st.runs.clear();
    Json entry;
    entry["name"] = outcome.name;
    entry["status"] = outcome.ok ? "ok" : "failed";
    if (!outcome.ok) {
      entry["error"] = outcome.error;
      if (log) *log << "dataset " << outcome.name << " failed: " << outcome.error << "\n";
    } else {
      entry["task"] = TaskKindName(outcome.task);
      Json flagged = Json::array();
      for (size_t m = 0; m < outcome.mean_curves.size(); ++m) {
        const auto& nm = outcome.nonmonotonicity[m];
        if (nm && nm->is_nonmonotone) flagged.push_back(outcome.mean_curves[m].measure);
      }
      entry["nonmonotone_measures"] = flagged;
      if (outcome.mean_curves.size() >= 2) {
        try {
          corr_matrices.push_back(
              CorrelateCurves(outcome.mean_curves, config.correlation_max_t));
          corr_names.push_back(outcome.name);
        } catch (const CorrelationError& e) {
          corr_skipped[outcome.name] = e.what();
        }
      }
      if (log) *log << "dataset " << outcome.name << ": done\n";
    }
    outcomes.push_back(entry);
    result.datasets.push_back(std::move(outcome));
  }

  result.correlation = BuildCorrelationReport(corr_names, corr_matrices);
  WriteText(out_dir / "correlation.json", CorrelationReportToJson(result.correlation));
  Json study;
  study["config"] = ConfigToJson(config);
  study["effective_repetitions"] = reps;
  study["datasets"] = outcomes;
  study["correlation_skipped"] = corr_skipped;
  WriteText(out_dir / "study.json", study.dump(2) + "\n");
  return result;
}

}  // namespace oobcurve
