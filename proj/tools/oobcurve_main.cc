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

// oobcurve command-line interface.
//
//   oobcurve train     --data SOURCE [--trees T] [--seed S] [--out curves.csv]
//   oobcurve study     --config study.json [--<field> value ...]
//   oobcurve theory    --eps 0.05,0.6 | --eps-file eps.csv [--grid 1:2000]
//   oobcurve epsilons  --data SOURCE [--trees 10000] [--out eps.csv]
//   oobcurve correlate --curves a.csv b.csv [--max-t 500]
//   oobcurve report    --study DIR | --curves curves.csv
//
// SOURCE is a generator spec such as "two-gaussians(n=200,p=5,sep=3)" or
// "<file.csv>:<target>[:<task>]". Exit codes: 0 success, 1 usage or
// configuration error, 2 when some study datasets failed.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "oobcurve/correlation.h"
#include "oobcurve/curve.h"
#include "oobcurve/dataset.h"
#include "oobcurve/forest.h"
#include "oobcurve/measures.h"
#include "oobcurve/parallel.h"
#include "oobcurve/random.h"
#include "oobcurve/study.h"
#include "oobcurve/theory.h"

namespace oobcurve {
namespace {

namespace fs = std::filesystem;

// Raised for invalid command-line input; maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> SplitList(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "a:b" (inclusive range), "a:b:step" or "t1,t2,...".
std::vector<int> ParseGrid(const std::string& text) {
  std::vector<int> grid;
  try {
    if (text.find(':') != std::string::npos) {
      const auto parts = SplitList(text, ':');
      if (parts.size() < 2 || parts.size() > 3) throw UsageError("bad grid");
      const int lo = std::stoi(parts[0]);
      const int hi = std::stoi(parts[1]);
      const int step = parts.size() == 3 ? std::stoi(parts[2]) : 1;
      if (lo < 1 || hi < lo || step < 1) throw UsageError("bad grid");
      for (int t = lo; t <= hi; t += step) grid.push_back(t);
    } else {
      for (const std::string& item : SplitList(text)) grid.push_back(std::stoi(item));
    }
  } catch (const std::logic_error&) {
    throw UsageError("bad grid '" + text + "'");
  }
  for (size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1 || (i > 0 && grid[i] <= grid[i - 1])) {
      throw UsageError("grid '" + text + "' must be positive and increasing");
    }
  }
  if (grid.empty()) throw UsageError("empty grid");
  return grid;
}

std::vector<MeasureId> ParseMeasureList(const std::string& text, TaskKind task) {
  if (text.empty()) return DefaultMeasures(task);
  std::vector<MeasureId> out;
  for (const std::string& name : SplitList(text)) {
    const auto id = ParseMeasure(name);
    if (!id) throw UsageError("unknown measure '" + name + "'");
    out.push_back(*id);
  }
  return out;
}

Dataset LoadSource(const std::string& text, uint64_t seed) {
  const std::vector<DatasetSource> sources = ParseDatasetSource(text);
  if (sources.size() != 1) throw UsageError("expected a single dataset, got a suite");
  DatasetSource source = sources.front();
  if (source.generator) source.seed = seed;
  return MaterializeDataset(source, seed);
}

void Emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

std::string FormatDouble(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

struct ForestOptions {
  int mtry = 0;
  int min_node_size = 0;
  int max_depth = 0;
  int threads = 0;

  void Register(CLI::App* app) {
    app->add_option("--mtry", mtry, "Candidate features per split (0 = default)");
    app->add_option("--min-node-size", min_node_size, "Minimum node size (0 = default)");
    app->add_option("--max-depth", max_depth, "Depth cap (0 = none)");
    app->add_option("--threads", threads,
                    std::string("Worker threads (0 = $") + kThreadsEnvVar + ")");
  }
  ForestParams params() const {
    ForestParams p;
    p.tree.mtry = mtry;
    p.tree.min_node_size = min_node_size;
    p.tree.max_depth = max_depth;
    return p;
  }
  int num_threads() const { return threads > 0 ? threads : DefaultThreads(); }
};

// --- train -----------------------------------------------------------------

struct TrainCommand {
  std::string data;
  int trees = 500;
  uint64_t seed = 1;
  uint64_t tie_seed = 0;
  bool has_tie_seed = false;
  std::string measures;
  std::string grid;
  std::string out;
  std::string save_forest;
  std::string load_forest;
  ForestOptions forest;

  void Register(CLI::App& parent) {
    CLI::App* cmd = parent.add_subcommand("train", "Fit one forest and emit its OOB curves");
    cmd->add_option("--data", data, "Dataset source")->required();
    cmd->add_option("--trees", trees, "Number of trees");
    cmd->add_option("--seed", seed, "Master seed (also seeds generators)");
    cmd->add_option("--tie-seed", tie_seed, "Seed of the vote tie-breaking stream")
        ->each([this](const std::string&) { has_tie_seed = true; });
    cmd->add_option("--measures", measures, "Comma-separated measures");
    cmd->add_option("--grid", grid, "Tree counts to write, e.g. 1:2000:10");
    cmd->add_option("--out", out, "Curve CSV path (default stdout)");
    cmd->add_option("--save-forest", save_forest, "Write the forest as JSON");
    cmd->add_option("--load-forest", load_forest, "Reuse a saved forest");
    forest.Register(cmd);
    cmd->callback([this] { Run(); });
  }

  void Run() {
    const Dataset dataset = LoadSource(data, seed);
    const auto ids = ParseMeasureList(measures, dataset.task());
    const uint64_t ties = has_tie_seed ? tie_seed : DeriveSeed(seed, HashName("ties"));
    Forest f = load_forest.empty()
                   ? TrainForest(dataset, trees, forest.params(), seed,
                                 forest.num_threads())
                   : LoadForest(load_forest);
    if (!save_forest.empty()) SaveForest(f, save_forest);
    std::vector<Curve> curves = ComputeOobCurves(f, dataset, ids, ties);
    for (Curve& c : curves) {
      c.metadata["dataset"] = data;
      if (!grid.empty()) c = ThinCurve(c, ParseGrid(grid));
    }
    Emit(FormatCurvesCsv(curves), out);
  }
};

// --- study -----------------------------------------------------------------

struct StudyCommand {
  CLI::App* cmd = nullptr;
  std::string config_path;
  bool paper_scale = false;
  int exit_code = 0;

  void Register(CLI::App& parent) {
    cmd = parent.add_subcommand("study", "Run the repeated-forest study protocol");
    cmd->add_option("--config", config_path, "Study configuration (JSON)");
    cmd->add_flag("--paper-scale", paper_scale, "Use 1000 repetitions");
    cmd->allow_extras();
    cmd->footer("Any config field can be overridden with --<field> <value>, e.g.\n"
                "  --num_trees 500 --repetitions 10 --datasets suite:clean");
    cmd->callback([this] { Run(); });
  }

  void Run() {
    StudyConfig config;
    try {
      if (!config_path.empty()) config = LoadStudyConfig(config_path);
      const std::vector<std::string> extras = cmd->remaining();
      for (size_t i = 0; i < extras.size(); ++i) {
        std::string key = extras[i];
        if (key.rfind("--", 0) != 0) throw StudyConfigError("unexpected argument '" + key + "'");
        key = key.substr(2);
        std::replace(key.begin(), key.end(), '-', '_');
        std::string value;
        const size_t eq = key.find('=');
        if (eq != std::string::npos) {
          value = key.substr(eq + 1);
          key = key.substr(0, eq);
        } else {
          if (i + 1 >= extras.size()) throw StudyConfigError("--" + key + " needs a value");
          value = extras[++i];
        }
        ApplyConfigOverride(config, key, value);
      }
      if (paper_scale) config.paper_scale = true;
      ValidateStudyConfig(config);
    } catch (const StudyConfigError& e) {
      throw UsageError(e.what());
    }
    const StudyResult result = RunStudy(config, &std::cerr);
    for (const DatasetOutcome& d : result.datasets) {
      std::cout << d.name << ": " << (d.ok ? "ok" : "FAILED (" + d.error + ")") << "\n";
    }
    exit_code = result.exit_code();
  }
};

// --- theory ----------------------------------------------------------------

std::vector<double> ReadEpsilons(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::vector<double> eps;
  std::string line;
  int column = -1;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = SplitList(line);
    if (first) {
      first = false;
      const auto it = std::find(fields.begin(), fields.end(), "epsilon");
      if (it != fields.end()) {
        column = static_cast<int>(it - fields.begin());
        continue;
      }
    }
    const size_t idx = column < 0 ? 0 : column;
    if (idx >= fields.size()) throw UsageError("short line in " + path);
    try {
      eps.push_back(std::stod(fields[idx]));
    } catch (const std::logic_error&) {
      throw UsageError("bad value '" + fields[idx] + "' in " + path);
    }
  }
  return eps;
}

struct TheoryCommand {
  std::string eps_list;
  std::string eps_file;
  std::string grid = "1:2000";
  std::string measures = "error_rate,brier,logloss_taylor";
  bool oob_adjust = false;
  double offset = kLogLossOffset;
  std::string out;

  void Register(CLI::App& parent) {
    CLI::App* cmd = parent.add_subcommand("theory", "Emit expected curves from difficulties");
    auto* list = cmd->add_option("--eps", eps_list, "Comma-separated difficulties");
    auto* file = cmd->add_option("--eps-file", eps_file,
                                 "CSV with an 'epsilon' column, or one value per line");
    list->excludes(file);
    cmd->add_option("--grid", grid, "Tree counts, e.g. 1:2000 or 1,10,100");
    cmd->add_option("--measures", measures,
                    "error_rate, brier, logloss_taylor, logloss_exact");
    cmd->add_flag("--oob-adjust", oob_adjust, "Use T*exp(-1) trees");
    cmd->add_option("--offset", offset, "Log-loss offset");
    cmd->add_option("--out", out, "Curve CSV path (default stdout)");
    cmd->callback([this] { Run(); });
  }

  void Run() {
    DifficultyVector d;
    if (!eps_file.empty()) {
      d.epsilons = ReadEpsilons(eps_file);
    } else {
      for (const std::string& item : SplitList(eps_list)) {
        try {
          d.epsilons.push_back(std::stod(item));
        } catch (const std::logic_error&) {
          throw UsageError("bad difficulty '" + item + "'");
        }
      }
    }
    if (d.epsilons.empty()) throw UsageError("no difficulties given (--eps or --eps-file)");
    const std::vector<int> t = ParseGrid(grid);
    std::vector<Curve> curves;
    for (const std::string& name : SplitList(measures)) {
      curves.push_back(
          ExpectedCurve(d, t, ParseExpectedMeasure(name), oob_adjust, offset));
    }
    if (curves.empty()) throw UsageError("no measures requested");
    Emit(FormatCurvesCsv(curves), out);
  }
};

// --- epsilons --------------------------------------------------------------

struct EpsilonsCommand {
  std::string data;
  int trees = 10000;
  uint64_t seed = 1;
  std::string out;
  std::string histogram;
  int bins = 20;
  ForestOptions forest;

  void Register(CLI::App& parent) {
    CLI::App* cmd = parent.add_subcommand(
        "epsilons", "Estimate per-observation difficulties with a large forest");
    cmd->add_option("--data", data, "Binary dataset source")->required();
    cmd->add_option("--trees", trees, "Forest size");
    cmd->add_option("--seed", seed, "Master seed");
    cmd->add_option("--out", out, "Difficulty CSV (default stdout)");
    cmd->add_option("--histogram", histogram, "Histogram CSV path");
    cmd->add_option("--bins", bins, "Histogram bins");
    forest.Register(cmd);
    cmd->callback([this] { Run(); });
  }

  void Run() {
    const Dataset dataset = LoadSource(data, seed);
    const DifficultyVector d = EstimateDifficulties(dataset, trees, forest.params(),
                                                    seed, forest.num_threads());
    std::string text = "row,label,epsilon\n";
    for (int i = 0; i < dataset.num_rows(); ++i) {
      text += std::to_string(i) + "," + std::to_string(dataset.label(i)) + "," +
              FormatDouble(d.epsilons[i]) + "\n";
    }
    Emit(text, out);
    if (!histogram.empty()) {
      const Histogram h = DifficultyHistogram(d.epsilons, bins);
      std::string hist = "bin_start,bin_end,count\n";
      for (size_t b = 0; b < h.counts.size(); ++b) {
        hist += FormatDouble(h.edges[b]) + "," + FormatDouble(h.edges[b + 1]) + "," +
                std::to_string(h.counts[b]) + "\n";
      }
      Emit(hist, histogram);
    }
  }
};

// --- correlate -------------------------------------------------------------

struct CorrelateCommand {
  std::vector<std::string> files;
  int max_t = kDefaultCorrelationMaxT;
  std::string out;

  void Register(CLI::App& parent) {
    CLI::App* cmd = parent.add_subcommand(
        "correlate", "Correlate the measure curves of one or more curve files");
    cmd->add_option("--curves", files, "Curve CSV files, one per dataset")->required();
    cmd->add_option("--max-t", max_t, "Largest tree count used");
    cmd->add_option("--out", out, "Report JSON path (default stdout)");
    cmd->callback([this] { Run(); });
  }

  void Run() {
    std::vector<std::string> names;
    std::vector<CorrelationMatrix> matrices;
    for (const std::string& file : files) {
      const std::vector<Curve> curves = ReadCurvesCsv(file);
      const auto it = curves.front().metadata.find("dataset");
      names.push_back(it != curves.front().metadata.end() ? it->second
                                                          : fs::path(file).string());
      matrices.push_back(CorrelateCurves(curves, max_t));
    }
    Emit(CorrelationReportToJson(BuildCorrelationReport(names, matrices)), out);
  }
};

// --- report ----------------------------------------------------------------

struct ReportCommand {
  std::string study_dir;
  std::string curves_file;
  int window_start = kDefaultWindowStart;
  int window_end = kDefaultWindowEnd;
  double delta = kDefaultNonmonotonicityDelta;
  double tolerance = 0.005;

  void Register(CLI::App& parent) {
    CLI::App* cmd = parent.add_subcommand(
        "report", "Summarise curves: non-monotonicity, gain and convergence");
    auto* study = cmd->add_option("--study", study_dir, "Study output directory");
    auto* curves = cmd->add_option("--curves", curves_file, "A single curve CSV");
    study->excludes(curves);
    cmd->add_option("--window-start", window_start, "Window start");
    cmd->add_option("--window-end", window_end, "Window end");
    cmd->add_option("--delta", delta, "Non-monotonicity threshold");
    cmd->add_option("--tolerance", tolerance, "Convergence tolerance");
    cmd->callback([this] { Run(); });
  }

  void PrintFile(const std::string& label, const std::string& path) {
    std::printf("%s\n", label.c_str());
    std::printf("  %-20s %8s %10s %10s %10s %6s %8s %10s\n", "measure", "first_T",
                "min", "argmin_T", "final", "nonmono", "T_tol", "gain");
    for (const Curve& c : ReadCurvesCsv(path)) {
      std::string nm = "n/a";
      std::string min = "NA", argmin = "NA", final_v = "NA", t_tol = "NA", gain = "NA";
      try {
        const NonmonotonicityReport r =
            AnalyzeNonmonotonicity(c, window_start, window_end, delta);
        nm = r.is_nonmonotone ? "yes" : "no";
        min = FormatShort(r.min_value);
        argmin = std::to_string(r.argmin_t);
        final_v = FormatShort(r.final_value);
      } catch (const CurveError&) {
      }
      try {
        const ConvergenceSummary s = SummarizeConvergence(c, tolerance);
        t_tol = std::to_string(s.t_at_tolerance) + (s.converged ? "" : "*");
        gain = FormatShort(s.gain);
      } catch (const CurveError&) {
      }
      std::printf("  %-20s %8d %10s %10s %10s %6s %8s %10s\n", c.measure.c_str(),
                  c.first_defined_t, min.c_str(), argmin.c_str(), final_v.c_str(),
                  nm.c_str(), t_tol.c_str(), gain.c_str());
    }
  }

  static std::string FormatShort(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.5f", v);
    return buffer;
  }

  void Run() {
    if (!curves_file.empty()) {
      PrintFile(curves_file, curves_file);
      return;
    }
    if (study_dir.empty()) throw UsageError("give --study or --curves");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(study_dir)) {
      const fs::path candidate = entry.path() / "curves.csv";
      if (entry.is_directory() && fs::exists(candidate)) files.push_back(candidate);
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw UsageError("no curves.csv found under " + study_dir);
    for (const fs::path& f : files) {
      PrintFile(f.parent_path().filename().string(), f.string());
    }
  }
};

int Main(int argc, char** argv) {
  CLI::App app{"Out-of-bag performance curves of random forests"};
  app.require_subcommand(1);
  TrainCommand train;
  StudyCommand study;
  TheoryCommand theory;
  EpsilonsCommand epsilons;
  CorrelateCommand correlate;
  ReportCommand report;
  train.Register(app);
  study.Register(app);
  theory.Register(app);
  epsilons.Register(app);
  correlate.Register(app);
  report.Register(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return study.exit_code;
}

}  // namespace
}  // namespace oobcurve

int main(int argc, char** argv) { return oobcurve::Main(argc, argv); }
