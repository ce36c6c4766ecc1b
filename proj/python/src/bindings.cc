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

// Python bindings for the oobcurve core library.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "oobcurve/correlation.h"
#include "oobcurve/curve.h"
#include "oobcurve/dataset.h"
#include "oobcurve/forest.h"
#include "oobcurve/measures.h"
#include "oobcurve/study.h"
#include "oobcurve/theory.h"

namespace py = pybind11;

namespace oobcurve {
namespace {

std::vector<MeasureId> ToMeasures(const std::vector<std::string>& names) {
  std::vector<MeasureId> out;
  for (const std::string& name : names) {
    const auto id = ParseMeasure(name);
    if (!id) throw py::value_error("unknown measure '" + name + "'");
    out.push_back(*id);
  }
  return out;
}

std::vector<MeasureId> MeasuresOrDefault(const std::optional<std::vector<std::string>>& names,
                                         TaskKind task) {
  return names ? ToMeasures(*names) : DefaultMeasures(task);
}

py::array_t<double> ToArray(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

// Row-major n x K probability matrix as a flat vector.
std::vector<double> FlattenProbabilities(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& p, size_t n,
    int* num_classes) {
  if (p.ndim() != 2 || static_cast<size_t>(p.shape(0)) != n) {
    throw py::value_error("probabilities must be an n x K array");
  }
  *num_classes = static_cast<int>(p.shape(1));
  return std::vector<double>(p.data(), p.data() + p.size());
}

ForestParams MakeForestParams(int mtry, int min_node_size, int max_depth, bool replace,
                              double sample_fraction) {
  ForestParams params;
  params.tree.mtry = mtry;
  params.tree.min_node_size = min_node_size;
  params.tree.max_depth = max_depth;
  params.replace = replace;
  params.sample_fraction = sample_fraction;
  return params;
}

py::dict CurvesDict(const std::vector<Curve>& curves) {
  py::dict out;
  for (const Curve& c : curves) out[py::str(c.measure)] = c;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Out-of-bag performance curves of random forests.";

  py::register_exception<DatasetError>(m, "DatasetError", PyExc_ValueError);
  py::register_exception<MeasureError>(m, "MeasureError", PyExc_ValueError);
  py::register_exception<TheoryError>(m, "TheoryError", PyExc_ValueError);
  py::register_exception<CurveError>(m, "CurveError", PyExc_ValueError);
  py::register_exception<CorrelationError>(m, "CorrelationError", PyExc_ValueError);
  py::register_exception<StudyConfigError>(m, "StudyConfigError", PyExc_ValueError);
  py::register_exception<ForestError>(m, "ForestError", PyExc_ValueError);

  // --- datasets ---
  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("num_rows", &Dataset::num_rows)
      .def_property_readonly("num_features", &Dataset::num_features)
      .def_property_readonly("num_classes", &Dataset::num_classes)
      .def_property_readonly("task", [](const Dataset& d) { return TaskKindName(d.task()); })
      .def_property_readonly("class_labels", &Dataset::class_labels)
      .def_property_readonly("target_name", &Dataset::target_name)
      .def_property_readonly("num_dropped_rows", &Dataset::num_dropped_rows)
      .def_property_readonly("feature_names",
                             [](const Dataset& d) {
                               std::vector<std::string> names;
                               for (const ColumnSpec& c : d.columns()) names.push_back(c.name);
                               return names;
                             })
      .def_property_readonly("features",
                             [](const Dataset& d) {
                               py::array_t<double> out({d.num_rows(), d.num_features()});
                               auto view = out.mutable_unchecked<2>();
                               for (int i = 0; i < d.num_rows(); ++i) {
                                 for (int j = 0; j < d.num_features(); ++j) {
                                   view(i, j) = d.feature(i, j);
                                 }
                               }
                               return out;
                             })
      .def_property_readonly("response",
                             [](const Dataset& d) {
                               return ToArray({d.response().begin(), d.response().end()});
                             })
      .def("to_csv", &FormatCsv)
      .def("__repr__", [](const Dataset& d) {
        return "<Dataset rows=" + std::to_string(d.num_rows()) +
               " features=" + std::to_string(d.num_features()) + " task=" +
               TaskKindName(d.task()) + ">";
      });

  const auto task_arg = [](const std::optional<std::string>& task) -> std::optional<TaskKind> {
    if (!task) return std::nullopt;
    const auto kind = ParseTaskKind(*task);
    if (!kind) throw py::value_error("unknown task '" + *task + "'");
    return kind;
  };
  m.def("load_csv",
        [task_arg](const std::string& path, const std::string& target,
                   std::optional<std::string> task) {
          return LoadCsv(path, target, task_arg(task));
        },
        py::arg("path"), py::arg("target"), py::arg("task") = py::none());
  m.def("parse_csv",
        [task_arg](const std::string& text, const std::string& target,
                   std::optional<std::string> task) {
          return ParseCsv(text, target, task_arg(task));
        },
        py::arg("text"), py::arg("target"), py::arg("task") = py::none());
  m.def("synthesize",
        [](const std::string& spec, uint64_t seed) {
          return Synthesize(ParseGeneratorSpec(spec), seed);
        },
        py::arg("spec"), py::arg("seed"),
        "Generates a bundled dataset, e.g. synthesize('two-gaussians(n=200,p=5,sep=3)', 1).");

  // --- forests ---
  py::class_<Forest>(m, "Forest")
      .def_property_readonly("num_trees", &Forest::num_trees)
      .def_property_readonly("num_rows", &Forest::num_rows)
      .def_property_readonly("master_seed", &Forest::master_seed)
      .def("inbag",
           [](const Forest& f, int t) {
             if (t < 0 || t >= f.num_trees()) throw py::index_error("tree index");
             const auto in = f.inbag(t);
             return py::array_t<uint16_t>(static_cast<py::ssize_t>(in.size()), in.data());
           })
      .def("save", [](const Forest& f, const std::string& path) { SaveForest(f, path); })
      .def_static("load", &LoadForest);
  m.def("train_forest",
        [](const Dataset& data, int num_trees, uint64_t seed, int mtry, int min_node_size,
           int max_depth, bool replace, double sample_fraction, int threads) {
          py::gil_scoped_release release;
          return TrainForest(data, num_trees,
                             MakeForestParams(mtry, min_node_size, max_depth, replace,
                                              sample_fraction),
                             seed, threads);
        },
        py::arg("data"), py::arg("num_trees"), py::arg("seed"), py::arg("mtry") = 0,
        py::arg("min_node_size") = 0, py::arg("max_depth") = 0, py::arg("replace") = true,
        py::arg("sample_fraction") = 0.632, py::arg("threads") = 1);

  // --- curves ---
  py::class_<Curve>(m, "Curve")
      .def_readonly("measure", &Curve::measure)
      .def_readonly("first_defined_t", &Curve::first_defined_t)
      .def_readonly("metadata", &Curve::metadata)
      .def_property_readonly("grid",
                             [](const Curve& c) {
                               return py::array_t<int>(static_cast<py::ssize_t>(c.grid.size()),
                                                       c.grid.data());
                             })
      .def_property_readonly("values", [](const Curve& c) { return ToArray(c.values); })
      .def("at", &Curve::at, py::arg("t"))
      .def("final_value", &Curve::final_value)
      .def("__len__", [](const Curve& c) { return c.grid.size(); })
      .def("__repr__", [](const Curve& c) {
        return "<Curve " + c.measure + " T=" + std::to_string(c.grid.empty() ? 0 : c.grid.back()) +
               ">";
      });

  m.def("oob_curves",
        [](const Forest& forest, const Dataset& data,
           std::optional<std::vector<std::string>> measures, uint64_t tie_seed) {
          const auto ids = MeasuresOrDefault(measures, data.task());
          std::vector<Curve> curves;
          {
            py::gil_scoped_release release;
            curves = ComputeOobCurves(forest, data, ids, tie_seed);
          }
          return CurvesDict(curves);
        },
        py::arg("forest"), py::arg("data"), py::arg("measures") = py::none(),
        py::arg("tie_seed") = 0);
  m.def("stream_oob_curves",
        [](const Dataset& data, int num_trees, uint64_t seed,
           std::optional<std::vector<std::string>> measures, uint64_t tie_seed, int threads) {
          const auto ids = MeasuresOrDefault(measures, data.task());
          std::vector<Curve> curves;
          {
            py::gil_scoped_release release;
            curves = StreamOobCurves(data, num_trees, ForestParams(), seed, ids, tie_seed,
                                     threads);
          }
          return CurvesDict(curves);
        },
        py::arg("data"), py::arg("num_trees"), py::arg("seed"), py::arg("measures") = py::none(),
        py::arg("tie_seed") = 0, py::arg("threads") = 1);
  m.def("average_curves",
        [](const std::vector<Curve>& curves, const std::string& policy) {
          return AverageCurves(curves, ParseAveragePolicy(policy));
        },
        py::arg("curves"), py::arg("policy") = "all_defined");

  py::class_<NonmonotonicityReport>(m, "NonmonotonicityReport")
      .def_readonly("is_nonmonotone", &NonmonotonicityReport::is_nonmonotone)
      .def_readonly("argmin_t", &NonmonotonicityReport::argmin_t)
      .def_readonly("min_value", &NonmonotonicityReport::min_value)
      .def_readonly("final_value", &NonmonotonicityReport::final_value)
      .def_readonly("excess", &NonmonotonicityReport::excess);
  m.def("nonmonotonicity", &AnalyzeNonmonotonicity, py::arg("curve"),
        py::arg("window_start") = kDefaultWindowStart, py::arg("window_end") = kDefaultWindowEnd,
        py::arg("delta") = kDefaultNonmonotonicityDelta);

  py::class_<ConvergenceSummary>(m, "ConvergenceSummary")
      .def_readonly("t_at_tolerance", &ConvergenceSummary::t_at_tolerance)
      .def_readonly("effective_t", &ConvergenceSummary::effective_t)
      .def_readonly("converged", &ConvergenceSummary::converged)
      .def_readonly("t_max", &ConvergenceSummary::t_max)
      .def_readonly("gain_start_t", &ConvergenceSummary::gain_start_t)
      .def_readonly("start_value", &ConvergenceSummary::start_value)
      .def_readonly("final_value", &ConvergenceSummary::final_value)
      .def_readonly("gain", &ConvergenceSummary::gain);
  m.def("convergence", &SummarizeConvergence, py::arg("curve"), py::arg("tolerance"),
        py::arg("gain_start") = kDefaultGainStart);
  m.def("read_curves_csv", &ReadCurvesCsv, py::arg("path"));
  m.def("write_curves_csv", &WriteCurvesCsv, py::arg("curves"), py::arg("path"));

  // --- measures ---
  m.def("measure_names", [] {
    std::vector<std::string> names;
    for (const MeasureId id : AllMeasures()) names.push_back(MeasureName(id));
    return names;
  });
  m.def("error_rate",
        [](const std::vector<int>& y, const std::vector<int>& pred) { return ErrorRate(y, pred); },
        py::arg("truth"), py::arg("predicted"));
  m.def("balanced_error_rate",
        [](const std::vector<int>& y, const std::vector<int>& pred) {
          return BalancedErrorRate(y, pred);
        },
        py::arg("truth"), py::arg("predicted"));
  m.def("brier_score",
        [](const std::vector<int>& y,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& p,
           bool multiclass) {
          int k = 0;
          const std::vector<double> flat = FlattenProbabilities(p, y.size(), &k);
          return BrierScore(y, flat, k,
                            multiclass ? BrierMode::kMulticlass : BrierMode::kBinaryHalved);
        },
        py::arg("truth"), py::arg("probabilities"), py::arg("multiclass") = false);
  m.def("log_loss",
        [](const std::vector<int>& y,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& p,
           double offset) {
          int k = 0;
          const std::vector<double> flat = FlattenProbabilities(p, y.size(), &k);
          return LogLoss(y, flat, k, offset);
        },
        py::arg("truth"), py::arg("probabilities"), py::arg("offset") = kLogLossOffset);
  m.def("auc",
        [](const std::vector<int>& y, const std::vector<double>& s) { return Auc(y, s); },
        py::arg("truth"), py::arg("scores"));
  m.def("auc_multiclass",
        [](const std::vector<int>& y,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& p) {
          int k = 0;
          const std::vector<double> flat = FlattenProbabilities(p, y.size(), &k);
          return AucMulticlass(y, flat, k);
        },
        py::arg("truth"), py::arg("probabilities"));
  m.def("regression_measures",
        [](const std::vector<double>& y, const std::vector<double>& pred) {
          const RegressionMeasures r = ComputeRegressionMeasures(y, pred);
          py::dict out;
          out["mse"] = r.mse;
          out["mae"] = r.mae;
          out["medse"] = r.medse;
          out["medae"] = r.medae;
          out["rsquared"] = r.rsquared ? py::cast(*r.rsquared) : py::none();
          return out;
        },
        py::arg("truth"), py::arg("predicted"));

  // --- theory ---
  m.def("expected_error_rate", &ExpectedErrorRate, py::arg("eps"), py::arg("num_trees"));
  m.def("expected_brier", &ExpectedBrier, py::arg("eps"), py::arg("num_trees"));
  m.def("expected_logloss_taylor", &ExpectedLogLossTaylor, py::arg("eps"),
        py::arg("num_trees"), py::arg("offset") = kLogLossOffset);
  m.def("expected_logloss_exact", &ExpectedLogLossExact, py::arg("eps"), py::arg("num_trees"),
        py::arg("offset") = kLogLossOffset);
  m.def("expected_curve",
        [](const std::vector<double>& eps, const std::vector<int>& grid,
           const std::string& measure, bool oob_adjust, double offset) {
          DifficultyVector d;
          d.epsilons = eps;
          ValidateDifficulties(d.epsilons);
          return ExpectedCurve(d, grid, ParseExpectedMeasure(measure), oob_adjust, offset);
        },
        py::arg("eps"), py::arg("grid"), py::arg("measure") = "error_rate",
        py::arg("oob_adjust") = false, py::arg("offset") = kLogLossOffset);
  m.def("estimate_difficulties",
        [](const Dataset& data, int num_trees, uint64_t seed, int threads) {
          DifficultyVector d;
          {
            py::gil_scoped_release release;
            d = EstimateDifficulties(data, num_trees, ForestParams(), seed, threads);
          }
          return ToArray(d.epsilons);
        },
        py::arg("data"), py::arg("num_trees"), py::arg("seed"), py::arg("threads") = 1);
  m.def("auc_two_point_exact", &AucTwoPointExact, py::arg("y1"), py::arg("y2"),
        py::arg("p1_mean"), py::arg("p2_mean"), py::arg("num_trees"));
  m.def("auc_two_point_scenario", &AucTwoPointScenario, py::arg("y1"), py::arg("y2"),
        py::arg("p1_mean"), py::arg("p2_mean"), py::arg("num_trees"), py::arg("replicates"),
        py::arg("seed"));

  // --- correlation ---
  m.def("pearson",
        [](const std::vector<double>& x, const std::vector<double>& y) { return Pearson(x, y); },
        py::arg("x"), py::arg("y"));
  m.def("kendall_tau_b",
        [](const std::vector<double>& x, const std::vector<double>& y) {
          return KendallTauB(x, y);
        },
        py::arg("x"), py::arg("y"));

  // --- studies ---
  m.def("run_study",
        [](const std::string& config_json) {
          const StudyConfig config = ParseStudyConfig(config_json);
          StudyResult result;
          {
            py::gil_scoped_release release;
            result = RunStudy(config);
          }
          py::dict out;
          for (const DatasetOutcome& d : result.datasets) {
            py::dict entry;
            entry["ok"] = d.ok;
            entry["error"] = d.error;
            entry["curves"] = CurvesDict(d.mean_curves);
            out[py::str(d.name)] = entry;
          }
          return py::make_tuple(result.exit_code(), out);
        },
        py::arg("config_json"),
        "Runs a study from a JSON configuration; returns (exit_code, per-dataset results).");
  m.def("bundled_suites", &BundledSuiteNames);
}

}  // namespace oobcurve
