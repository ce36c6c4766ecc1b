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

#include "oobcurve/correlation.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace oobcurve {
namespace {

void CheckPaired(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw CorrelationError("inputs differ in length");
  if (x.size() < 2) throw CorrelationError("correlation needs at least 2 points");
}

// Pairs tied within each run of equal values of `v` taken in order.
int64_t TiedPairs(std::span<const double> v) {
  int64_t ties = 0;
  int64_t run = 1;
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] == v[i - 1]) {
      ++run;
    } else {
      ties += run * (run - 1) / 2;
      run = 1;
    }
  }
  return ties + run * (run - 1) / 2;
}

// Stable merge sort of `v` returning the number of inversions (pairs i < j
// with v[i] > v[j]).
int64_t MergeSortInversions(std::vector<double>& v, std::vector<double>& buffer,
                            size_t lo, size_t hi) {
  if (hi - lo < 2) return 0;
  const size_t mid = lo + (hi - lo) / 2;
  int64_t swaps = MergeSortInversions(v, buffer, lo, mid) +
                  MergeSortInversions(v, buffer, mid, hi);
  size_t i = lo;
  size_t j = mid;
  size_t k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<int64_t>(mid - i);
      buffer[k++] = v[j++];
    } else {
      buffer[k++] = v[i++];
    }
  }
  while (i < mid) buffer[k++] = v[i++];
  while (j < hi) buffer[k++] = v[j++];
  std::copy(buffer.begin() + lo, buffer.begin() + hi, v.begin() + lo);
  return swaps;
}

}  // namespace

std::optional<double> Pearson(std::span<const double> x, std::span<const double> y) {
  CheckPaired(x, y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

KendallCounts CountKendallPairs(std::span<const double> x, std::span<const double> y) {
  CheckPaired(x, y);
  const size_t n = x.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  std::vector<double> xs(n);
  std::vector<double> ys(n);
  for (size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  KendallCounts c;
  c.pairs = static_cast<int64_t>(n) * static_cast<int64_t>(n - 1) / 2;
  c.ties_x = TiedPairs(xs);
  // Pairs tied in both x and y: runs of equal (x, y) in the sorted order.
  int64_t ties_xy = 0;
  int64_t run = 1;
  for (size_t i = 1; i < n; ++i) {
    if (xs[i] == xs[i - 1] && ys[i] == ys[i - 1]) {
      ++run;
    } else {
      ties_xy += run * (run - 1) / 2;
      run = 1;
    }
  }
  ties_xy += run * (run - 1) / 2;
  std::vector<double> buffer(n);
  const int64_t swaps = MergeSortInversions(ys, buffer, 0, n);
  c.ties_y = TiedPairs(ys);
  c.concordant_minus_discordant = c.pairs - c.ties_x - c.ties_y + ties_xy - 2 * swaps;
  return c;
}

std::optional<double> KendallTauB(const KendallCounts& c) {
  const int64_t dx = c.pairs - c.ties_x;
  const int64_t dy = c.pairs - c.ties_y;
  if (dx == 0 || dy == 0) return std::nullopt;
  return static_cast<double>(c.concordant_minus_discordant) /
         std::sqrt(static_cast<double>(dx) * static_cast<double>(dy));
}

std::optional<double> KendallTauB(std::span<const double> x, std::span<const double> y) {
  return KendallTauB(CountKendallPairs(x, y));
}

CorrelationMatrix CorrelateCurves(std::span<const Curve> curves, int max_t) {
  if (curves.size() < 2) throw CorrelationError("need at least 2 curves to correlate");
  const Curve& first = curves.front();
  for (const Curve& c : curves) {
    if (c.grid != first.grid) throw CorrelationError("curves must share a grid");
  }
  std::vector<size_t> points;
  for (size_t i = 0; i < first.grid.size(); ++i) {
    if (first.grid[i] > max_t) break;
    if (std::all_of(curves.begin(), curves.end(),
                    [&](const Curve& c) { return c.defined(i); })) {
      points.push_back(i);
    }
  }
  if (points.size() < 3) {
    throw CorrelationError("fewer than 3 common defined points up to T=" +
                           std::to_string(max_t));
  }
  const size_t m = curves.size();
  std::vector<std::vector<double>> series(m);
  for (size_t k = 0; k < m; ++k) {
    for (const size_t i : points) series[k].push_back(curves[k].values[i]);
  }
  CorrelationMatrix out;
  out.num_points = static_cast<int>(points.size());
  for (const Curve& c : curves) out.measures.push_back(c.measure);
  out.pearson.assign(m * m, std::nullopt);
  out.kendall.assign(m * m, std::nullopt);
  for (size_t a = 0; a < m; ++a) {
    for (size_t b = a; b < m; ++b) {
      auto p = Pearson(series[a], series[b]);
      auto k = KendallTauB(series[a], series[b]);
      if (a == b && p) p = 1.0;
      if (a == b && k) k = 1.0;
      out.pearson[a * m + b] = out.pearson[b * m + a] = p;
      out.kendall[a * m + b] = out.kendall[b * m + a] = k;
    }
  }
  return out;
}

CorrelationReport BuildCorrelationReport(std::vector<std::string> datasets,
                                         std::vector<CorrelationMatrix> matrices) {
  if (datasets.size() != matrices.size()) {
    throw CorrelationError("one matrix per dataset expected");
  }
  CorrelationReport report;
  report.datasets = std::move(datasets);
  report.per_dataset = std::move(matrices);
  CorrelationMatrix& avg = report.average;
  for (const CorrelationMatrix& mat : report.per_dataset) {
    for (const std::string& name : mat.measures) {
      if (std::find(avg.measures.begin(), avg.measures.end(), name) ==
          avg.measures.end()) {
        avg.measures.push_back(name);
      }
    }
  }
  const size_t m = avg.size();
  avg.pearson.assign(m * m, std::nullopt);
  avg.kendall.assign(m * m, std::nullopt);
  const auto index_in = [](const CorrelationMatrix& mat, const std::string& name) {
    return static_cast<size_t>(
        std::find(mat.measures.begin(), mat.measures.end(), name) -
        mat.measures.begin());
  };
  for (size_t a = 0; a < m; ++a) {
    for (size_t b = 0; b < m; ++b) {
      double sum_p = 0.0;
      double sum_k = 0.0;
      int count_p = 0;
      int count_k = 0;
      for (const CorrelationMatrix& mat : report.per_dataset) {
        const size_t i = index_in(mat, avg.measures[a]);
        const size_t j = index_in(mat, avg.measures[b]);
        if (i >= mat.size() || j >= mat.size()) continue;
        if (const auto& p = mat.pearson_at(i, j)) {
          sum_p += *p;
          ++count_p;
        }
        if (const auto& k = mat.kendall_at(i, j)) {
          sum_k += *k;
          ++count_k;
        }
      }
      if (count_p > 0) avg.pearson[a * m + b] = sum_p / count_p;
      if (count_k > 0) avg.kendall[a * m + b] = sum_k / count_k;
    }
  }
  return report;
}

namespace {

nlohmann::ordered_json MatrixJson(const std::vector<std::optional<double>>& values,
                                  size_t m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (size_t i = 0; i < m; ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (size_t j = 0; j < m; ++j) {
      const auto& v = values[i * m + j];
      row.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json());
    }
    rows.push_back(row);
  }
  return rows;
}

nlohmann::ordered_json CorrelationMatrixJson(const CorrelationMatrix& mat) {
  nlohmann::ordered_json out;
  out["measures"] = mat.measures;
  out["points"] = mat.num_points;
  out["pearson"] = MatrixJson(mat.pearson, mat.size());
  out["kendall_tau_b"] = MatrixJson(mat.kendall, mat.size());
  return out;
}

}  // namespace

std::string CorrelationReportToJson(const CorrelationReport& report) {
  nlohmann::ordered_json out;
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (size_t d = 0; d < report.datasets.size(); ++d) {
    per[report.datasets[d]] = CorrelationMatrixJson(report.per_dataset[d]);
  }
  out["datasets"] = per;
  nlohmann::ordered_json avg = CorrelationMatrixJson(report.average);
  avg.erase("points");
  out["average"] = avg;
  return out.dump(2) + "\n";
}

}  // namespace oobcurve
