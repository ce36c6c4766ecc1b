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

#include "oobcurve/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "oobcurve/random.h"

namespace oobcurve {
namespace {

struct CsvRecord {
  std::vector<std::string> fields;
  int line = 0;
};

// RFC-4180 tokenizer. Quoted fields may contain separators, doubled quotes and
// line breaks. `line` is the physical line where each record starts.
std::vector<CsvRecord> TokenizeCsv(const std::string& content) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  int line = 1;
  current.line = 1;
  size_t i = 0;
  // Skip a UTF-8 byte order mark.
  if (content.size() >= 3 && content.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;

  auto end_record = [&]() {
    current.fields.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
    const bool blank = current.fields.size() == 1 && current.fields[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = CsvRecord{};
    current.line = line;
  };

  for (; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw DatasetError("CSV line " + std::to_string(line) +
                             ": unexpected quote inside an unquoted field");
        }
        in_quotes = true;
        field_was_quoted = true;
        break;
      case ',':
        current.fields.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(c);
    }
  }
  if (in_quotes) {
    throw DatasetError("CSV line " + std::to_string(current.line) +
                       ": unterminated quoted field");
  }
  if (!field.empty() || !current.fields.empty()) end_record();
  return records;
}

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

bool IsMissing(const std::string& cell) {
  const std::string t = Trim(cell);
  return t.empty() || t == "NA";
}

std::optional<double> ParseNumber(const std::string& cell) {
  const std::string t = Trim(cell);
  if (t.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::string FormatNumber(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  // Prefer the shortest representation that round-trips.
  for (int precision = 1; precision < 17; ++precision) {
    char shorter[32];
    std::snprintf(shorter, sizeof(shorter), "%.*g", precision, value);
    if (std::strtod(shorter, nullptr) == value) return shorter;
  }
  return buffer;
}

std::string QuoteIfNeeded(const std::string& field) {
  const bool needs_quotes =
      field.find_first_of(",\"\r\n") != std::string::npos ||
      (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Encodes the cells of a column as numbers, or as levels in first-appearance
// order when any cell is non-numeric.
struct EncodedColumn {
  FeatureKind kind = FeatureKind::kNumeric;
  std::vector<double> values;
  std::vector<std::string> levels;
};

EncodedColumn EncodeColumn(const std::vector<std::string>& cells) {
  EncodedColumn out;
  out.values.reserve(cells.size());
  bool numeric = true;
  for (const auto& cell : cells) {
    const auto value = ParseNumber(cell);
    if (!value) {
      numeric = false;
      break;
    }
    out.values.push_back(*value);
  }
  if (numeric) return out;

  out.kind = FeatureKind::kCategorical;
  out.values.clear();
  std::unordered_map<std::string, int> index;
  for (const auto& cell : cells) {
    const std::string key = Trim(cell);
    auto [it, inserted] = index.emplace(key, static_cast<int>(out.levels.size()));
    if (inserted) out.levels.push_back(key);
    out.values.push_back(it->second);
  }
  return out;
}

bool AllIntegers(const std::vector<double>& values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return v == std::floor(v); });
}

}  // namespace

const char* TaskKindName(TaskKind task) {
  switch (task) {
    case TaskKind::kBinaryClassification:
      return "binary";
    case TaskKind::kMulticlassClassification:
      return "multiclass";
    case TaskKind::kRegression:
      return "regression";
  }
  return "unknown";
}

std::optional<TaskKind> ParseTaskKind(const std::string& name) {
  if (name == "binary") return TaskKind::kBinaryClassification;
  if (name == "multiclass" || name == "classification") {
    return TaskKind::kMulticlassClassification;
  }
  if (name == "regression") return TaskKind::kRegression;
  return std::nullopt;
}

Dataset::Dataset(std::vector<ColumnSpec> columns, std::vector<double> features,
                 std::vector<double> response, TaskKind task,
                 std::vector<std::string> class_labels, std::string target_name)
    : columns_(std::move(columns)),
      features_(std::move(features)),
      response_(std::move(response)),
      task_(task),
      class_labels_(std::move(class_labels)),
      target_name_(std::move(target_name)),
      num_rows_(static_cast<int>(response_.size())) {
  if (num_rows_ < 2) {
    throw DatasetError("a dataset needs at least 2 rows, got " +
                       std::to_string(num_rows_));
  }
  if (columns_.empty()) throw DatasetError("a dataset needs at least 1 feature");
  if (features_.size() != columns_.size() * response_.size()) {
    throw DatasetError("feature matrix size does not match n x p");
  }
  if (IsClassification(task_)) {
    const int k = num_classes();
    if (k < 2) throw DatasetError("classification target has a single class");
    if ((task_ == TaskKind::kBinaryClassification) != (k == 2)) {
      throw DatasetError(std::string("task '") + TaskKindName(task_) +
                         "' is inconsistent with " + std::to_string(k) +
                         " classes");
    }
    std::vector<int> counts(k, 0);
    for (const double y : response_) {
      const int c = static_cast<int>(y);
      if (c < 0 || c >= k || c != y) {
        throw DatasetError("class index out of range");
      }
      ++counts[c];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        throw DatasetError("class '" + class_labels_[c] + "' has no rows");
      }
    }
  } else if (!class_labels_.empty()) {
    throw DatasetError("regression datasets carry no class labels");
  }
}

std::vector<double> Dataset::row(int r) const {
  std::vector<double> out(num_features());
  for (int j = 0; j < num_features(); ++j) out[j] = feature(r, j);
  return out;
}

bool Dataset::operator==(const Dataset& other) const {
  if (columns_.size() != other.columns_.size()) return false;
  for (size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].name != other.columns_[j].name ||
        columns_[j].kind != other.columns_[j].kind ||
        columns_[j].levels != other.columns_[j].levels) {
      return false;
    }
  }
  return features_ == other.features_ && response_ == other.response_ &&
         task_ == other.task_ && class_labels_ == other.class_labels_ &&
         target_name_ == other.target_name_;
}

Dataset ParseCsv(const std::string& content, const std::string& target,
                 std::optional<TaskKind> task) {
  std::vector<CsvRecord> records = TokenizeCsv(content);
  if (records.empty()) throw DatasetError("CSV has no header row");
  std::vector<std::string> header;
  for (const auto& name : records.front().fields) header.push_back(Trim(name));
  const auto target_it = std::find(header.begin(), header.end(), target);
  if (target_it == header.end()) {
    throw DatasetError("target column '" + target + "' not found in header");
  }
  const int target_col = static_cast<int>(target_it - header.begin());
  const int width = static_cast<int>(header.size());

  std::vector<int> bad_lines;
  std::vector<const CsvRecord*> complete;
  int dropped = 0;
  for (size_t r = 1; r < records.size(); ++r) {
    const CsvRecord& rec = records[r];
    if (static_cast<int>(rec.fields.size()) != width) {
      bad_lines.push_back(rec.line);
      continue;
    }
    if (std::any_of(rec.fields.begin(), rec.fields.end(), IsMissing)) {
      ++dropped;
      continue;
    }
    complete.push_back(&rec);
  }
  if (!bad_lines.empty()) {
    std::string lines;
    for (size_t i = 0; i < bad_lines.size() && i < 20; ++i) {
      if (i) lines += ", ";
      lines += std::to_string(bad_lines[i]);
    }
    throw DatasetError("CSV rows with " + std::to_string(width) +
                       " expected fields are malformed at line(s) " + lines);
  }
  const int n = static_cast<int>(complete.size());

  auto cells_of = [&](int col) {
    std::vector<std::string> cells;
    cells.reserve(n);
    for (const CsvRecord* rec : complete) cells.push_back(rec->fields[col]);
    return cells;
  };

  std::vector<ColumnSpec> columns;
  std::vector<double> features;
  for (int col = 0; col < width; ++col) {
    if (col == target_col) continue;
    EncodedColumn encoded = EncodeColumn(cells_of(col));
    columns.push_back({header[col], encoded.kind, std::move(encoded.levels)});
    features.insert(features.end(), encoded.values.begin(), encoded.values.end());
  }

  // Target typing.
  EncodedColumn y = EncodeColumn(cells_of(target_col));
  const bool numeric_target = y.kind == FeatureKind::kNumeric;
  if (task && *task == TaskKind::kRegression) {
    if (!numeric_target) {
      throw DatasetError("non-numeric regression target '" + target + "'");
    }
    Dataset out(std::move(columns), std::move(features), std::move(y.values),
                TaskKind::kRegression, {}, target);
    out.set_num_dropped_rows(dropped);
    return out;
  }
  if (!task) {
    bool classification = !numeric_target;
    if (numeric_target && AllIntegers(y.values)) {
      std::vector<double> distinct = y.values;
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      classification = static_cast<int>(distinct.size()) <= kMaxInferredClasses;
    }
    if (!classification) {
      Dataset out(std::move(columns), std::move(features), std::move(y.values),
                  TaskKind::kRegression, {}, target);
      out.set_num_dropped_rows(dropped);
      return out;
    }
  }

  // Classification: numeric labels are indexed in ascending order, string
  // labels by first appearance.
  std::vector<std::string> class_labels;
  std::vector<double> response(n);
  if (numeric_target) {
    std::vector<double> distinct = y.values;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::map<double, int> index;
    for (size_t k = 0; k < distinct.size(); ++k) {
      index[distinct[k]] = static_cast<int>(k);
      class_labels.push_back(FormatNumber(distinct[k]));
    }
    for (int i = 0; i < n; ++i) response[i] = index[y.values[i]];
  } else {
    class_labels = std::move(y.levels);
    response = std::move(y.values);
  }
  const int k = static_cast<int>(class_labels.size());
  if (k < 2) {
    throw DatasetError("classification target '" + target +
                       "' has a single class");
  }
  if (task == TaskKind::kBinaryClassification && k != 2) {
    throw DatasetError("binary task forced on a target with " +
                       std::to_string(k) + " classes");
  }
  const TaskKind resolved = k == 2 ? TaskKind::kBinaryClassification
                                   : TaskKind::kMulticlassClassification;
  Dataset out(std::move(columns), std::move(features), std::move(response),
              resolved, std::move(class_labels), target);
  out.set_num_dropped_rows(dropped);
  return out;
}

Dataset LoadCsv(const std::string& path, const std::string& target,
                std::optional<TaskKind> task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseCsv(buffer.str(), target, task);
}

std::string FormatCsv(const Dataset& data) {
  std::string out;
  for (int j = 0; j < data.num_features(); ++j) {
    out += QuoteIfNeeded(data.column(j).name);
    out += ',';
  }
  out += QuoteIfNeeded(data.target_name());
  out += '\n';
  for (int i = 0; i < data.num_rows(); ++i) {
    for (int j = 0; j < data.num_features(); ++j) {
      const ColumnSpec& col = data.column(j);
      const double v = data.feature(i, j);
      out += col.kind == FeatureKind::kCategorical
                 ? QuoteIfNeeded(col.levels[static_cast<int>(v)])
                 : FormatNumber(v);
      out += ',';
    }
    out += IsClassification(data.task())
               ? QuoteIfNeeded(data.class_labels()[data.label(i)])
               : FormatNumber(data.response()[i]);
    out += '\n';
  }
  return out;
}

void WriteCsv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write '" + path + "'");
  out << FormatCsv(data);
}

std::string GeneratorSpec::ToString() const {
  const char* key = "param";
  if (name == "two-gaussians") key = "sep";
  if (name == "label-noise") key = "flip";
  if (name == "linear-regression") key = "noise";
  if (name == "fig1-analog") key = "frac";
  return name + "(n=" + std::to_string(n) + ",p=" + std::to_string(p) + "," +
         key + "=" + FormatNumber(param) + ")";
}

GeneratorSpec ParseGeneratorSpec(const std::string& text) {
  GeneratorSpec spec;
  const std::string t = Trim(text);
  const auto open = t.find('(');
  spec.name = Trim(t.substr(0, open));
  if (spec.name == "two-gaussians") spec.param = 3.0;
  if (spec.name == "label-noise") spec.param = 0.1;
  if (spec.name == "linear-regression") spec.param = 1.0;
  if (spec.name == "fig1-analog") spec.param = 0.1;
  if (open == std::string::npos) return spec;
  const auto close = t.rfind(')');
  if (close == std::string::npos || close < open) {
    throw DatasetError("malformed generator spec '" + text + "'");
  }
  std::stringstream args(t.substr(open + 1, close - open - 1));
  std::string item;
  while (std::getline(args, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw DatasetError("expected key=value in generator spec '" + text + "'");
    }
    const std::string key = Trim(item.substr(0, eq));
    const auto value = ParseNumber(item.substr(eq + 1));
    if (!value) {
      throw DatasetError("non-numeric value for '" + key + "' in '" + text + "'");
    }
    if (key == "n") {
      spec.n = static_cast<int>(*value);
    } else if (key == "p") {
      spec.p = static_cast<int>(*value);
    } else {
      spec.param = *value;
    }
  }
  return spec;
}

namespace {

std::vector<ColumnSpec> NumericColumns(int p) {
  std::vector<ColumnSpec> columns(p);
  for (int j = 0; j < p; ++j) columns[j].name = "x" + std::to_string(j + 1);
  return columns;
}

// Row-major draw of two unit-variance Gaussian classes, class = row % 2.
void DrawTwoGaussians(int n, int p, double sep, RandomEngine& rng,
                      std::vector<double>* features,
                      std::vector<double>* response) {
  std::normal_distribution<double> normal;
  features->assign(static_cast<size_t>(n) * p, 0.0);
  response->assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    (*response)[i] = label;
    for (int j = 0; j < p; ++j) {
      (*features)[static_cast<size_t>(j) * n + i] = normal(rng) + sep * label;
    }
  }
}

}  // namespace

Dataset Synthesize(const GeneratorSpec& spec, uint64_t seed) {
  if (spec.n < 2 || spec.p < 1) {
    throw DatasetError("generator sizes must be positive (n >= 2, p >= 1): " +
                       spec.ToString());
  }
  RandomEngine rng(seed);
  const int n = spec.n;
  const int p = spec.p;
  std::vector<double> features;
  std::vector<double> response;

  if (spec.name == "two-gaussians") {
    DrawTwoGaussians(n, p, spec.param, rng, &features, &response);
    return Dataset(NumericColumns(p), std::move(features), std::move(response),
                   TaskKind::kBinaryClassification, {"0", "1"}, "y");
  }
  if (spec.name == "label-noise") {
    if (spec.param < 0.0 || spec.param > 1.0) {
      throw DatasetError("label-noise flip fraction must lie in [0, 1]");
    }
    DrawTwoGaussians(n, p, 2.0, rng, &features, &response);
    for (double& y : response) {
      if (UniformUnit(rng) < spec.param) y = 1.0 - y;
    }
    return Dataset(NumericColumns(p), std::move(features), std::move(response),
                   TaskKind::kBinaryClassification, {"0", "1"}, "y");
  }
  if (spec.name == "linear-regression") {
    if (spec.param < 0.0) throw DatasetError("noise sd must be non-negative");
    std::normal_distribution<double> normal;
    features.assign(static_cast<size_t>(n) * p, 0.0);
    response.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
      double y = 0.0;
      for (int j = 0; j < p; ++j) {
        const double x = normal(rng);
        features[static_cast<size_t>(j) * n + i] = x;
        y += x / (j + 1);
      }
      response[i] = y + spec.param * normal(rng);
    }
    return Dataset(NumericColumns(p), std::move(features), std::move(response),
                   TaskKind::kRegression, {}, "y");
  }
  if (spec.name == "fig1-analog") {
    constexpr int kClusterSize = 10;
    if (spec.param <= 0.0 || spec.param >= 1.0) {
      throw DatasetError("fig1-analog fraction must lie in (0, 1)");
    }
    const int clusters = std::max(
        1, static_cast<int>(std::lround(spec.param * n / kClusterSize)));
    const int clean = n - clusters * kClusterSize;
    if (clean < 2) {
      throw DatasetError("fig1-analog needs n > 10 * clusters + 1: " +
                         spec.ToString());
    }
    std::vector<double> clean_features;
    std::vector<double> clean_response;
    DrawTwoGaussians(clean, p, 3.0, rng, &clean_features, &clean_response);
    features.assign(static_cast<size_t>(n) * p, 0.0);
    response.assign(n, 0.0);
    for (int i = 0; i < clean; ++i) {
      response[i] = clean_response[i];
      for (int j = 0; j < p; ++j) {
        features[static_cast<size_t>(j) * n + i] =
            clean_features[static_cast<size_t>(j) * clean + i];
      }
    }
    // Each cluster is an isolated point mass with a 5/5 label split.
    for (int c = 0; c < clusters; ++c) {
      const double location = -8.0 - 4.0 * c;
      for (int m = 0; m < kClusterSize; ++m) {
        const int i = clean + c * kClusterSize + m;
        response[i] = m % 2;
        for (int j = 0; j < p; ++j) {
          features[static_cast<size_t>(j) * n + i] = location;
        }
      }
    }
    return Dataset(NumericColumns(p), std::move(features), std::move(response),
                   TaskKind::kBinaryClassification, {"0", "1"}, "y");
  }
  throw DatasetError("unknown generator '" + spec.name + "'");
}

Dataset SelectRows(const Dataset& data, std::span<const int> rows) {
  const int n = static_cast<int>(rows.size());
  std::vector<double> features(static_cast<size_t>(n) * data.num_features());
  std::vector<double> response(n);
  for (int j = 0; j < data.num_features(); ++j) {
    for (int i = 0; i < n; ++i) {
      features[static_cast<size_t>(j) * n + i] = data.feature(rows[i], j);
    }
  }
  for (int i = 0; i < n; ++i) response[i] = data.response()[rows[i]];
  return Dataset(data.columns(), std::move(features), std::move(response),
                 data.task(), data.class_labels(), data.target_name());
}

}  // namespace oobcurve
