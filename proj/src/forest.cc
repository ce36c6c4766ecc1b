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

#include "oobcurve/forest.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "oobcurve/parallel.h"
#include "oobcurve/random.h"

namespace oobcurve {
namespace {

constexpr char kFormatName[] = "oobcurve-forest";
constexpr int kFormatVersion = 1;
// Trees trained per parallel batch when streaming votes.
constexpr int kStreamBatch = 256;

struct TrainedTree {
  Tree tree;
  std::vector<uint16_t> inbag;
};

TrainedTree TrainOne(const Dataset& data, const ForestParams& params,
                     uint64_t master_seed, int t) {
  const int n = data.num_rows();
  RandomEngine rng(DeriveSeed(master_seed, static_cast<uint64_t>(t)));
  TrainedTree out;
  out.inbag.assign(n, 0);
  std::vector<int> rows;
  if (params.replace) {
    rows.resize(n);
    for (int i = 0; i < n; ++i) {
      rows[i] = static_cast<int>(UniformIndex(rng, n));
      ++out.inbag[rows[i]];
    }
  } else {
    const int size = std::clamp(
        static_cast<int>(std::lround(params.sample_fraction * n)), 1, n);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 0; i < size; ++i) {
      std::swap(perm[i], perm[i + UniformIndex(rng, n - i)]);
      ++out.inbag[perm[i]];
    }
    rows.assign(perm.begin(), perm.begin() + size);
  }
  out.tree = TrainTree(data, rows, params.tree, rng());
  return out;
}

void CheckTrainingInputs(const Dataset& data, int num_trees,
                         const ForestParams& params) {
  if (num_trees < 1) {
    throw ForestError("number of trees must be >= 1, got " +
                      std::to_string(num_trees));
  }
  if (data.num_rows() < 2) throw ForestError("dataset needs at least 2 rows");
  if (!params.replace &&
      (params.sample_fraction <= 0.0 || params.sample_fraction > 1.0)) {
    throw ForestError("sample_fraction must lie in (0, 1]");
  }
  ResolveTreeParams(params.tree, data);
}

}  // namespace

uint64_t ForestFingerprint(uint64_t master_seed, int num_rows,
                           const ForestParams& params) {
  uint64_t h = DeriveSeed(master_seed, static_cast<uint64_t>(num_rows));
  h = DeriveSeed(h, static_cast<uint64_t>(params.tree.mtry));
  h = DeriveSeed(h, static_cast<uint64_t>(params.tree.min_node_size));
  h = DeriveSeed(h, static_cast<uint64_t>(params.tree.max_depth));
  h = DeriveSeed(h, params.replace ? 1 : 0);
  uint64_t fraction_bits = 0;
  static_assert(sizeof(fraction_bits) == sizeof(params.sample_fraction));
  std::memcpy(&fraction_bits, &params.sample_fraction, sizeof(fraction_bits));
  return DeriveSeed(h, params.replace ? 0 : fraction_bits);
}

Forest::Forest(TaskKind task, int num_classes, int num_rows, ForestParams params,
               uint64_t master_seed, std::vector<Tree> trees,
               std::vector<uint16_t> inbag)
    : task_(task),
      num_classes_(num_classes),
      num_rows_(num_rows),
      params_(params),
      master_seed_(master_seed),
      trees_(std::move(trees)),
      inbag_(std::move(inbag)),
      fingerprint_(ForestFingerprint(master_seed, num_rows, params)) {
  if (inbag_.size() != trees_.size() * static_cast<size_t>(num_rows_)) {
    throw ForestError("in-bag record does not match T x n");
  }
}

int Forest::num_oob(int t) const {
  const auto counts = inbag(t);
  return static_cast<int>(std::count(counts.begin(), counts.end(), 0));
}

bool Forest::operator==(const Forest& other) const {
  return task_ == other.task_ && num_classes_ == other.num_classes_ &&
         num_rows_ == other.num_rows_ && master_seed_ == other.master_seed_ &&
         fingerprint_ == other.fingerprint_ && inbag_ == other.inbag_ &&
         trees_ == other.trees_;
}

Forest TrainForest(const Dataset& data, int num_trees, const ForestParams& params,
                   uint64_t master_seed, int num_threads) {
  CheckTrainingInputs(data, num_trees, params);
  const int n = data.num_rows();
  std::vector<Tree> trees(num_trees);
  std::vector<uint16_t> inbag(static_cast<size_t>(num_trees) * n);
  ParallelFor(num_trees, num_threads, [&](int t) {
    TrainedTree trained = TrainOne(data, params, master_seed, t);
    trees[t] = std::move(trained.tree);
    std::copy(trained.inbag.begin(), trained.inbag.end(),
              inbag.begin() + static_cast<size_t>(t) * n);
  });
  return Forest(data.task(), data.num_classes(), n, params, master_seed,
                std::move(trees), std::move(inbag));
}

VoteMatrix::VoteMatrix(int num_rows, int num_classes, uint64_t fingerprint)
    : num_rows_(num_rows),
      num_classes_(num_classes),
      fingerprint_(fingerprint),
      votes_(static_cast<size_t>(num_rows) * num_classes, 0),
      sums_(num_classes == 0 ? num_rows : 0, 0.0),
      oob_counts_(num_rows, 0) {}

void VoteMatrix::AddTree(std::span<const double> predictions,
                         std::span<const uint16_t> inbag) {
  for (int i = 0; i < num_rows_; ++i) {
    if (!inbag.empty() && inbag[i] != 0) continue;
    ++oob_counts_[i];
    if (num_classes_ > 0) {
      ++votes_[static_cast<size_t>(i) * num_classes_ +
               static_cast<int>(predictions[i])];
    } else {
      sums_[i] += predictions[i];
    }
  }
  ++prefix_;
}

std::vector<double> PredictTree(const Tree& tree, const Dataset& data) {
  std::vector<double> out(data.num_rows());
  for (int i = 0; i < data.num_rows(); ++i) out[i] = tree.PredictRow(data, i);
  return out;
}

VoteMatrix OobVotesPrefix(const Forest& forest, const Dataset& data, int prefix,
                          const VoteMatrix* prior) {
  if (prefix < 1 || prefix > forest.num_trees()) {
    throw ForestError("prefix " + std::to_string(prefix) + " outside [1, " +
                      std::to_string(forest.num_trees()) + "]");
  }
  if (data.num_rows() != forest.num_rows()) {
    throw ForestError("dataset does not match the forest's training rows");
  }
  const int k = IsClassification(forest.task()) ? forest.num_classes() : 0;
  VoteMatrix votes;
  int start = 0;
  if (prior != nullptr) {
    if (prior->fingerprint() != forest.fingerprint() ||
        prior->num_rows() != forest.num_rows() || prior->num_classes() != k) {
      throw ForestError("prior vote matrix belongs to a different forest");
    }
    if (prior->prefix() != prefix - 1) {
      throw ForestError("prior vote matrix covers " +
                        std::to_string(prior->prefix()) + " trees, expected " +
                        std::to_string(prefix - 1));
    }
    votes = *prior;
    start = prefix - 1;
  } else {
    votes = VoteMatrix(forest.num_rows(), k, forest.fingerprint());
  }
  std::vector<double> predictions(forest.num_rows());
  for (int t = start; t < prefix; ++t) {
    const auto inbag = forest.inbag(t);
    for (int i = 0; i < forest.num_rows(); ++i) {
      predictions[i] = inbag[i] == 0 ? forest.tree(t).PredictRow(data, i) : 0.0;
    }
    votes.AddTree(predictions, inbag);
  }
  return votes;
}

void StreamTrees(const Dataset& data, int num_trees, const ForestParams& params,
                 uint64_t master_seed, int num_threads, const TreeSink& sink) {
  CheckTrainingInputs(data, num_trees, params);
  const int n = data.num_rows();
  struct TreeVotes {
    std::vector<double> predictions;
    std::vector<uint16_t> inbag;
  };
  std::vector<TreeVotes> batch;
  for (int first = 0; first < num_trees; first += kStreamBatch) {
    const int count = std::min(kStreamBatch, num_trees - first);
    batch.assign(count, {});
    ParallelFor(count, num_threads, [&](int b) {
      TrainedTree trained = TrainOne(data, params, master_seed, first + b);
      TreeVotes& out = batch[b];
      out.predictions.assign(n, 0.0);
      for (int i = 0; i < n; ++i) {
        if (trained.inbag[i] == 0) {
          out.predictions[i] = trained.tree.PredictRow(data, i);
        }
      }
      out.inbag = std::move(trained.inbag);
    });
    for (int b = 0; b < count; ++b) {
      sink(first + b, batch[b].predictions, batch[b].inbag);
    }
  }
}

VoteMatrix StreamOobVotes(const Dataset& data, int num_trees,
                          const ForestParams& params, uint64_t master_seed,
                          int num_threads) {
  const int n = data.num_rows();
  const int k = IsClassification(data.task()) ? data.num_classes() : 0;
  VoteMatrix votes(n, k, ForestFingerprint(master_seed, n, params));
  // Folded in tree order so regression sums match OobVotesPrefix exactly.
  StreamTrees(data, num_trees, params, master_seed, num_threads,
              [&](int, std::span<const double> predictions,
                  std::span<const uint16_t> inbag) {
                votes.AddTree(predictions, inbag);
              });
  return votes;
}

OobPredictions PredictFromVotes(const VoteMatrix& votes, uint64_t tie_seed) {
  const int n = votes.num_rows();
  const int k = votes.num_classes();
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  OobPredictions out;
  out.num_classes = k;
  out.defined.assign(n, 0);
  if (k > 0) {
    out.labels.assign(n, kUndefinedLabel);
    out.probabilities.assign(static_cast<size_t>(n) * k, kNaN);
  } else {
    out.values.assign(n, kNaN);
  }
  RandomEngine rng(tie_seed);
  std::vector<int> tied;
  for (int i = 0; i < n; ++i) {
    const int count = votes.oob_count(i);
    if (count == 0) {
      ++out.num_undefined;
      continue;
    }
    out.defined[i] = 1;
    if (k == 0) {
      out.values[i] = votes.sum(i) / count;
      continue;
    }
    int top = -1;
    tied.clear();
    for (int c = 0; c < k; ++c) {
      const int v = votes.votes(i, c);
      out.probabilities[static_cast<size_t>(i) * k + c] =
          static_cast<double>(v) / count;
      if (v > top) {
        top = v;
        tied.assign(1, c);
      } else if (v == top) {
        tied.push_back(c);
      }
    }
    out.labels[i] = tied.size() == 1 ? tied[0] : tied[UniformIndex(rng, tied.size())];
  }
  return out;
}

std::string SerializeForest(const Forest& forest) {
  using nlohmann::json;
  json root;
  root["format"] = kFormatName;
  root["version"] = kFormatVersion;
  root["task"] = TaskKindName(forest.task());
  root["num_classes"] = forest.num_classes();
  root["num_rows"] = forest.num_rows();
  root["master_seed"] = forest.master_seed();
  const ForestParams& p = forest.params();
  root["params"] = {{"mtry", p.tree.mtry},
                    {"min_node_size", p.tree.min_node_size},
                    {"max_depth", p.tree.max_depth},
                    {"replace", p.replace},
                    {"sample_fraction", p.sample_fraction}};
  root["feature_levels"] = forest.num_trees() > 0
                               ? json(forest.tree(0).feature_levels())
                               : json::array();
  json trees = json::array();
  for (int t = 0; t < forest.num_trees(); ++t) {
    const Tree& tree = forest.tree(t);
    json nodes = json::array();
    for (const TreeNode& node : tree.nodes()) {
      nodes.push_back({node.feature, node.left, node.right, node.levels_offset,
                       node.value, node.gain, node.weight, node.default_left});
    }
    std::vector<int> levels;
    for (const LevelDirection d : tree.level_directions()) {
      levels.push_back(static_cast<int>(d));
    }
    const auto inbag = forest.inbag(t);
    trees.push_back({{"nodes", std::move(nodes)},
                     {"levels", levels},
                     {"inbag", std::vector<uint16_t>(inbag.begin(), inbag.end())}});
  }
  root["trees"] = std::move(trees);
  return root.dump();
}

Forest DeserializeForest(const std::string& text) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(text);
    if (root.at("format") != kFormatName) {
      throw ForestError("not an oobcurve forest file");
    }
    if (root.at("version").get<int>() != kFormatVersion) {
      throw ForestError("unsupported forest format version " +
                        root.at("version").dump());
    }
    const auto task = ParseTaskKind(root.at("task").get<std::string>());
    if (!task) throw ForestError("unknown task in forest file");
    const int num_classes = root.at("num_classes").get<int>();
    const int n = root.at("num_rows").get<int>();
    ForestParams params;
    const json& jp = root.at("params");
    params.tree.mtry = jp.at("mtry").get<int>();
    params.tree.min_node_size = jp.at("min_node_size").get<int>();
    params.tree.max_depth = jp.at("max_depth").get<int>();
    params.replace = jp.at("replace").get<bool>();
    params.sample_fraction = jp.at("sample_fraction").get<double>();
    const auto feature_levels = root.at("feature_levels").get<std::vector<int32_t>>();
    std::vector<Tree> trees;
    std::vector<uint16_t> inbag;
    for (const json& jt : root.at("trees")) {
      std::vector<TreeNode> nodes;
      for (const json& jn : jt.at("nodes")) {
        TreeNode node;
        node.feature = jn.at(0).get<int32_t>();
        node.left = jn.at(1).get<int32_t>();
        node.right = jn.at(2).get<int32_t>();
        node.levels_offset = jn.at(3).get<int32_t>();
        node.value = jn.at(4).get<double>();
        node.gain = jn.at(5).get<double>();
        node.weight = jn.at(6).get<double>();
        node.default_left = jn.at(7).get<bool>();
        nodes.push_back(node);
      }
      std::vector<LevelDirection> levels;
      for (const int d : jt.at("levels").get<std::vector<int>>()) {
        levels.push_back(static_cast<LevelDirection>(d));
      }
      const auto tree_inbag = jt.at("inbag").get<std::vector<uint16_t>>();
      if (static_cast<int>(tree_inbag.size()) != n) {
        throw ForestError("in-bag record of a tree does not have n entries");
      }
      inbag.insert(inbag.end(), tree_inbag.begin(), tree_inbag.end());
      trees.emplace_back(*task, num_classes, feature_levels, std::move(nodes),
                         std::move(levels));
    }
    return Forest(*task, num_classes, n, params,
                  root.at("master_seed").get<uint64_t>(), std::move(trees),
                  std::move(inbag));
  } catch (const json::exception& e) {
    throw ForestError(std::string("malformed forest file: ") + e.what());
  }
}

void SaveForest(const Forest& forest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ForestError("cannot write '" + path + "'");
  out << SerializeForest(forest);
}

Forest LoadForest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ForestError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return DeserializeForest(buffer.str());
}

}  // namespace oobcurve
