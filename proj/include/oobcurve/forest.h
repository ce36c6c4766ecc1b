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

// Bagged tree ensembles with out-of-bag bookkeeping.
//
// A Forest keeps its trees in training order together with the bootstrap
// multiplicity of every training row for every tree. Out-of-bag votes are
// accumulated over tree prefixes, which is all the curve computations need;
// the full T x n prediction matrix is never materialised.

#ifndef OOBCURVE_FOREST_H_
#define OOBCURVE_FOREST_H_

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oobcurve/cart.h"
#include "oobcurve/dataset.h"

namespace oobcurve {

class ForestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ForestParams {
  TreeParams tree;
  // Bootstrap of size n with replacement. When false, each tree sees
  // round(sample_fraction * n) rows drawn without replacement.
  bool replace = true;
  double sample_fraction = 0.632;
};

class Forest {
 public:
  Forest(TaskKind task, int num_classes, int num_rows, ForestParams params,
         uint64_t master_seed, std::vector<Tree> trees,
         std::vector<uint16_t> inbag);

  int num_trees() const { return static_cast<int>(trees_.size()); }
  int num_rows() const { return num_rows_; }
  TaskKind task() const { return task_; }
  int num_classes() const { return num_classes_; }
  const ForestParams& params() const { return params_; }
  uint64_t master_seed() const { return master_seed_; }

  const Tree& tree(int t) const { return trees_[t]; }
  const std::vector<Tree>& trees() const { return trees_; }
  // Bootstrap multiplicity of each training row in tree t.
  std::span<const uint16_t> inbag(int t) const {
    return {inbag_.data() + static_cast<size_t>(t) * num_rows_,
            static_cast<size_t>(num_rows_)};
  }
  bool is_oob(int t, int row) const { return inbag(t)[row] == 0; }
  int num_oob(int t) const;

  // Identifies the tree sequence (seed, sampling and shape), independently of
  // its length: prefixes of forests grown with the same inputs share it.
  uint64_t fingerprint() const { return fingerprint_; }

  bool operator==(const Forest& other) const;

 private:
  TaskKind task_;
  int num_classes_;
  int num_rows_;
  ForestParams params_;
  uint64_t master_seed_;
  std::vector<Tree> trees_;
  std::vector<uint16_t> inbag_;
  uint64_t fingerprint_;
};

uint64_t ForestFingerprint(uint64_t master_seed, int num_rows,
                           const ForestParams& params);

// Tree t is trained on a sample drawn from the stream DeriveSeed(master, t),
// so the result does not depend on `num_threads`.
Forest TrainForest(const Dataset& data, int num_trees, const ForestParams& params,
                   uint64_t master_seed, int num_threads = 1);

// Out-of-bag votes of a tree prefix.
class VoteMatrix {
 public:
  VoteMatrix() = default;
  VoteMatrix(int num_rows, int num_classes, uint64_t fingerprint);

  int num_rows() const { return num_rows_; }
  // 0 for regression.
  int num_classes() const { return num_classes_; }
  int prefix() const { return prefix_; }
  uint64_t fingerprint() const { return fingerprint_; }

  // Number of trees in the prefix for which `row` is out-of-bag.
  int oob_count(int row) const { return oob_counts_[row]; }
  // Classification: votes for class k among the OOB trees of `row`.
  int votes(int row, int k) const {
    return votes_[static_cast<size_t>(row) * num_classes_ + k];
  }
  // Regression: sum of OOB tree predictions for `row`.
  double sum(int row) const { return sums_[row]; }

  // Adds one tree given its per-row predictions. Rows with a non-zero in-bag
  // multiplicity are skipped; an empty `inbag` counts every row (hold-out
  // votes).
  void AddTree(std::span<const double> predictions, std::span<const uint16_t> inbag);

  bool operator==(const VoteMatrix& other) const = default;

 private:
  int num_rows_ = 0;
  int num_classes_ = 0;
  int prefix_ = 0;
  uint64_t fingerprint_ = 0;
  std::vector<int32_t> votes_;
  std::vector<double> sums_;
  std::vector<int32_t> oob_counts_;
};

// OOB votes of the first `prefix` trees. With `prior` (the matrix of the first
// prefix - 1 trees of the same forest) only tree `prefix` is evaluated; the
// result is identical to a recomputation from scratch.
VoteMatrix OobVotesPrefix(const Forest& forest, const Dataset& data, int prefix,
                          const VoteMatrix* prior = nullptr);

// Trains `num_trees` trees exactly as TrainForest() would, in parallel
// batches, and hands each one to `sink` in tree order as (t, predictions,
// inbag). Predictions are only filled for the tree's OOB rows.
using TreeSink = std::function<void(int, std::span<const double>,
                                    std::span<const uint16_t>)>;
void StreamTrees(const Dataset& data, int num_trees, const ForestParams& params,
                 uint64_t master_seed, int num_threads, const TreeSink& sink);

// Trains `num_trees` trees exactly as TrainForest() would and returns their OOB
// votes without retaining the trees. Used for very large forests.
VoteMatrix StreamOobVotes(const Dataset& data, int num_trees,
                          const ForestParams& params, uint64_t master_seed,
                          int num_threads = 1);

struct OobPredictions {
  int num_classes = 0;
  // Rows with no OOB tree are undefined.
  std::vector<uint8_t> defined;
  int num_undefined = 0;
  // Classification: predicted class (-1 when undefined) and n x K vote
  // ratios (NaN rows when undefined).
  std::vector<int> labels;
  std::vector<double> probabilities;
  // Regression: mean OOB prediction (NaN when undefined).
  std::vector<double> values;
};

inline constexpr int kUndefinedLabel = -1;

// Vote ratios and majority labels. Majority ties are broken uniformly at
// random from a stream seeded with `tie_seed`; rows are visited in index
// order, so the outcome is a pure function of (votes, tie_seed).
OobPredictions PredictFromVotes(const VoteMatrix& votes, uint64_t tie_seed);

// Predictions of `tree` for every row of `data`.
std::vector<double> PredictTree(const Tree& tree, const Dataset& data);

// JSON container: trees, in-bag multiplicities, seeds and parameters.
std::string SerializeForest(const Forest& forest);
Forest DeserializeForest(const std::string& json);
void SaveForest(const Forest& forest, const std::string& path);
Forest LoadForest(const std::string& path);

}  // namespace oobcurve

#endif  // OOBCURVE_FOREST_H_
