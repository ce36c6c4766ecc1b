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

#include "oobcurve/theory.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oobcurve/random.h"

namespace oobcurve {
namespace {

// Terms smaller than this fraction of the running sum end a tail summation.
constexpr double kTailCutoff = 1e-18;
// Binomial probabilities below this are dropped from expectations.
constexpr double kNegligibleMass = 1e-300;

double LogGamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double LogBinomialPmf(int n, int x, double log_p, double log_q) {
  return LogGamma(n + 1.0) - LogGamma(x + 1.0) - LogGamma(n - x + 1.0) +
         x * log_p + (n - x) * log_q;
}

void CheckEps(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw TheoryError("eps must lie in [0, 1], got " + std::to_string(eps));
  }
}

void CheckTrees(int num_trees) {
  if (num_trees < 1) throw TheoryError("number of trees must be >= 1");
}

// P(X > T/2) + 0.5 P(X = T/2) for eps < 0.5, summed upwards from T/2 where the
// terms decrease.
double MajorityWrongTail(double eps, int num_trees) {
  const double log_p = std::log(eps);
  const double log_q = std::log1p(-eps);
  const double log_odds = log_p - log_q;
  int x = num_trees / 2;
  double weight = 0.5;
  if (num_trees % 2 == 1) {
    ++x;
    weight = 1.0;
  }
  double log_term = LogBinomialPmf(num_trees, x, log_p, log_q);
  double sum = 0.0;
  for (; x <= num_trees; ++x) {
    const double term = std::exp(log_term);
    sum += weight * term;
    weight = 1.0;
    if (term <= kTailCutoff * sum || term == 0.0) break;
    log_term += std::log(static_cast<double>(num_trees - x)) -
                std::log(static_cast<double>(x + 1)) + log_odds;
  }
  return sum;
}

}  // namespace

double ExpectedErrorRate(double eps, int num_trees) {
  CheckEps(eps);
  CheckTrees(num_trees);
  if (eps == 0.0) return 0.0;
  if (eps == 1.0) return 1.0;
  if (eps == 0.5) return 0.5;
  if (eps > 0.5) return 1.0 - MajorityWrongTail(1.0 - eps, num_trees);
  return MajorityWrongTail(eps, num_trees);
}

double ExpectedBrier(double eps, int num_trees) {
  CheckEps(eps);
  CheckTrees(num_trees);
  return eps * eps + eps * (1.0 - eps) / num_trees;
}

double ExpectedSquaredError(double error_mean, double error_variance, int num_trees) {
  CheckTrees(num_trees);
  if (!(error_variance >= 0.0)) throw TheoryError("variance must be non-negative");
  return error_mean * error_mean + error_variance / num_trees;
}

double ExpectedLogLossTaylor(double eps, int num_trees, double offset) {
  CheckEps(eps);
  CheckTrees(num_trees);
  if (!(offset > 0.0)) throw TheoryError("offset must be positive");
  const double inner = 1.0 - eps + offset;
  return -std::log1p(offset - eps) +
         eps * (1.0 - eps) / (2.0 * num_trees * inner * inner);
}

double ExpectedLogLossExact(double eps, int num_trees, double offset) {
  CheckEps(eps);
  CheckTrees(num_trees);
  if (!(offset > 0.0)) throw TheoryError("offset must be positive");
  // -ln(1 - x/T + a), accurate at both ends of the support.
  const auto loss = [&](int x) {
    const double right = static_cast<double>(num_trees - x) / num_trees;
    return right < 0.5 ? -std::log(right + offset)
                       : -std::log1p(offset - static_cast<double>(x) / num_trees);
  };
  if (eps == 0.0) return loss(0);
  if (eps == 1.0) return loss(num_trees);
  const double log_p = std::log(eps);
  const double log_q = std::log1p(-eps);
  const double log_odds = log_p - log_q;
  const int mode = std::min(num_trees, static_cast<int>((num_trees + 1) * eps));
  const double log_mode = LogBinomialPmf(num_trees, mode, log_p, log_q);
  double sum = std::exp(log_mode) * loss(mode);
  // Upwards from the mode.
  double log_term = log_mode;
  for (int x = mode; x < num_trees; ++x) {
    log_term += std::log(static_cast<double>(num_trees - x)) -
                std::log(static_cast<double>(x + 1)) + log_odds;
    const double term = std::exp(log_term);
    if (term < kNegligibleMass) break;
    sum += term * loss(x + 1);
  }
  // Downwards from the mode.
  log_term = log_mode;
  for (int x = mode; x > 0; --x) {
    log_term += std::log(static_cast<double>(x)) -
                std::log(static_cast<double>(num_trees - x + 1)) - log_odds;
    const double term = std::exp(log_term);
    if (term < kNegligibleMass) break;
    sum += term * loss(x - 1);
  }
  return sum;
}

int OobEffectiveTrees(int num_trees) {
  CheckTrees(num_trees);
  return std::max(1, static_cast<int>(std::floor(num_trees * std::exp(-1.0) + 0.5)));
}

void ValidateDifficulties(std::span<const double> epsilons) {
  for (size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] >= 0.0 && epsilons[i] <= 1.0)) {
      throw TheoryError("difficulty " + std::to_string(i) + " = " +
                        std::to_string(epsilons[i]) + " is outside [0, 1]");
    }
  }
}

const char* ExpectedMeasureName(ExpectedMeasure measure) {
  switch (measure) {
    case ExpectedMeasure::kErrorRate:
      return "error_rate";
    case ExpectedMeasure::kBrier:
      return "brier";
    case ExpectedMeasure::kLogLossTaylor:
      return "logloss_taylor";
    case ExpectedMeasure::kLogLossExact:
      return "logloss_exact";
  }
  return "";
}

ExpectedMeasure ParseExpectedMeasure(const std::string& name) {
  for (const ExpectedMeasure m :
       {ExpectedMeasure::kErrorRate, ExpectedMeasure::kBrier,
        ExpectedMeasure::kLogLossTaylor, ExpectedMeasure::kLogLossExact}) {
    if (name == ExpectedMeasureName(m)) return m;
  }
  throw TheoryError("unknown analytic curve '" + name + "'");
}

Curve ExpectedCurve(const DifficultyVector& difficulties, std::span<const int> grid,
                    ExpectedMeasure measure, bool oob_adjust, double offset) {
  if (difficulties.epsilons.empty()) throw TheoryError("no difficulties given");
  ValidateDifficulties(difficulties.epsilons);
  Curve curve;
  curve.measure = ExpectedMeasureName(measure);
  curve.metadata["source"] = "analytic";
  curve.metadata["oob_adjust"] = oob_adjust ? "true" : "false";
  curve.metadata["observations"] = std::to_string(difficulties.epsilons.size());
  for (const int t : grid) {
    CheckTrees(t);
    if (!curve.grid.empty() && t <= curve.grid.back()) {
      throw TheoryError("grid must be strictly increasing");
    }
    const int t_eff = oob_adjust ? OobEffectiveTrees(t) : t;
    double sum = 0.0;
    for (const double eps : difficulties.epsilons) {
      switch (measure) {
        case ExpectedMeasure::kErrorRate:
          sum += ExpectedErrorRate(eps, t_eff);
          break;
        case ExpectedMeasure::kBrier:
          sum += ExpectedBrier(eps, t_eff);
          break;
        case ExpectedMeasure::kLogLossTaylor:
          sum += ExpectedLogLossTaylor(eps, t_eff, offset);
          break;
        case ExpectedMeasure::kLogLossExact:
          sum += ExpectedLogLossExact(eps, t_eff, offset);
          break;
      }
    }
    curve.grid.push_back(t);
    curve.values.push_back(sum / difficulties.epsilons.size());
  }
  UpdateFirstDefined(curve);
  return curve;
}

Curve ExpectedErrorCurve(const DifficultyVector& difficulties,
                         std::span<const int> grid, bool oob_adjust) {
  return ExpectedCurve(difficulties, grid, ExpectedMeasure::kErrorRate, oob_adjust);
}

DifficultyVector EstimateDifficulties(const VoteMatrix& votes, const Dataset& data) {
  if (data.task() != TaskKind::kBinaryClassification) {
    throw TheoryError("difficulty estimation requires a binary classification task");
  }
  if (votes.num_rows() != data.num_rows() || votes.num_classes() != 2) {
    throw TheoryError("vote matrix does not match the dataset");
  }
  DifficultyVector out;
  out.estimated = true;
  out.num_trees = votes.prefix();
  out.epsilons.resize(data.num_rows());
  for (int i = 0; i < data.num_rows(); ++i) {
    const int count = votes.oob_count(i);
    if (count == 0) {
      throw TheoryError("row " + std::to_string(i) +
                        " was never out-of-bag; grow more trees");
    }
    const double p = static_cast<double>(votes.votes(i, 1)) / count;
    out.epsilons[i] = std::abs(data.label(i) - p);
  }
  return out;
}

DifficultyVector EstimateDifficulties(const Forest& forest, const Dataset& data) {
  if (data.task() != TaskKind::kBinaryClassification) {
    throw TheoryError("difficulty estimation requires a binary classification task");
  }
  return EstimateDifficulties(OobVotesPrefix(forest, data, forest.num_trees()), data);
}

DifficultyVector EstimateDifficulties(const Dataset& data, int num_trees,
                                      const ForestParams& params, uint64_t master_seed,
                                      int num_threads) {
  if (data.task() != TaskKind::kBinaryClassification) {
    throw TheoryError("difficulty estimation requires a binary classification task");
  }
  return EstimateDifficulties(
      StreamOobVotes(data, num_trees, params, master_seed, num_threads), data);
}

Histogram DifficultyHistogram(std::span<const double> epsilons, int bins) {
  if (bins < 1) throw TheoryError("histogram needs at least one bin");
  ValidateDifficulties(epsilons);
  Histogram h;
  h.counts.assign(bins, 0);
  for (int b = 0; b <= bins; ++b) h.edges.push_back(static_cast<double>(b) / bins);
  for (const double eps : epsilons) {
    ++h.counts[std::min(bins - 1, static_cast<int>(eps * bins))];
  }
  return h;
}

namespace {

void CheckTwoPoint(int y1, int y2, double p1_mean, double p2_mean, int num_trees) {
  if ((y1 != 0 && y1 != 1) || (y2 != 0 && y2 != 1) || y1 == y2) {
    throw TheoryError("the two labels must be 0 and 1 in some order");
  }
  for (const double p : {p1_mean, p2_mean}) {
    if (!(p > 0.0 && p < 1.0)) throw TheoryError("vote means must lie in (0, 1)");
  }
  CheckTrees(num_trees);
}

std::vector<double> BinomialPmf(int n, double p) {
  std::vector<double> pmf(n + 1);
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  for (int x = 0; x <= n; ++x) pmf[x] = std::exp(LogBinomialPmf(n, x, log_p, log_q));
  return pmf;
}

}  // namespace

double AucTwoPointScenario(int y1, int y2, double p1_mean, double p2_mean,
                           int num_trees, int replicates, uint64_t seed) {
  CheckTwoPoint(y1, y2, p1_mean, p2_mean, num_trees);
  if (replicates < 1) throw TheoryError("replicates must be >= 1");
  const double pos_mean = y1 == 1 ? p1_mean : p2_mean;
  const double neg_mean = y1 == 1 ? p2_mean : p1_mean;
  // Inverse-CDF draws from the exact pmf. The library binomial sampler is
  // measurably biased for n * p around 10.
  const auto cdf_of = [num_trees](double p) {
    std::vector<double> cdf = BinomialPmf(num_trees, p);
    std::partial_sum(cdf.begin(), cdf.end(), cdf.begin());
    return cdf;
  };
  const std::vector<double> pos_cdf = cdf_of(pos_mean);
  const std::vector<double> neg_cdf = cdf_of(neg_mean);
  const auto draw = [](const std::vector<double>& cdf, double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * cdf.back());
    return static_cast<int>(std::min<ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
  };
  RandomEngine rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double total = 0.0;
  for (int r = 0; r < replicates; ++r) {
    const int a = draw(pos_cdf, unit(rng));
    const int b = draw(neg_cdf, unit(rng));
    total += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return total / replicates;
}

double AucTwoPointExact(int y1, int y2, double p1_mean, double p2_mean,
                        int num_trees) {
  CheckTwoPoint(y1, y2, p1_mean, p2_mean, num_trees);
  const std::vector<double> pos = BinomialPmf(num_trees, y1 == 1 ? p1_mean : p2_mean);
  const std::vector<double> neg = BinomialPmf(num_trees, y1 == 1 ? p2_mean : p1_mean);
  // above[b] = P(pos votes > b).
  double above = 0.0;
  double total = 0.0;
  for (int b = num_trees; b >= 0; --b) {
    total += neg[b] * (above + 0.5 * pos[b]);
    above += pos[b];
  }
  return total;
}

}  // namespace oobcurve
