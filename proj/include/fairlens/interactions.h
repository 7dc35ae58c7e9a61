/*
 * Copyright 2026 The FairLens Authors.
 *
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

#ifndef FAIRLENS_INTERACTIONS_H_
#define FAIRLENS_INTERACTIONS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fairlens/dataset.h"
#include "fairlens/gam.h"
#include "fairlens/models.h"
#include "json.hpp"

namespace fairlens {

// Target instance x* and baseline x'. The step on feature i is
// h_i = target[i] - baseline[i].
struct InteractionQuery {
  std::vector<double> target;
  std::vector<double> baseline;
};

// Squared secant estimate of the mixed partial of `f` in (i, j):
//   ((f(x*_i, x*_j) - f(x'_i, x*_j) - f(x*_i, x'_j) + f(x'_i, x'_j)) / (h_i h_j))^2
// with every other coordinate taken from `context`. nullopt when h_i or
// h_j is zero.
std::optional<double> PairwiseScore(const RawFunction& f, const InteractionQuery& q,
                                    std::span<const double> context, FeaturePair pair);

// Mean of PairwiseScore over the two contexts x* and x'.
std::optional<double> AverageScore(const RawFunction& f, const InteractionQuery& q,
                                   FeaturePair pair);

enum class BaselineMode {
  kMedianMode,        // feature-wise median (continuous) or mode (discrete)
  kValidationSample,  // a second sampled validation row
};

struct RankingOptions {
  size_t draws = 50;
  size_t top_k = 10;
  BaselineMode baseline = BaselineMode::kMedianMode;
};

struct InteractionScore {
  FeaturePair pair;
  double score = 0.0;
  size_t defined_draws = 0;
  size_t undefined_draws = 0;
};

struct PairRanking {
  // Every pair with at least one defined draw, best first.
  std::vector<InteractionScore> ranked;
  // The first top_k entries of `ranked`.
  std::vector<InteractionScore> top;
  // Pairs undefined in every draw.
  std::vector<FeaturePair> excluded;
  size_t draws = 0;

  std::vector<FeaturePair> top_pairs() const;
};

// Per-feature median (continuous) or mode (binary / categorical).
std::vector<double> MedianModeBaseline(const Matrix& x, const FeatureSchema& schema);

// Scores every pair over `draws` sampled (target, baseline) queries from
// `validation`, averaging defined draws. With several functions the
// per-function averages are summed, e.g. both arms of a T-learner. Ties
// break by pair order.
PairRanking RankPairs(std::span<const RawFunction> functions, const Matrix& validation,
                      const FeatureSchema& schema, const RankingOptions& options,
                      uint64_t seed);

nlohmann::json RankingToJson(const PairRanking& ranking, const FeatureSchema& schema);

}  // namespace fairlens

#endif  // FAIRLENS_INTERACTIONS_H_
