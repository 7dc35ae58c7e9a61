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

#include "fairlens/interactions.h"

#include <algorithm>
#include <map>
#include <random>

#include "fairlens/error.h"
#include "fairlens/numeric.h"

namespace fairlens {

namespace {

// Appends the four corner points of the double difference for `pair`.
void AppendCorners(Matrix& points, const InteractionQuery& q,
                   std::span<const double> context, FeaturePair pair) {
  std::vector<double> p(context.begin(), context.end());
  const size_t i = pair.first;
  const size_t j = pair.second;
  p[i] = q.target[i];
  p[j] = q.target[j];
  points.append_row(p);
  p[i] = q.baseline[i];
  points.append_row(p);
  p[i] = q.target[i];
  p[j] = q.baseline[j];
  points.append_row(p);
  p[i] = q.baseline[i];
  points.append_row(p);
}

double ScoreFromCorners(std::span<const double> v, double hi, double hj) {
  const double s = (v[0] - v[1] - v[2] + v[3]) / (hi * hj);
  return s * s;
}

void CheckQuery(const InteractionQuery& q, FeaturePair pair) {
  Require(q.target.size() == q.baseline.size(), ErrorCode::kSchemaMismatch,
          "target and baseline have different widths");
  Require(pair.first < pair.second && pair.second < q.target.size(),
          ErrorCode::kInvalidArgument, "pair indices out of range");
}

}  // namespace

std::vector<FeaturePair> PairRanking::top_pairs() const {
  std::vector<FeaturePair> out;
  for (const auto& s : top) out.push_back(s.pair);
  return out;
}

std::optional<double> PairwiseScore(const RawFunction& f, const InteractionQuery& q,
                                    std::span<const double> context, FeaturePair pair) {
  CheckQuery(q, pair);
  Require(context.size() == q.target.size(), ErrorCode::kSchemaMismatch,
          "context has the wrong width");
  const double hi = q.target[pair.first] - q.baseline[pair.first];
  const double hj = q.target[pair.second] - q.baseline[pair.second];
  if (hi == 0.0 || hj == 0.0) return std::nullopt;
  Matrix points(0, context.size());
  AppendCorners(points, q, context, pair);
  const auto v = f(points);
  return ScoreFromCorners(v, hi, hj);
}

std::optional<double> AverageScore(const RawFunction& f, const InteractionQuery& q,
                                   FeaturePair pair) {
  const auto at_target = PairwiseScore(f, q, q.target, pair);
  if (!at_target) return std::nullopt;
  const auto at_baseline = PairwiseScore(f, q, q.baseline, pair);
  return 0.5 * (*at_target + *at_baseline);
}

std::vector<double> MedianModeBaseline(const Matrix& x, const FeatureSchema& schema) {
  Require(!x.empty(), ErrorCode::kEmptyInput, "baseline of empty data");
  Require(x.cols() == schema.size(), ErrorCode::kSchemaMismatch,
          "data does not match schema");
  std::vector<double> out(x.cols());
  for (size_t c = 0; c < x.cols(); ++c) {
    const auto col = x.column(c);
    if (schema.feature(c).kind == FeatureKind::kContinuous) {
      out[c] = Quantile(col, 0.5);
      continue;
    }
    std::map<double, size_t> counts;
    for (double v : col) ++counts[v];
    // Lowest value wins ties.
    size_t best = 0;
    for (const auto& [v, n] : counts) {
      if (n > best) {
        best = n;
        out[c] = v;
      }
    }
  }
  return out;
}

PairRanking RankPairs(std::span<const RawFunction> functions, const Matrix& validation,
                      const FeatureSchema& schema, const RankingOptions& options,
                      uint64_t seed) {
  Require(!functions.empty(), ErrorCode::kInvalidArgument, "no functions to rank");
  Require(options.draws >= 1, ErrorCode::kInvalidArgument, "draw count must be >= 1");
  Require(!validation.empty(), ErrorCode::kEmptyInput, "validation set is empty");
  const size_t d = validation.cols();
  const size_t num_pairs = d * (d - 1) / 2;
  Require(options.top_k <= num_pairs, ErrorCode::kInvalidArgument,
          "K exceeds the number of feature pairs");

  std::vector<FeaturePair> pairs;
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = i + 1; j < d; ++j) pairs.push_back({i, j});
  }

  std::vector<double> fixed_baseline;
  if (options.baseline == BaselineMode::kMedianMode) {
    fixed_baseline = MedianModeBaseline(validation, schema);
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, validation.rows() - 1);
  const size_t nf = functions.size();
  std::vector<double> sums(num_pairs * nf, 0.0);
  std::vector<size_t> defined(num_pairs, 0);

  for (size_t draw = 0; draw < options.draws; ++draw) {
    InteractionQuery q;
    const auto target = validation.row(pick(rng));
    q.target.assign(target.begin(), target.end());
    if (options.baseline == BaselineMode::kMedianMode) {
      q.baseline = fixed_baseline;
    } else {
      const auto base = validation.row(pick(rng));
      q.baseline.assign(base.begin(), base.end());
    }

    // All corner points for this draw go through one batch call per function.
    Matrix points(0, d);
    std::vector<size_t> active;
    for (size_t k = 0; k < num_pairs; ++k) {
      const auto& p = pairs[k];
      if (q.target[p.first] == q.baseline[p.first] ||
          q.target[p.second] == q.baseline[p.second]) {
        continue;
      }
      active.push_back(k);
      AppendCorners(points, q, q.target, p);
      AppendCorners(points, q, q.baseline, p);
    }
    if (active.empty()) continue;
    for (size_t fi = 0; fi < nf; ++fi) {
      const auto v = functions[fi](points);
      for (size_t a = 0; a < active.size(); ++a) {
        const auto& p = pairs[active[a]];
        const double hi = q.target[p.first] - q.baseline[p.first];
        const double hj = q.target[p.second] - q.baseline[p.second];
        const std::span<const double> corners(v.data() + 8 * a, 8);
        const double w = 0.5 * (ScoreFromCorners(corners.subspan(0, 4), hi, hj) +
                                ScoreFromCorners(corners.subspan(4, 4), hi, hj));
        sums[active[a] * nf + fi] += w;
      }
    }
    for (size_t k : active) ++defined[k];
  }

  PairRanking ranking;
  ranking.draws = options.draws;
  for (size_t k = 0; k < num_pairs; ++k) {
    if (defined[k] == 0) {
      ranking.excluded.push_back(pairs[k]);
      continue;
    }
    InteractionScore s;
    s.pair = pairs[k];
    for (size_t fi = 0; fi < nf; ++fi) {
      s.score += sums[k * nf + fi] / static_cast<double>(defined[k]);
    }
    s.defined_draws = defined[k];
    s.undefined_draws = options.draws - defined[k];
    ranking.ranked.push_back(s);
  }
  std::stable_sort(ranking.ranked.begin(), ranking.ranked.end(),
                   [](const InteractionScore& a, const InteractionScore& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.pair < b.pair;
                   });
  const size_t k = std::min(options.top_k, ranking.ranked.size());
  ranking.top.assign(ranking.ranked.begin(), ranking.ranked.begin() + static_cast<std::ptrdiff_t>(k));
  return ranking;
}

nlohmann::json RankingToJson(const PairRanking& ranking, const FeatureSchema& schema) {
  auto entry = [&](const InteractionScore& s) {
    return nlohmann::json{
        {"pair", {s.pair.first, s.pair.second}},
        {"names", {schema.feature(s.pair.first).name, schema.feature(s.pair.second).name}},
        {"score", s.score},
        {"defined_draws", s.defined_draws},
        {"undefined_draws", s.undefined_draws}};
  };
  nlohmann::json ranked = nlohmann::json::array();
  for (const auto& s : ranking.ranked) ranked.push_back(entry(s));
  nlohmann::json top = nlohmann::json::array();
  for (const auto& s : ranking.top) top.push_back(entry(s));
  nlohmann::json excluded = nlohmann::json::array();
  for (const auto& p : ranking.excluded) {
    excluded.push_back({{"pair", {p.first, p.second}},
                        {"names", {schema.feature(p.first).name, schema.feature(p.second).name}}});
  }
  return {{"format_version", 1},
          {"draws", ranking.draws},
          {"top", std::move(top)},
          {"ranked", std::move(ranked)},
          {"excluded", std::move(excluded)}};
}

}  // namespace fairlens
