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

#ifndef FAIRLENS_DATASET_H_
#define FAIRLENS_DATASET_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairlens/matrix.h"

namespace fairlens {

enum class FeatureKind { kBinary, kContinuous, kCategorical };

std::string_view FeatureKindName(FeatureKind kind);
FeatureKind ParseFeatureKind(std::string_view name);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  // Number of levels, only meaningful for kCategorical (values 0..n-1).
  int cardinality = 0;
  bool sensitive = false;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  FeatureSchema(std::vector<FeatureSpec> features, size_t group_feature);

  const std::vector<FeatureSpec>& features() const { return features_; }
  const FeatureSpec& feature(size_t i) const { return features_.at(i); }
  size_t size() const { return features_.size(); }
  size_t group_feature() const { return group_feature_; }

  // Returns a copy auditing a different sensitive binary feature.
  FeatureSchema with_group_feature(size_t index) const;

  std::optional<size_t> index_of(std::string_view name) const;
  std::vector<std::string> names() const;

  // Stable digest of names, kinds and flags; used to bind fitted models to
  // the data layout they were trained on.
  std::string fingerprint() const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  void Validate() const;

  std::vector<FeatureSpec> features_;
  size_t group_feature_ = 0;
};

// Randomized-experiment data. Treat as immutable once built.
struct ExperimentDataset {
  FeatureSchema schema;
  Matrix x;
  std::vector<int> t;
  std::vector<double> y;
  // Potential outcomes and their generating probabilities; synthetic only.
  std::optional<std::vector<double>> y0;
  std::optional<std::vector<double>> y1;
  std::optional<std::vector<double>> p0;
  std::optional<std::vector<double>> p1;
  double assignment_prob = 0.5;

  size_t size() const { return y.size(); }
  size_t num_features() const { return x.cols(); }
  bool has_potential_outcomes() const { return y0.has_value() && y1.has_value(); }

  // Group label (0/1) of row r under the audited sensitive feature.
  int group(size_t r) const {
    return x(r, schema.group_feature()) >= 0.5 ? 1 : 0;
  }

  ExperimentDataset subset(std::span<const size_t> rows) const;
  ExperimentDataset with_group_feature(size_t index) const;

  // Row indices with T == arm.
  std::vector<size_t> arm_rows(int arm) const;

  // Throws on inconsistent shapes, non-binary T, or Y != Y_T.
  void Validate() const;

  friend bool operator==(const ExperimentDataset&, const ExperimentDataset&) = default;
};

struct SyntheticConfig {
  size_t n = 50000;
  double c = 0.0;
  uint64_t seed = 0;
};

// Potential-outcome probabilities of the 12-covariate generator. `x` is
// indexed 0..11 for covariates x1..x12.
double SyntheticTreatedProbability(std::span<const double> x);
double SyntheticControlProbability(std::span<const double> x);

// Twelve covariates x1..x12: x1..x4 sensitive binaries, x5..x9 Gaussian,
// x10..x12 binary. Links: x1-x6, x2-x8, x3-{x5,x7,x9}; x4 independent.
ExperimentDataset GenerateSynthetic(const SyntheticConfig& cfg);

struct CollegeConfig {
  size_t n = 20000;
  double minority_fraction = 0.3;
  double prep_gap = 0.8;
  double score_noise = 0.5;
  double grad_slope = 1.5;
  double grad_intercept = 0.0;
  double budget = 0.4;
  uint64_t seed = 0;
};

// Two features: `minority` (sensitive binary, 1 = minority) and
// `test_score`. T is admission, Y graduation.
ExperimentDataset GenerateCollege(const CollegeConfig& cfg);

struct DatasetSplit {
  ExperimentDataset train;
  ExperimentDataset audit;
  ExperimentDataset test;
};

// Stratified on T. Rows keep their original relative order inside each part.
DatasetSplit Split(const ExperimentDataset& ds, std::array<double, 3> fractions,
                   uint64_t seed);

}  // namespace fairlens

#endif  // FAIRLENS_DATASET_H_
