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

#ifndef FAIRLENS_FAIRNESS_H_
#define FAIRLENS_FAIRNESS_H_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairlens/dataset.h"
#include "fairlens/models.h"
#include "json.hpp"

namespace fairlens {

// Currency value of one individual given whether they were treated and
// their outcome. For binary outcomes "success" means y > 0.
struct ValueModel {
  double unit_value_treated = 1.0;
  double unit_value_control = 1.0;
  double fixed_cost_treated = 0.0;
  double fixed_cost_control = 0.0;
  double success_cost_treated = 0.0;
  double success_cost_control = 0.0;

  double Value(bool treated, double y) const;

  // 220 per donation unit, 40 coupon per donating treated person, 1 per
  // message sent.
  static ValueModel BloodDonation();
  // 3.93 per referral without a gift, 3.72 with one.
  static ValueModel Referral();
  // Value equals outcome.
  static ValueModel Outcome() { return {}; }

  nlohmann::json ToJson() const;
  static ValueModel FromJson(const nlohmann::json& j);
};

enum class ScoreSource { kTreatmentEffect, kAdjustedSurrogate, kConstant };

std::string_view ScoreSourceName(ScoreSource s);

// decide(x) = 1 iff score(x) >= thresholds[group(x)]. Reads covariates only.
class DecisionPolicy {
 public:
  DecisionPolicy(ScoreSource source, RawFunction score, std::array<double, 2> thresholds,
                 size_t group_feature);

  static DecisionPolicy TreatAll(size_t group_feature);
  static DecisionPolicy TreatNone(size_t group_feature);

  ScoreSource source() const { return source_; }
  const std::array<double, 2>& thresholds() const { return thresholds_; }
  size_t group_feature() const { return group_feature_; }

  std::vector<double> Scores(const Matrix& x) const { return score_(x); }
  std::vector<int> Decide(const Matrix& x) const;

 private:
  ScoreSource source_;
  RawFunction score_;
  std::array<double, 2> thresholds_;
  size_t group_feature_;
};

// decide = score >= thresholds[group]; group read from `group_feature`.
std::vector<int> ThresholdDecisions(const Matrix& x, std::span<const double> scores,
                                    std::array<double, 2> thresholds, size_t group_feature);

struct GroupStats {
  size_t size = 0;
  size_t decided_treat = 0;
  size_t matched_treated = 0;  // decide = 1 and T = 1
  size_t matched_control = 0;  // decide = 0 and T = 0
  double treat_rate = 0.0;
  std::optional<double> outcome_mean;          // mean Y over matched_treated
  std::optional<double> outcome_se;
  std::optional<double> control_outcome_mean;  // mean Y over matched_control
};

struct MockExperimentResult {
  std::array<GroupStats, 2> groups;
  double treat_fraction = 0.0;
  double econ_mean = 0.0;
  double econ_se = 0.0;
};

// Evaluates a policy on the rows whose randomized treatment matches the
// policy's decision. Only (x, T, Y) are read.
MockExperimentResult MockEvaluate(const ExperimentDataset& ds, std::span<const int> decisions,
                                  const ValueModel& value);
MockExperimentResult MockEvaluate(const ExperimentDataset& ds, const DecisionPolicy& policy,
                                  const ValueModel& value);

// 100 * min(a, b) / max(a, b). Throws kUndefinedMetric when both are zero.
double PRule(double a, double b);

// Treatment fairness; 100 when both groups have rate zero.
double TreatmentFairness(const MockExperimentResult& r);
// Outcome fairness; nullopt when a group has no matched treated rows or
// both means are zero.
std::optional<double> OutcomeFairness(const MockExperimentResult& r);
// Outcome fairness of the never-treat world, from control-arm means.
std::optional<double> NaturalOutcomeFairness(const MockExperimentResult& r);

// min(of_b / of_a, 1) * 100. Throws kUndefinedMetric when of_a is zero.
double NoWorseOff(double of_b, double of_a);

struct FairnessReport {
  double tf = 100.0;
  std::optional<double> of;
  std::optional<double> nwo;
  double econ_mean = 0.0;
  double econ_se = 0.0;
  // Directed ratios group0 / group1, kept for the sign of any disparity.
  std::optional<double> tf_directed;
  std::optional<double> of_directed;
  std::vector<std::string> undefined;  // names of metrics that are undefined
  MockExperimentResult mock;

  double econ_ci_low() const { return econ_mean - 1.96 * econ_se; }
  double econ_ci_high() const { return econ_mean + 1.96 * econ_se; }
};

// Builds the report; NWO is computed against `benchmark` when given. A
// benchmark that treats nobody uses the natural (control-arm) outcome
// fairness.
FairnessReport Evaluate(const ExperimentDataset& ds, std::span<const int> decisions,
                        const ValueModel& value,
                        std::optional<std::span<const int>> benchmark = std::nullopt);
FairnessReport Evaluate(const ExperimentDataset& ds, const DecisionPolicy& policy,
                        const ValueModel& value,
                        const DecisionPolicy* benchmark = nullptr);

nlohmann::json ReportToJson(const FairnessReport& report);

}  // namespace fairlens

#endif  // FAIRLENS_FAIRNESS_H_
