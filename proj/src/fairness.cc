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

#include "fairlens/fairness.h"

#include <algorithm>
#include <cmath>

#include "fairlens/error.h"

namespace fairlens {

double ValueModel::Value(bool treated, double y) const {
  const bool success = y > 0.0;
  if (treated) {
    return unit_value_treated * y - fixed_cost_treated -
           (success ? success_cost_treated : 0.0);
  }
  return unit_value_control * y - fixed_cost_control -
         (success ? success_cost_control : 0.0);
}

ValueModel ValueModel::BloodDonation() {
  ValueModel v;
  v.unit_value_treated = 220.0;
  v.unit_value_control = 220.0;
  v.success_cost_treated = 40.0;
  v.fixed_cost_treated = 1.0;
  return v;
}

ValueModel ValueModel::Referral() {
  ValueModel v;
  v.unit_value_treated = 3.72;
  v.unit_value_control = 3.93;
  return v;
}

nlohmann::json ValueModel::ToJson() const {
  return {{"unit_value_treated", unit_value_treated},
          {"unit_value_control", unit_value_control},
          {"fixed_cost_treated", fixed_cost_treated},
          {"fixed_cost_control", fixed_cost_control},
          {"success_cost_treated", success_cost_treated},
          {"success_cost_control", success_cost_control}};
}

ValueModel ValueModel::FromJson(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "blood") return BloodDonation();
    if (name == "referral") return Referral();
    if (name == "outcome") return Outcome();
    Fail(ErrorCode::kInvalidArgument, "unknown value model '" + name + "'");
  }
  ValueModel v;
  v.unit_value_treated = j.value("unit_value_treated", v.unit_value_treated);
  v.unit_value_control = j.value("unit_value_control", v.unit_value_control);
  v.fixed_cost_treated = j.value("fixed_cost_treated", v.fixed_cost_treated);
  v.fixed_cost_control = j.value("fixed_cost_control", v.fixed_cost_control);
  v.success_cost_treated = j.value("success_cost_treated", v.success_cost_treated);
  v.success_cost_control = j.value("success_cost_control", v.success_cost_control);
  return v;
}

std::string_view ScoreSourceName(ScoreSource s) {
  switch (s) {
    case ScoreSource::kTreatmentEffect: return "tlearner-ite";
    case ScoreSource::kAdjustedSurrogate: return "adjusted-surrogate";
    case ScoreSource::kConstant: return "constant";
  }
  return "constant";
}

DecisionPolicy::DecisionPolicy(ScoreSource source, RawFunction score,
                               std::array<double, 2> thresholds, size_t group_feature)
    : source_(source), score_(std::move(score)), thresholds_(thresholds),
      group_feature_(group_feature) {
  Require(static_cast<bool>(score_), ErrorCode::kInvalidArgument, "policy needs a score");
}

DecisionPolicy DecisionPolicy::TreatAll(size_t group_feature) {
  return DecisionPolicy(
      ScoreSource::kConstant,
      [](const Matrix& x) { return std::vector<double>(x.rows(), 0.0); }, {0.0, 0.0},
      group_feature);
}

DecisionPolicy DecisionPolicy::TreatNone(size_t group_feature) {
  return DecisionPolicy(
      ScoreSource::kConstant,
      [](const Matrix& x) { return std::vector<double>(x.rows(), 0.0); }, {1.0, 1.0},
      group_feature);
}

std::vector<int> ThresholdDecisions(const Matrix& x, std::span<const double> scores,
                                    std::array<double, 2> thresholds, size_t group_feature) {
  Require(scores.size() == x.rows(), ErrorCode::kInvalidArgument,
          "score count does not match rows");
  Require(group_feature < x.cols(), ErrorCode::kSchemaMismatch, "group feature out of range");
  std::vector<int> out(x.rows());
  for (size_t r = 0; r < x.rows(); ++r) {
    const int g = x(r, group_feature) >= 0.5 ? 1 : 0;
    out[r] = scores[r] >= thresholds[g] ? 1 : 0;
  }
  return out;
}

std::vector<int> DecisionPolicy::Decide(const Matrix& x) const {
  const auto scores = score_(x);
  return ThresholdDecisions(x, scores, thresholds_, group_feature_);
}

namespace {

struct Moments {
  size_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void Add(double v) {
    ++n;
    sum += v;
    sum_sq += v * v;
  }
  double mean() const { return sum / static_cast<double>(n); }
  // Sample variance (n - 1 denominator); zero for a single observation.
  double variance() const {
    if (n < 2) return 0.0;
    const double m = mean();
    return std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
  }
};

}  // namespace

MockExperimentResult MockEvaluate(const ExperimentDataset& ds, std::span<const int> decisions,
                                  const ValueModel& value) {
  const size_t n = ds.size();
  Require(decisions.size() == n, ErrorCode::kInvalidArgument,
          "decision count does not match rows");
  MockExperimentResult out;
  std::array<Moments, 2> treated_y, control_y;
  Moments treated_value, control_value;
  size_t decided = 0;
  for (size_t r = 0; r < n; ++r) {
    const int g = ds.group(r);
    auto& gs = out.groups[g];
    ++gs.size;
    const bool d = decisions[r] == 1;
    if (d) {
      ++gs.decided_treat;
      ++decided;
    }
    if (d && ds.t[r] == 1) {
      ++gs.matched_treated;
      treated_y[g].Add(ds.y[r]);
      treated_value.Add(value.Value(true, ds.y[r]));
    } else if (!d && ds.t[r] == 0) {
      ++gs.matched_control;
      control_y[g].Add(ds.y[r]);
      control_value.Add(value.Value(false, ds.y[r]));
    }
  }
  for (int g = 0; g < 2; ++g) {
    auto& gs = out.groups[g];
    Require(gs.size > 0, ErrorCode::kEmptyInput,
            "group " + std::to_string(g) + " of the audited feature is empty");
    gs.treat_rate = static_cast<double>(gs.decided_treat) / static_cast<double>(gs.size);
    if (treated_y[g].n > 0) {
      gs.outcome_mean = treated_y[g].mean();
      gs.outcome_se = std::sqrt(treated_y[g].variance() / static_cast<double>(treated_y[g].n));
    }
    if (control_y[g].n > 0) gs.control_outcome_mean = control_y[g].mean();
  }

  const double pi = static_cast<double>(decided) / static_cast<double>(n);
  out.treat_fraction = pi;
  Require(treated_value.n + control_value.n > 0, ErrorCode::kEmptyInput,
          "mock experiment matched no rows");
  double mean = 0.0;
  double var = 0.0;
  if (pi > 0.0) {
    Require(treated_value.n > 0, ErrorCode::kEmptyInput,
            "policy treats rows but no matched treated rows exist");
    mean += pi * treated_value.mean();
    var += pi * pi * treated_value.variance() / static_cast<double>(treated_value.n);
  }
  if (pi < 1.0) {
    Require(control_value.n > 0, ErrorCode::kEmptyInput,
            "policy withholds treatment but no matched control rows exist");
    mean += (1.0 - pi) * control_value.mean();
    var += (1.0 - pi) * (1.0 - pi) * control_value.variance() /
           static_cast<double>(control_value.n);
  }
  out.econ_mean = mean;
  out.econ_se = std::sqrt(var);
  return out;
}

MockExperimentResult MockEvaluate(const ExperimentDataset& ds, const DecisionPolicy& policy,
                                  const ValueModel& value) {
  Require(policy.group_feature() == ds.schema.group_feature(), ErrorCode::kSchemaMismatch,
          "policy and dataset audit different group features");
  const auto decisions = policy.Decide(ds.x);
  return MockEvaluate(ds, decisions, value);
}

double PRule(double a, double b) {
  Require(a >= 0.0 && b >= 0.0, ErrorCode::kInvalidArgument,
          "p%-rule inputs must be nonnegative");
  if (a == 0.0 && b == 0.0) {
    Fail(ErrorCode::kUndefinedMetric, "p%-rule is undefined when both values are zero");
  }
  return 100.0 * std::min(a, b) / std::max(a, b);
}

double TreatmentFairness(const MockExperimentResult& r) {
  const double a = r.groups[0].treat_rate;
  const double b = r.groups[1].treat_rate;
  if (a == 0.0 && b == 0.0) return 100.0;
  return PRule(a, b);
}

std::optional<double> OutcomeFairness(const MockExperimentResult& r) {
  const auto& a = r.groups[0].outcome_mean;
  const auto& b = r.groups[1].outcome_mean;
  if (!a || !b) return std::nullopt;
  if (*a < 0.0 || *b < 0.0 || (*a == 0.0 && *b == 0.0)) return std::nullopt;
  return PRule(*a, *b);
}

std::optional<double> NaturalOutcomeFairness(const MockExperimentResult& r) {
  const auto& a = r.groups[0].control_outcome_mean;
  const auto& b = r.groups[1].control_outcome_mean;
  if (!a || !b) return std::nullopt;
  if (*a < 0.0 || *b < 0.0 || (*a == 0.0 && *b == 0.0)) return std::nullopt;
  return PRule(*a, *b);
}

double NoWorseOff(double of_b, double of_a) {
  Require(of_b >= 0.0, ErrorCode::kInvalidArgument, "outcome fairness must be nonnegative");
  if (!(of_a > 0.0)) {
    Fail(ErrorCode::kUndefinedMetric, "no-worse-off needs a positive benchmark outcome fairness");
  }
  return std::min(of_b / of_a, 1.0) * 100.0;
}

FairnessReport Evaluate(const ExperimentDataset& ds, std::span<const int> decisions,
                        const ValueModel& value,
                        std::optional<std::span<const int>> benchmark) {
  FairnessReport rep;
  rep.mock = MockEvaluate(ds, decisions, value);
  rep.tf = TreatmentFairness(rep.mock);
  const double r0 = rep.mock.groups[0].treat_rate;
  const double r1 = rep.mock.groups[1].treat_rate;
  if (r1 > 0.0) rep.tf_directed = r0 / r1;
  rep.of = OutcomeFairness(rep.mock);
  if (!rep.of) rep.undefined.push_back("of");
  const auto& m0 = rep.mock.groups[0].outcome_mean;
  const auto& m1 = rep.mock.groups[1].outcome_mean;
  if (m0 && m1 && *m1 != 0.0) rep.of_directed = *m0 / *m1;
  rep.econ_mean = rep.mock.econ_mean;
  rep.econ_se = rep.mock.econ_se;

  if (benchmark) {
    const auto bench = MockEvaluate(ds, *benchmark, value);
    const bool never_treat = bench.groups[0].decided_treat + bench.groups[1].decided_treat == 0;
    const auto of_a = never_treat ? NaturalOutcomeFairness(bench) : OutcomeFairness(bench);
    if (rep.of && of_a && *of_a > 0.0) rep.nwo = NoWorseOff(*rep.of, *of_a);
  }
  if (!rep.nwo) rep.undefined.push_back("nwo");
  return rep;
}

FairnessReport Evaluate(const ExperimentDataset& ds, const DecisionPolicy& policy,
                        const ValueModel& value, const DecisionPolicy* benchmark) {
  Require(policy.group_feature() == ds.schema.group_feature(), ErrorCode::kSchemaMismatch,
          "policy and dataset audit different group features");
  const auto decisions = policy.Decide(ds.x);
  if (!benchmark) return Evaluate(ds, decisions, value);
  const auto bench = benchmark->Decide(ds.x);
  return Evaluate(ds, decisions, value, std::span<const int>(bench));
}

namespace {

nlohmann::json Optional(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json ReportToJson(const FairnessReport& report) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : report.mock.groups) {
    groups.push_back({{"size", g.size},
                      {"decided_treat", g.decided_treat},
                      {"matched_treated", g.matched_treated},
                      {"matched_control", g.matched_control},
                      {"treat_rate", g.treat_rate},
                      {"outcome_mean", Optional(g.outcome_mean)},
                      {"outcome_se", Optional(g.outcome_se)},
                      {"control_outcome_mean", Optional(g.control_outcome_mean)}});
  }
  return {{"format_version", 1},
          {"tf", report.tf},
          {"of", Optional(report.of)},
          {"nwo", Optional(report.nwo)},
          {"econ", {{"mean", report.econ_mean},
                    {"se", report.econ_se},
                    {"ci_low", report.econ_ci_low()},
                    {"ci_high", report.econ_ci_high()}}},
          {"undefined", report.undefined},
          {"diagnostics", {{"tf_directed", Optional(report.tf_directed)},
                           {"of_directed", Optional(report.of_directed)},
                           {"treat_fraction", report.mock.treat_fraction},
                           {"groups", std::move(groups)}}}};
}

}  // namespace fairlens
