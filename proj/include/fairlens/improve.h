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

#ifndef FAIRLENS_IMPROVE_H_
#define FAIRLENS_IMPROVE_H_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairlens/dataset.h"
#include "fairlens/fairness.h"
#include "fairlens/gam.h"
#include "json.hpp"

namespace fairlens {

// A 1D shape (feature) or a 2D shape (pair) of an additive model.
struct ShapeId {
  std::optional<size_t> feature;
  std::optional<FeaturePair> pair;

  static ShapeId Feature(size_t f) { return {f, std::nullopt}; }
  static ShapeId Pair(FeaturePair p) { return {std::nullopt, p}; }
  bool references(size_t f) const {
    return feature ? *feature == f : (pair->first == f || pair->second == f);
  }
  friend bool operator==(const ShapeId&, const ShapeId&) = default;
};

// "x3" or "x5*x7" against the model's feature names.
ShapeId ParseShapeId(const AdditiveModel& model, std::string_view label);
std::string ShapeLabel(const AdditiveModel& model, const ShapeId& id);

// Every shape of `model` that touches feature `f`.
std::vector<ShapeId> ShapesReferencing(const AdditiveModel& model, size_t f);

// Per-row value of one shape.
std::vector<double> ShapeContribution(const AdditiveModel& model, const ShapeId& id,
                                      const Matrix& x);

enum class Replacement { kZero, kAudit };

std::string_view ReplacementName(Replacement r);
Replacement ParseReplacement(std::string_view name);

struct ShapeAdjustment {
  ShapeId target;
  double alpha = 1.0;
  Replacement replacement = Replacement::kZero;
};

nlohmann::json AdjustmentsToJson(const AdditiveModel& model,
                                 std::span<const ShapeAdjustment> adjustments);
std::vector<ShapeAdjustment> AdjustmentsFromJson(const AdditiveModel& model,
                                                 const nlohmann::json& j);

// teacher_raw - sum(alpha * f_distilled) + sum(alpha * f_replacement).
std::vector<double> AdjustPrediction(std::span<const double> teacher_raw,
                                     const AdditiveModel& distilled,
                                     const AdditiveModel& audit,
                                     std::span<const ShapeAdjustment> adjustments,
                                     const Matrix& x);

// The same adjustment as a reusable score. Models are copied in.
RawFunction AdjustedScore(RawFunction teacher, AdditiveModel distilled, AdditiveModel audit,
                          std::vector<ShapeAdjustment> adjustments);

// Per-group candidate thresholds, each sorted ascending.
struct ThresholdGrid {
  std::array<std::vector<double>, 2> thresholds;

  size_t size() const { return thresholds[0].size() * thresholds[1].size(); }
};

// `resolution` thresholds per group giving treat rates k / (resolution - 1)
// of that group, k = resolution-1 .. 0. The zero-rate threshold lies above
// the group's largest score.
ThresholdGrid QuantileGrid(std::span<const double> scores, const ExperimentDataset& ds,
                           size_t resolution = 41);

struct ManifoldPoint {
  std::array<double, 2> thresholds{};
  std::array<double, 2> treat_rate{};
  double tf = 100.0;
  std::optional<double> of;
  std::optional<double> nwo;  // against the never-treat world
  double econ_mean = 0.0;
  double econ_se = 0.0;
};

struct PolicyManifold {
  std::string score_source;
  size_t resolution = 0;
  // Row-major over (group 0 threshold, group 1 threshold).
  std::vector<ManifoldPoint> points;
};

// Mock-evaluates every grid policy. Points are ordered with the group 0
// threshold varying slowest.
PolicyManifold SweepThresholds(const ExperimentDataset& ds, std::span<const double> scores,
                               const ThresholdGrid& grid, const ValueModel& value,
                               std::string score_source);

nlohmann::json ManifoldToJson(const PolicyManifold& m, size_t offset = 0,
                              size_t limit = SIZE_MAX);
std::string ManifoldToCsv(const PolicyManifold& m);

// Single shared threshold at which the policy treats the same fraction of
// rows as the experiment's treated arm.
double DefaultThreshold(std::span<const double> scores, const ExperimentDataset& ds);

struct RemovalRow {
  double alpha = 0.0;
  double threshold = 0.0;
  FairnessReport report;
};

// Attenuates `targets` by each alpha in turn and evaluates the adjusted
// policy at its default threshold.
std::vector<RemovalRow> ShapeRemovalCurve(const ExperimentDataset& ds,
                                          std::span<const double> teacher_raw,
                                          const AdditiveModel& distilled,
                                          const AdditiveModel& audit,
                                          std::span<const ShapeId> targets,
                                          std::span<const double> alphas,
                                          Replacement replacement, const ValueModel& value);

inline constexpr std::array<double, 6> kRemovalAlphas = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};

nlohmann::json RemovalCurveToJson(std::span<const RemovalRow> rows);
std::string RemovalCurveToCsv(std::span<const RemovalRow> rows);

struct ParetoSet {
  std::vector<std::array<double, 2>> objectives;
  // Indices of nondominated entries, ascending.
  std::vector<size_t> frontier;
};

// Both objectives are maximized.
ParetoSet Pareto(std::vector<std::array<double, 2>> objectives);

struct CollegePolicy {
  std::array<double, 2> thresholds{};
  std::array<double, 2> admit_rate{};
  double overall_admit_rate = 0.0;
  double graduates = 0.0;        // expected count under the policy
  double minority_admits = 0.0;
  double treatment_parity_gap = 0.0;  // majority rate minus minority rate
  std::optional<double> predictive_parity_gap;
  std::optional<double> nwo;
  bool on_frontier = false;
};

struct CollegeAnalysis {
  double budget = 0.0;
  size_t resolution = 0;
  std::optional<double> baseline_of;  // accept-no-one outcome fairness
  std::vector<CollegePolicy> policies;  // budget-feasible grid policies
};

// Per-group test-score thresholds, kept if the admit rate fits the budget.
// Graduation is read from the stored potential-outcome probabilities.
CollegeAnalysis AnalyzeCollege(const ExperimentDataset& ds, double budget,
                               size_t resolution = 41);

nlohmann::json CollegeToJson(const CollegeAnalysis& a);
std::string CollegeToCsv(const CollegeAnalysis& a);

}  // namespace fairlens

#endif  // FAIRLENS_IMPROVE_H_
