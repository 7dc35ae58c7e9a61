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

#ifndef FAIRLENS_PIPELINE_H_
#define FAIRLENS_PIPELINE_H_

// Request-level operations shared by the command line tool and the HTTP
// service. Both front ends pass the same JSON and write the result of
// Dump, so their outputs agree byte for byte.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fairlens/dataset.h"
#include "fairlens/distill.h"
#include "fairlens/fairness.h"
#include "fairlens/improve.h"
#include "fairlens/interactions.h"
#include "fairlens/tlearner.h"
#include "json.hpp"

namespace fairlens {

// Two-space indented JSON with a trailing newline.
std::string Dump(const nlohmann::json& j);

SyntheticConfig SyntheticConfigFromJson(const nlohmann::json& j, uint64_t seed);
CollegeConfig CollegeConfigFromJson(const nlohmann::json& j, uint64_t seed);

// {"kind": "synthetic" | "college", ...generator keys}. `seed` is used
// unless the spec carries its own.
ExperimentDataset GenerateDataset(const nlohmann::json& spec, uint64_t seed);

nlohmann::json DatasetSummary(const ExperimentDataset& ds);

struct ModelSpec {
  std::string kind = "mlp";
  nlohmann::json hyper = nlohmann::json::object();
  bool distill = true;
  size_t top_k = 10;
  size_t draws = 50;
  AuditTarget audit_target = AuditTarget::kEffect;
  double audit_fraction = 0.2;

  nlohmann::json ToJson() const;
  static ModelSpec FromJson(const nlohmann::json& j);
};

// The treatment-effect surrogate and the audit GAM fit beside it.
struct Distillation {
  AdditiveModel student;
  AdditiveModel audit;
  double fidelity = 0.0;
  nlohmann::json ranking;
};

struct FittedModel {
  ModelSpec spec;
  uint64_t seed = 0;
  std::string dataset_checksum;
  std::shared_ptr<const TLearner> learner;
  std::optional<Distillation> distillation;

  RawFunction Ite() const;
  const Distillation& distilled() const;
};

// Fits the T-learner on the non-audit rows; when requested, distills its
// ITE into a GAM on the audit rows. A gam2 without explicit pairs takes
// each arm's top pairs from an MLP T-learner.
FittedModel FitModel(const ExperimentDataset& ds, const ModelSpec& spec, uint64_t seed);

// (Re)distills the model's ITE on its audit rows of `ds`, using the
// distillation settings in m.spec.
void DistillInto(FittedModel& m, const ExperimentDataset& ds, uint64_t seed);

nlohmann::json FittedModelToJson(const FittedModel& m);
FittedModel FittedModelFromJson(const nlohmann::json& j);

nlohmann::json DistillationToJson(const Distillation& d);

// Shapes of a fitted model: the arms' own shapes when they are GAMs, and
// the side-by-side distilled/audit dump when a distillation exists.
nlohmann::json ModelShapes(const FittedModel& m);

// Pair ranking summed over both arms, scored on `x`.
PairRanking RankModel(const FittedModel& m, const ExperimentDataset& ds, size_t draws,
                      size_t top_k, uint64_t seed);

// Score specs: {"type": "ite"}, {"type": "adjusted", "adjustments": [...]},
// {"type": "constant", "value": v}. `model` may be null for constants.
RawFunction ResolveScore(const FittedModel* model, const nlohmann::json& spec,
                         ScoreSource* source);

// Policy specs: {"preset": "treat_all" | "treat_none"} or
// {"score": ..., "thresholds": [t0, t1]} or {"score": ..., "threshold": t}.
// Omitted thresholds select the default operating threshold.
DecisionPolicy ResolvePolicy(const FittedModel* model, const ExperimentDataset& ds,
                             const nlohmann::json& spec);

// {"policy": ..., "benchmark": ... (default treat_none), "value_model": ...}
nlohmann::json RunEvaluate(const FittedModel* model, const ExperimentDataset& ds,
                           const nlohmann::json& request);

// {"score": ..., "resolution": 41 | "grid": [[...], [...]], "value_model": ...}
PolicyManifold RunSweep(const FittedModel* model, const ExperimentDataset& ds,
                        const nlohmann::json& request);

// {"shapes": ["x3", ...] | omitted for every shape touching the group
// feature, "alphas": [...], "replacement": "zero" | "audit", "value_model"}
std::vector<RemovalRow> RunRemovalCurve(const FittedModel& model, const ExperimentDataset& ds,
                                        const nlohmann::json& request);

// {"dataset": college generator keys, "resolution": 41}
CollegeAnalysis RunCollege(const nlohmann::json& request, uint64_t seed);

}  // namespace fairlens

#endif  // FAIRLENS_PIPELINE_H_
