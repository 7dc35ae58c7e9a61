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

#ifndef FAIRLENS_DISTILL_H_
#define FAIRLENS_DISTILL_H_

#include <cstdint>
#include <optional>
#include <span>

#include "fairlens/dataset.h"
#include "fairlens/gam.h"
#include "fairlens/interactions.h"
#include "fairlens/models.h"
#include "fairlens/tlearner.h"
#include "json.hpp"

namespace fairlens {

// What the audit GAM learns directly from the audit data.
enum class AuditTarget {
  kOutcome,         // Y on every row, logit link
  kControlOutcome,  // Y on T=0 rows, logit link
  kTreatedOutcome,  // Y on T=1 rows, logit link
  // Y * (T/p - (1-T)/(1-p)), identity link; its conditional mean is the ITE
  // under randomization, so the audit shape is comparable to an ITE teacher.
  kEffect,
};

std::string_view AuditTargetName(AuditTarget t);
AuditTarget ParseAuditTarget(std::string_view name);

struct DistillOptions {
  size_t top_k = 10;
  RankingOptions ranking;  // top_k here is overridden by `top_k`
  GamOptions gam;
  AuditTarget audit_target = AuditTarget::kOutcome;
};

struct DistillResult {
  AdditiveModel student;  // identity link, fit to teacher raw scores
  AdditiveModel audit;    // fit to the audit data itself, same knots and pairs
  PairRanking ranking;
  double fidelity = 0.0;  // on the audit rows
};

// 1 - MSE(teacher - student) / Var(teacher).
double Fidelity(std::span<const double> teacher_raw, std::span<const double> student_raw);

// Ranks teacher interactions on the audit set, fits a GAM2 on the top-K
// pairs to the teacher's raw scores, and fits the audit GAM alongside.
DistillResult Distill(const Predictor& teacher, const ExperimentDataset& audit,
                      const DistillOptions& options, uint64_t seed);

// Per-shape distilled vs audit values on the shared knots.
nlohmann::json SideBySideShapes(const DistillResult& result);

// MLP T-learner, interaction ranking per arm, then a GAM2 T-learner whose
// arms use their own top-K pairs.
struct Gam2TLearnerFit {
  TLearner learner;
  PairRanking control_ranking;
  PairRanking treated_ranking;
};
Gam2TLearnerFit FitGam2TLearner(const ExperimentDataset& ds, size_t top_k,
                                const nlohmann::json& mlp_hyper,
                                const nlohmann::json& gam_hyper, uint64_t seed);

}  // namespace fairlens

#endif  // FAIRLENS_DISTILL_H_
