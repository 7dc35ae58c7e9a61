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

#include "fairlens/distill.h"

#include "fairlens/error.h"
#include "fairlens/numeric.h"

namespace fairlens {

std::string_view AuditTargetName(AuditTarget t) {
  switch (t) {
    case AuditTarget::kOutcome: return "outcome";
    case AuditTarget::kControlOutcome: return "control_outcome";
    case AuditTarget::kTreatedOutcome: return "treated_outcome";
    case AuditTarget::kEffect: return "effect";
  }
  return "outcome";
}

AuditTarget ParseAuditTarget(std::string_view name) {
  if (name == "outcome") return AuditTarget::kOutcome;
  if (name == "control_outcome") return AuditTarget::kControlOutcome;
  if (name == "treated_outcome") return AuditTarget::kTreatedOutcome;
  if (name == "effect") return AuditTarget::kEffect;
  Fail(ErrorCode::kInvalidArgument, "unknown audit target '" + std::string(name) + "'");
}

double Fidelity(std::span<const double> teacher_raw, std::span<const double> student_raw) {
  Require(teacher_raw.size() == student_raw.size() && !teacher_raw.empty(),
          ErrorCode::kInvalidArgument, "fidelity needs equal-length nonempty inputs");
  const double var = Variance(teacher_raw);
  Require(var > 1e-15, ErrorCode::kZeroVariance,
          "teacher predictions have zero variance; fidelity is undefined");
  double mse = 0.0;
  for (size_t r = 0; r < teacher_raw.size(); ++r) {
    const double e = teacher_raw[r] - student_raw[r];
    mse += e * e;
  }
  mse /= static_cast<double>(teacher_raw.size());
  return 1.0 - mse / var;
}

DistillResult Distill(const Predictor& teacher, const ExperimentDataset& audit,
                      const DistillOptions& options, uint64_t seed) {
  Require(audit.size() > 0, ErrorCode::kEmptyInput, "audit set is empty");
  Require(teacher.num_features() == audit.num_features(), ErrorCode::kSchemaMismatch,
          "teacher expects " + std::to_string(teacher.num_features()) +
              " features, audit data has " + std::to_string(audit.num_features()));

  const auto teacher_raw = teacher.PredictRaw(audit.x);
  Require(Variance(teacher_raw) > 1e-15, ErrorCode::kZeroVariance,
          "teacher predictions have zero variance; fidelity is undefined");

  DistillResult result;
  RankingOptions ranking = options.ranking;
  ranking.top_k = options.top_k;
  const RawFunction f = [&teacher](const Matrix& m) { return teacher.PredictRaw(m); };
  result.ranking = RankPairs(std::span(&f, 1), audit.x, audit.schema, ranking,
                             DeriveSeed(seed, 0));
  const auto pairs = result.ranking.top_pairs();

  const KnotLayout layout =
      ComputeKnots(audit.x, options.gam.knots_1d, options.gam.knots_2d);
  const auto names = audit.schema.names();
  auto student = FitGam(audit.x, teacher_raw, pairs, Link::kIdentity, options.gam,
                        DeriveSeed(seed, 1), &layout, names);
  result.student = std::move(student.model);

  // The audit GAM always centers on the full audit X so that both models
  // end up on identical knots, even when it is trained on one arm.
  Matrix audit_x;
  std::vector<double> audit_y;
  Link audit_link = Link::kLogit;
  switch (options.audit_target) {
    case AuditTarget::kOutcome:
      audit_x = audit.x;
      audit_y = audit.y;
      audit_link = InferLink(audit_y);
      break;
    case AuditTarget::kControlOutcome:
    case AuditTarget::kTreatedOutcome: {
      const int arm = options.audit_target == AuditTarget::kTreatedOutcome ? 1 : 0;
      const auto rows = audit.arm_rows(arm);
      Require(!rows.empty(), ErrorCode::kEmptyTreatmentArm, "audit arm is empty");
      audit_x = audit.x.select_rows(rows);
      for (size_t r : rows) audit_y.push_back(audit.y[r]);
      audit_link = InferLink(audit_y);
      break;
    }
    case AuditTarget::kEffect: {
      audit_x = audit.x;
      const double p = audit.assignment_prob;
      for (size_t r = 0; r < audit.size(); ++r) {
        audit_y.push_back(audit.y[r] * (audit.t[r] == 1 ? 1.0 / p : -1.0 / (1.0 - p)));
      }
      audit_link = Link::kIdentity;
      break;
    }
  }
  auto audit_fit = FitGam(audit_x, audit_y, pairs, audit_link, options.gam,
                          DeriveSeed(seed, 2), &layout, names);
  result.audit = std::move(audit_fit.model);
  if (audit_x.rows() != audit.size()) PurifyAndCenter(result.audit, audit.x);

  result.fidelity = Fidelity(teacher_raw, result.student.Raw(audit.x));
  return result;
}

nlohmann::json SideBySideShapes(const DistillResult& result) {
  const auto& s = result.student;
  const auto& a = result.audit;
  nlohmann::json one = nlohmann::json::array();
  for (size_t i = 0; i < s.shapes1.size(); ++i) {
    one.push_back({{"feature", i},
                   {"name", s.feature_names[i]},
                   {"knots", s.shapes1[i].knots},
                   {"distilled", s.shapes1[i].values},
                   {"audit", a.shapes1[i].values},
                   {"density", {{"edges", s.shapes1[i].density.edges},
                                {"counts", s.shapes1[i].density.counts}}}});
  }
  nlohmann::json two = nlohmann::json::array();
  for (const auto& sh : s.shapes2) {
    const auto* other = a.FindPair(sh.pair);
    two.push_back({{"features", {sh.pair.first, sh.pair.second}},
                   {"names", {s.feature_names[sh.pair.first], s.feature_names[sh.pair.second]}},
                   {"knots_first", sh.knots_first},
                   {"knots_second", sh.knots_second},
                   {"distilled", sh.values},
                   {"audit", other ? nlohmann::json(other->values) : nlohmann::json()}});
  }
  return {{"format_version", 1},
          {"fidelity", result.fidelity},
          {"distilled_intercept", s.intercept},
          {"audit_intercept", a.intercept},
          {"audit_link", std::string(LinkName(a.link))},
          {"shapes1", std::move(one)},
          {"shapes2", std::move(two)}};
}

Gam2TLearnerFit FitGam2TLearner(const ExperimentDataset& ds, size_t top_k,
                                const nlohmann::json& mlp_hyper,
                                const nlohmann::json& gam_hyper, uint64_t seed) {
  const auto mlp = FitTLearner(ds, "mlp", mlp_hyper, DeriveSeed(seed, 10));
  RankingOptions ro;
  ro.top_k = top_k;
  nlohmann::json hyper = gam_hyper.is_null() ? nlohmann::json::object() : gam_hyper;
  Require(hyper.is_object(), ErrorCode::kInvalidArgument, "hyperparameters must be an object");
  ro.draws = hyper.value("draws", ro.draws);
  auto rank_arm = [&](int arm) {
    const Predictor& model = mlp.arm(arm);
    const RawFunction f = [&model](const Matrix& m) { return model.PredictRaw(m); };
    const auto rows = ds.arm_rows(arm);
    return RankPairs(std::span(&f, 1), ds.x.select_rows(rows), ds.schema, ro,
                     DeriveSeed(seed, 20 + static_cast<uint64_t>(arm)));
  };
  Gam2TLearnerFit out{mlp, rank_arm(0), rank_arm(1)};
  hyper.erase("draws");
  auto to_json = [](const std::vector<FeaturePair>& pairs) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& p : pairs) j.push_back({p.first, p.second});
    return j;
  };
  hyper["pairs_control"] = to_json(out.control_ranking.top_pairs());
  hyper["pairs_treated"] = to_json(out.treated_ranking.top_pairs());
  out.learner = FitTLearner(ds, "gam2", hyper, DeriveSeed(seed, 30));
  return out;
}

}  // namespace fairlens
