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

#include "fairlens/pipeline.h"

#include <algorithm>

#include "fairlens/error.h"
#include "fairlens/io.h"
#include "fairlens/numeric.h"

namespace fairlens {

namespace {

template <typename F>
auto Guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("bad ") + what + ": " + e.what());
  }
}

void RejectUnknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                   const char* what) {
  Require(j.is_object(), ErrorCode::kInvalidArgument, std::string(what) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    const bool ok = std::any_of(known.begin(), known.end(),
                                [&](const char* k) { return key == k; });
    Require(ok, ErrorCode::kInvalidArgument, "unknown " + std::string(what) + " key '" + key + "'");
  }
}

uint64_t SeedFrom(const nlohmann::json& j, uint64_t seed) {
  return j.contains("seed") ? j.at("seed").get<uint64_t>() : seed;
}

ValueModel ValueFrom(const nlohmann::json& request) {
  if (!request.contains("value_model")) return ValueModel::Outcome();
  return Guard("value model", [&] { return ValueModel::FromJson(request.at("value_model")); });
}

}  // namespace

std::string Dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

SyntheticConfig SyntheticConfigFromJson(const nlohmann::json& j, uint64_t seed) {
  RejectUnknown(j, {"kind", "n", "c", "seed"}, "synthetic config");
  return Guard("synthetic config", [&] {
    SyntheticConfig c;
    c.n = j.value("n", c.n);
    c.c = j.value("c", c.c);
    c.seed = SeedFrom(j, seed);
    Require(c.c >= 0.0 && c.c <= 1.0, ErrorCode::kInvalidArgument, "c must lie in [0, 1]");
    Require(c.n > 0, ErrorCode::kInvalidArgument, "n must be positive");
    return c;
  });
}

CollegeConfig CollegeConfigFromJson(const nlohmann::json& j, uint64_t seed) {
  RejectUnknown(j,
                {"kind", "n", "minority_fraction", "prep_gap", "score_noise", "grad_slope",
                 "grad_intercept", "budget", "seed"},
                "college config");
  return Guard("college config", [&] {
    CollegeConfig c;
    c.n = j.value("n", c.n);
    c.minority_fraction = j.value("minority_fraction", c.minority_fraction);
    c.prep_gap = j.value("prep_gap", c.prep_gap);
    c.score_noise = j.value("score_noise", c.score_noise);
    c.grad_slope = j.value("grad_slope", c.grad_slope);
    c.grad_intercept = j.value("grad_intercept", c.grad_intercept);
    c.budget = j.value("budget", c.budget);
    c.seed = SeedFrom(j, seed);
    return c;
  });
}

ExperimentDataset GenerateDataset(const nlohmann::json& spec, uint64_t seed) {
  Require(spec.is_object(), ErrorCode::kInvalidArgument, "dataset spec must be an object");
  const auto kind = Guard("dataset spec",
                          [&] { return spec.value("kind", std::string("synthetic")); });
  if (kind == "synthetic") return GenerateSynthetic(SyntheticConfigFromJson(spec, seed));
  if (kind == "college") return GenerateCollege(CollegeConfigFromJson(spec, seed));
  Fail(ErrorCode::kInvalidArgument, "unknown dataset kind '" + kind + "'");
}

nlohmann::json DatasetSummary(const ExperimentDataset& ds) {
  const auto treated = std::count(ds.t.begin(), ds.t.end(), 1);
  return {{"rows", ds.size()},
          {"features", ds.schema.names()},
          {"group_feature", ds.schema.feature(ds.schema.group_feature()).name},
          {"treated", treated},
          {"mean_outcome", Mean(ds.y)},
          {"potential_outcomes", ds.has_potential_outcomes()},
          {"schema_fingerprint", ds.schema.fingerprint()},
          {"checksum", DatasetChecksum(ds)}};
}

nlohmann::json ModelSpec::ToJson() const {
  return {{"kind", kind},
          {"hyper", hyper},
          {"distill", distill},
          {"top_k", top_k},
          {"draws", draws},
          {"audit_target", std::string(AuditTargetName(audit_target))},
          {"audit_fraction", audit_fraction}};
}

ModelSpec ModelSpec::FromJson(const nlohmann::json& j) {
  RejectUnknown(j, {"kind", "hyper", "distill", "top_k", "draws", "audit_target",
                    "audit_fraction"},
                "model spec");
  return Guard("model spec", [&] {
    ModelSpec s;
    s.kind = j.value("kind", s.kind);
    if (j.contains("hyper")) s.hyper = j.at("hyper");
    s.distill = j.value("distill", s.distill);
    s.top_k = j.value("top_k", s.top_k);
    s.draws = j.value("draws", s.draws);
    if (j.contains("audit_target")) {
      s.audit_target = ParseAuditTarget(j.at("audit_target").get<std::string>());
    }
    s.audit_fraction = j.value("audit_fraction", s.audit_fraction);
    Require(s.audit_fraction > 0.0 && s.audit_fraction < 1.0, ErrorCode::kInvalidArgument,
            "audit_fraction must lie in (0, 1)");
    Require(s.hyper.is_object(), ErrorCode::kInvalidArgument, "hyper must be an object");
    return s;
  });
}

RawFunction FittedModel::Ite() const {
  auto l = learner;
  return [l](const Matrix& x) { return l->Ite(x); };
}

const Distillation& FittedModel::distilled() const {
  Require(distillation.has_value(), ErrorCode::kNotFound,
          "model has no distilled surrogate; fit it with distill enabled");
  return *distillation;
}

FittedModel FitModel(const ExperimentDataset& ds, const ModelSpec& spec, uint64_t seed) {
  FittedModel m;
  m.spec = spec;
  m.seed = seed;
  m.dataset_checksum = DatasetChecksum(ds);

  const double f = spec.audit_fraction;
  const auto parts = Split(ds, {1.0 - f, f, 0.0}, DeriveSeed(seed, 0));
  const auto& train = parts.train;

  const bool auto_pairs = spec.kind == "gam2" && !spec.hyper.contains("pairs") &&
                          !spec.hyper.contains("pairs_control") &&
                          !spec.hyper.contains("pairs_treated");
  if (auto_pairs) {
    const auto mlp_hyper = spec.hyper.value("mlp", nlohmann::json::object());
    auto gam_hyper = spec.hyper;
    gam_hyper.erase("mlp");
    gam_hyper["draws"] = spec.draws;
    auto fit = FitGam2TLearner(train, spec.top_k, mlp_hyper, gam_hyper, DeriveSeed(seed, 1));
    m.learner = std::make_shared<const TLearner>(std::move(fit.learner));
  } else {
    m.learner = std::make_shared<const TLearner>(
        FitTLearner(train, spec.kind, spec.hyper, DeriveSeed(seed, 1)));
  }

  if (spec.distill) DistillInto(m, ds, DeriveSeed(seed, 2));
  return m;
}

void DistillInto(FittedModel& m, const ExperimentDataset& ds, uint64_t seed) {
  Require(ds.schema.fingerprint() == m.learner->schema().fingerprint(),
          ErrorCode::kSchemaMismatch, "dataset schema does not match the model");
  const auto& spec = m.spec;
  // Same split as the fit, so the audit rows were never used for training.
  const auto parts = Split(ds, {1.0 - spec.audit_fraction, spec.audit_fraction, 0.0},
                           DeriveSeed(m.seed, 0));
  DistillOptions opt;
  opt.top_k = spec.top_k;
  opt.ranking.draws = spec.draws;
  opt.audit_target = spec.audit_target;
  if (spec.hyper.contains("distill_gam")) {
    opt.gam = Guard("distill_gam", [&] { return GamOptionsFromJson(spec.hyper.at("distill_gam")); });
  }
  const TreatmentEffectModel teacher(m.learner);
  auto r = Distill(teacher, parts.audit, opt, seed);
  m.spec.distill = true;
  m.distillation = Distillation{std::move(r.student), std::move(r.audit), r.fidelity,
                                RankingToJson(r.ranking, ds.schema)};
}

nlohmann::json DistillationToJson(const Distillation& d) {
  return {{"fidelity", d.fidelity},
          {"student", ExportShapes(d.student)},
          {"audit", ExportShapes(d.audit)},
          {"ranking", d.ranking}};
}

nlohmann::json FittedModelToJson(const FittedModel& m) {
  return {{"format_version", 1},
          {"spec", m.spec.ToJson()},
          {"seed", m.seed},
          {"dataset_checksum", m.dataset_checksum},
          {"tlearner", m.learner->ToJson()},
          {"distillation", m.distillation ? DistillationToJson(*m.distillation)
                                          : nlohmann::json(nullptr)}};
}

FittedModel FittedModelFromJson(const nlohmann::json& j) {
  try {
    Require(j.at("format_version").get<int>() == 1, ErrorCode::kParse,
            "unsupported model file version");
    FittedModel m;
    m.spec = ModelSpec::FromJson(j.at("spec"));
    m.seed = j.at("seed").get<uint64_t>();
    m.dataset_checksum = j.at("dataset_checksum").get<std::string>();
    m.learner = std::make_shared<const TLearner>(TLearner::FromJson(j.at("tlearner")));
    const auto& d = j.at("distillation");
    if (!d.is_null()) {
      m.distillation = Distillation{ImportShapes(d.at("student")), ImportShapes(d.at("audit")),
                                    d.at("fidelity").get<double>(), d.at("ranking")};
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("malformed model file: ") + e.what());
  }
}

nlohmann::json ModelShapes(const FittedModel& m) {
  nlohmann::json arms = nlohmann::json::object();
  for (int t = 0; t < 2; ++t) {
    if (const auto* g = dynamic_cast<const GamPredictor*>(&m.learner->arm(t))) {
      arms[t == 1 ? "treated" : "control"] = ExportShapes(g->model());
    }
  }
  nlohmann::json out = {{"format_version", 1}, {"kind", m.spec.kind}, {"arms", arms}};
  if (m.distillation) {
    DistillResult r;
    r.student = m.distillation->student;
    r.audit = m.distillation->audit;
    r.fidelity = m.distillation->fidelity;
    out["distilled"] = SideBySideShapes(r);
  } else {
    out["distilled"] = nullptr;
  }
  return out;
}

PairRanking RankModel(const FittedModel& m, const ExperimentDataset& ds, size_t draws,
                      size_t top_k, uint64_t seed) {
  Require(ds.schema.fingerprint() == m.learner->schema().fingerprint(),
          ErrorCode::kSchemaMismatch, "dataset schema does not match the model");
  const auto l = m.learner;
  const std::vector<RawFunction> fns = {
      [l](const Matrix& x) { return l->control().PredictRaw(x); },
      [l](const Matrix& x) { return l->treated().PredictRaw(x); }};
  RankingOptions o;
  o.draws = draws;
  o.top_k = top_k;
  return RankPairs(fns, ds.x, ds.schema, o, seed);
}

RawFunction ResolveScore(const FittedModel* model, const nlohmann::json& spec,
                         ScoreSource* source) {
  Require(spec.is_object(), ErrorCode::kInvalidArgument, "score spec must be an object");
  const auto type = Guard("score spec", [&] { return spec.value("type", std::string("ite")); });
  if (type == "constant") {
    const double v = Guard("score spec", [&] { return spec.value("value", 0.0); });
    if (source) *source = ScoreSource::kConstant;
    return [v](const Matrix& x) { return std::vector<double>(x.rows(), v); };
  }
  Require(model != nullptr, ErrorCode::kInvalidArgument,
          "score type '" + type + "' needs a model");
  if (type == "ite") {
    if (source) *source = ScoreSource::kTreatmentEffect;
    return model->Ite();
  }
  if (type == "adjusted") {
    const auto& d = model->distilled();
    const auto adj = AdjustmentsFromJson(
        d.student, spec.contains("adjustments") ? spec.at("adjustments") : nlohmann::json::array());
    if (source) *source = ScoreSource::kAdjustedSurrogate;
    return AdjustedScore(model->Ite(), d.student, d.audit, adj);
  }
  Fail(ErrorCode::kInvalidArgument, "unknown score type '" + type + "'");
}

DecisionPolicy ResolvePolicy(const FittedModel* model, const ExperimentDataset& ds,
                             const nlohmann::json& spec) {
  Require(spec.is_object(), ErrorCode::kInvalidArgument, "policy spec must be an object");
  const size_t gf = ds.schema.group_feature();
  if (spec.contains("preset")) {
    const auto p = Guard("policy", [&] { return spec.at("preset").get<std::string>(); });
    if (p == "treat_all") return DecisionPolicy::TreatAll(gf);
    if (p == "treat_none") return DecisionPolicy::TreatNone(gf);
    Fail(ErrorCode::kInvalidArgument, "unknown policy preset '" + p + "'");
  }
  ScoreSource source = ScoreSource::kTreatmentEffect;
  auto score = ResolveScore(model, spec.value("score", nlohmann::json{{"type", "ite"}}), &source);
  std::array<double, 2> th{};
  if (spec.contains("thresholds")) {
    th = Guard("policy", [&] { return spec.at("thresholds").get<std::array<double, 2>>(); });
  } else if (spec.contains("threshold")) {
    const double t = Guard("policy", [&] { return spec.at("threshold").get<double>(); });
    th = {t, t};
  } else {
    const auto s = score(ds.x);
    const double t = DefaultThreshold(s, ds);
    th = {t, t};
  }
  return DecisionPolicy(source, std::move(score), th, gf);
}

nlohmann::json RunEvaluate(const FittedModel* model, const ExperimentDataset& ds,
                           const nlohmann::json& request) {
  RejectUnknown(request, {"dataset_id", "policy", "benchmark", "value_model", "group_feature"},
                "evaluate request");
  const ExperimentDataset* data = &ds;
  ExperimentDataset regrouped;
  if (request.contains("group_feature")) {
    const auto name = Guard("evaluate request",
                            [&] { return request.at("group_feature").get<std::string>(); });
    const auto idx = ds.schema.index_of(name);
    Require(idx.has_value(), ErrorCode::kNotFound, "unknown group feature '" + name + "'");
    regrouped = ds.with_group_feature(*idx);
    data = &regrouped;
  }
  const auto policy = ResolvePolicy(
      model, *data, request.value("policy", nlohmann::json{{"preset", "treat_all"}}));
  const auto bench = ResolvePolicy(
      model, *data, request.value("benchmark", nlohmann::json{{"preset", "treat_none"}}));
  const auto report = Evaluate(*data, policy, ValueFrom(request), &bench);
  auto out = ReportToJson(report);
  out["policy"] = {{"score_source", std::string(ScoreSourceName(policy.source()))},
                   {"thresholds", policy.thresholds()},
                   {"group_feature", data->schema.feature(data->schema.group_feature()).name}};
  return out;
}

PolicyManifold RunSweep(const FittedModel* model, const ExperimentDataset& ds,
                        const nlohmann::json& request) {
  RejectUnknown(request,
                {"dataset_id", "score", "resolution", "grid", "value_model", "offset", "limit"},
                "sweep request");
  ScoreSource source = ScoreSource::kTreatmentEffect;
  const auto score =
      ResolveScore(model, request.value("score", nlohmann::json{{"type", "ite"}}), &source);
  const auto s = score(ds.x);
  ThresholdGrid grid;
  if (request.contains("grid")) {
    grid.thresholds = Guard("sweep grid", [&] {
      return request.at("grid").get<std::array<std::vector<double>, 2>>();
    });
    for (auto& g : grid.thresholds) std::sort(g.begin(), g.end());
  } else {
    const size_t res = Guard("sweep request", [&] { return request.value("resolution", size_t{41}); });
    grid = QuantileGrid(s, ds, res);
  }
  return SweepThresholds(ds, s, grid, ValueFrom(request), std::string(ScoreSourceName(source)));
}

std::vector<RemovalRow> RunRemovalCurve(const FittedModel& model, const ExperimentDataset& ds,
                                        const nlohmann::json& request) {
  RejectUnknown(request, {"dataset_id", "shapes", "alphas", "replacement", "value_model"},
                "removal request");
  const auto& d = model.distilled();
  std::vector<ShapeId> targets;
  if (request.contains("shapes")) {
    for (const auto& s : request.at("shapes")) {
      targets.push_back(ParseShapeId(d.student, Guard("shapes", [&] { return s.get<std::string>(); })));
    }
  } else {
    targets = ShapesReferencing(d.student, ds.schema.group_feature());
  }
  std::vector<double> alphas(kRemovalAlphas.begin(), kRemovalAlphas.end());
  if (request.contains("alphas")) {
    alphas = Guard("alphas", [&] { return request.at("alphas").get<std::vector<double>>(); });
  }
  const auto repl = ParseReplacement(
      Guard("replacement", [&] { return request.value("replacement", std::string("zero")); }));
  const auto teacher = model.learner->Ite(ds.x);
  return ShapeRemovalCurve(ds, teacher, d.student, d.audit, targets, alphas, repl,
                           ValueFrom(request));
}

CollegeAnalysis RunCollege(const nlohmann::json& request, uint64_t seed) {
  RejectUnknown(request, {"dataset", "resolution"}, "college request");
  auto cfg_json = request.value("dataset", nlohmann::json::object());
  cfg_json.erase("kind");
  const auto cfg = CollegeConfigFromJson(cfg_json, seed);
  const auto ds = GenerateCollege(cfg);
  const size_t res = Guard("college request", [&] { return request.value("resolution", size_t{41}); });
  return AnalyzeCollege(ds, cfg.budget, res);
}

}  // namespace fairlens
