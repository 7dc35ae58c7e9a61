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

#include "fairlens/tlearner.h"

#include "fairlens/error.h"
#include "fairlens/gam.h"
#include "fairlens/io.h"
#include "fairlens/numeric.h"

namespace fairlens {

namespace {

std::vector<FeaturePair> ParsePairs(const nlohmann::json& j) {
  std::vector<FeaturePair> pairs;
  for (const auto& p : j) {
    Require(p.is_array() && p.size() == 2, ErrorCode::kInvalidArgument,
            "pairs must be [i, j] arrays");
    pairs.push_back(FeaturePair::Of(p.at(0).get<size_t>(), p.at(1).get<size_t>()));
  }
  return pairs;
}

std::unique_ptr<Predictor> MakeGam(const FeatureSchema& schema, const std::string& kind,
                                   const nlohmann::json& hyper, const char* pairs_key) {
  std::vector<FeaturePair> pairs;
  if (kind == "gam2") {
    if (hyper.contains(pairs_key)) {
      pairs = ParsePairs(hyper.at(pairs_key));
    } else if (hyper.contains("pairs")) {
      pairs = ParsePairs(hyper.at("pairs"));
    }
  }
  std::optional<Link> link;
  if (hyper.contains("link")) link = ParseLink(hyper.at("link").get<std::string>());
  return std::make_unique<GamPredictor>(schema, std::move(pairs), GamOptionsFromJson(hyper),
                                        link);
}

}  // namespace

std::unique_ptr<Predictor> MakePredictor(const FeatureSchema& schema,
                                         const std::string& kind,
                                         const nlohmann::json& hyper_in) {
  const nlohmann::json hyper = hyper_in.is_null() ? nlohmann::json::object() : hyper_in;
  Require(hyper.is_object(), ErrorCode::kInvalidArgument, "hyperparameters must be an object");
  try {
    if (kind == "linear") {
      LinearModel::Options o;
      o.l2 = hyper.value("l2", o.l2);
      return std::make_unique<LinearModel>(schema, o);
    }
    if (kind == "mlp") {
      MlpModel::Options o;
      o.hidden = hyper.value("hidden", o.hidden);
      o.epochs = hyper.value("epochs", o.epochs);
      o.batch_size = hyper.value("batch_size", o.batch_size);
      o.learning_rate = hyper.value("learning_rate", o.learning_rate);
      o.l2 = hyper.value("l2", o.l2);
      return std::make_unique<MlpModel>(schema, o);
    }
    if (kind == "gam1" || kind == "gam2") return MakeGam(schema, kind, hyper, "pairs");
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("bad hyperparameters: ") + e.what());
  }
  Fail(ErrorCode::kInvalidArgument, "unknown model kind '" + kind + "'");
}

std::unique_ptr<Predictor> PredictorFromJson(const FeatureSchema& schema,
                                             const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "linear") return LinearModel::FromJson(schema, j);
    if (kind == "mlp") return MlpModel::FromJson(schema, j);
    if (kind == "gam1" || kind == "gam2") return GamPredictor::FromJson(schema, j);
    Fail(ErrorCode::kParse, "unknown serialized model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("malformed model file: ") + e.what());
  }
}

TLearner::TLearner(FeatureSchema schema, std::unique_ptr<Predictor> control,
                   std::unique_ptr<Predictor> treated)
    : schema_(std::move(schema)), control_(std::move(control)), treated_(std::move(treated)) {
  Require(control_ && treated_, ErrorCode::kInvalidArgument, "T-learner needs two models");
}

TLearner::TLearner(const TLearner& other)
    : schema_(other.schema_), control_(other.control_->Clone()),
      treated_(other.treated_->Clone()) {}

TLearner& TLearner::operator=(const TLearner& other) {
  if (this != &other) *this = TLearner(other);
  return *this;
}

std::vector<double> TLearner::Ite(const Matrix& x) const {
  Require(x.cols() == schema_.size(), ErrorCode::kSchemaMismatch,
          "input has " + std::to_string(x.cols()) + " columns, T-learner expects " +
              std::to_string(schema_.size()));
  auto treated = treated_->Predict(x);
  const auto control = control_->Predict(x);
  for (size_t r = 0; r < treated.size(); ++r) treated[r] -= control[r];
  return treated;
}

nlohmann::json TLearner::ToJson() const {
  return {{"format_version", 1},
          {"schema", SchemaToJson(schema_)},
          {"schema_fingerprint", schema_.fingerprint()},
          {"control", control_->ToJson()},
          {"treated", treated_->ToJson()}};
}

TLearner TLearner::FromJson(const nlohmann::json& j) {
  try {
    Require(j.at("format_version").get<int>() == 1, ErrorCode::kParse,
            "unsupported T-learner file version");
    auto schema = SchemaFromJson(j.at("schema"));
    Require(schema.fingerprint() == j.at("schema_fingerprint").get<std::string>(),
            ErrorCode::kSchemaMismatch, "T-learner schema fingerprint mismatch");
    auto control = PredictorFromJson(schema, j.at("control"));
    auto treated = PredictorFromJson(schema, j.at("treated"));
    return TLearner(std::move(schema), std::move(control), std::move(treated));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("malformed T-learner file: ") + e.what());
  }
}

TLearner FitTLearner(const ExperimentDataset& ds, const std::string& kind,
                     const nlohmann::json& hyper, uint64_t seed) {
  const auto rows0 = ds.arm_rows(0);
  const auto rows1 = ds.arm_rows(1);
  Require(!rows0.empty() && !rows1.empty(), ErrorCode::kEmptyTreatmentArm,
          "both treatment arms need at least one row");

  auto fit_arm = [&](const std::vector<size_t>& rows, const char* pairs_key,
                     uint64_t arm_seed) {
    std::unique_ptr<Predictor> model;
    if (kind == "gam2") {
      model = MakeGam(ds.schema, kind, hyper, pairs_key);
    } else {
      model = MakePredictor(ds.schema, kind, hyper);
    }
    const Matrix x = ds.x.select_rows(rows);
    std::vector<double> y;
    y.reserve(rows.size());
    for (size_t r : rows) y.push_back(ds.y[r]);
    model->Fit(x, y, arm_seed);
    return model;
  };
  auto control = fit_arm(rows0, "pairs_control", DeriveSeed(seed, 0));
  auto treated = fit_arm(rows1, "pairs_treated", DeriveSeed(seed, 1));
  return TLearner(ds.schema, std::move(control), std::move(treated));
}

TreatmentEffectModel::TreatmentEffectModel(std::shared_ptr<const TLearner> learner)
    : learner_(std::move(learner)) {
  Require(learner_ != nullptr, ErrorCode::kInvalidArgument, "null T-learner");
}

void TreatmentEffectModel::Fit(const Matrix&, std::span<const double>, uint64_t) {
  Fail(ErrorCode::kInvalidArgument,
       "the treatment-effect view is query-only; fit the T-learner instead");
}

std::vector<double> TreatmentEffectModel::PredictRaw(const Matrix& x) const {
  return learner_->Ite(x);
}

nlohmann::json TreatmentEffectModel::ToJson() const {
  return {{"format_version", 1}, {"kind", "treatment_effect"}, {"tlearner", learner_->ToJson()}};
}

std::unique_ptr<Predictor> TreatmentEffectModel::Clone() const {
  return std::make_unique<TreatmentEffectModel>(learner_);
}

}  // namespace fairlens
