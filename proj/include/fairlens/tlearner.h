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

#ifndef FAIRLENS_TLEARNER_H_
#define FAIRLENS_TLEARNER_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fairlens/dataset.h"
#include "fairlens/models.h"
#include "json.hpp"

namespace fairlens {

// Builds an unfitted predictor. Kinds: linear, mlp, gam1, gam2. Hyperparameter
// keys mirror the option structs; gam2 takes "pairs": [[i, j], ...].
std::unique_ptr<Predictor> MakePredictor(const FeatureSchema& schema,
                                         const std::string& kind,
                                         const nlohmann::json& hyper);

std::unique_ptr<Predictor> PredictorFromJson(const FeatureSchema& schema,
                                             const nlohmann::json& j);

// Two outcome models, one per treatment arm. The ITE estimate is the
// difference of their predictions.
class TLearner {
 public:
  TLearner(FeatureSchema schema, std::unique_ptr<Predictor> control,
           std::unique_ptr<Predictor> treated);
  TLearner(const TLearner& other);
  TLearner& operator=(const TLearner& other);
  TLearner(TLearner&&) = default;
  TLearner& operator=(TLearner&&) = default;

  const FeatureSchema& schema() const { return schema_; }
  const Predictor& control() const { return *control_; }
  const Predictor& treated() const { return *treated_; }
  const Predictor& arm(int t) const { return t == 1 ? *treated_ : *control_; }

  // treated.Predict(x) - control.Predict(x), elementwise.
  std::vector<double> Ite(const Matrix& x) const;

  nlohmann::json ToJson() const;
  static TLearner FromJson(const nlohmann::json& j);

 private:
  FeatureSchema schema_;
  std::unique_ptr<Predictor> control_;
  std::unique_ptr<Predictor> treated_;
};

// Fits the control arm on rows with T=0 and the treated arm on T=1.
// gam2 may take per-arm "pairs_control" / "pairs_treated".
TLearner FitTLearner(const ExperimentDataset& ds, const std::string& kind,
                     const nlohmann::json& hyper, uint64_t seed);

// The ITE as a query-only predictor (identity link), so the effect can be
// distilled and audited like any other blackbox.
class TreatmentEffectModel final : public Predictor {
 public:
  explicit TreatmentEffectModel(std::shared_ptr<const TLearner> learner);

  std::string_view kind() const override { return "treatment_effect"; }
  void Fit(const Matrix&, std::span<const double>, uint64_t) override;
  std::vector<double> PredictRaw(const Matrix& x) const override;
  Link link() const override { return Link::kIdentity; }
  size_t num_features() const override { return learner_->schema().size(); }
  bool fitted() const override { return true; }
  nlohmann::json ToJson() const override;
  std::unique_ptr<Predictor> Clone() const override;

 private:
  std::shared_ptr<const TLearner> learner_;
};

}  // namespace fairlens

#endif  // FAIRLENS_TLEARNER_H_
