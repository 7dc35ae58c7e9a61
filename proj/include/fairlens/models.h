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

#ifndef FAIRLENS_MODELS_H_
#define FAIRLENS_MODELS_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairlens/dataset.h"
#include "fairlens/matrix.h"
#include "json.hpp"

namespace fairlens {

// Link between the additive/raw scale and the prediction scale.
enum class Link { kLogit, kIdentity };

std::string_view LinkName(Link link);
Link ParseLink(std::string_view name);
double ApplyInverseLink(Link link, double raw);

// Logit when every target is 0 or 1, identity otherwise.
Link InferLink(std::span<const double> targets);

// Batch scoring function: one real per row of the input.
using RawFunction = std::function<std::vector<double>(const Matrix&)>;

// A fitted-or-fittable scoring model over the schema's covariates.
//
// PredictRaw returns the pre-link score (a logit for binary outcomes);
// Predict applies the inverse link, so probabilities stay in [0, 1].
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::string_view kind() const = 0;
  virtual void Fit(const Matrix& x, std::span<const double> targets,
                   uint64_t seed) = 0;
  virtual std::vector<double> PredictRaw(const Matrix& x) const = 0;
  virtual Link link() const = 0;
  virtual size_t num_features() const = 0;
  virtual bool fitted() const = 0;
  virtual nlohmann::json ToJson() const = 0;
  virtual std::unique_ptr<Predictor> Clone() const = 0;

  std::vector<double> Predict(const Matrix& x) const;

 protected:
  void CheckInput(const Matrix& x) const;
};

// Maps schema covariates to model inputs: continuous columns standardized
// with training statistics, categorical columns one-hot, binary unchanged.
class FeatureEncoder {
 public:
  FeatureEncoder() = default;
  FeatureEncoder(const FeatureSchema& schema, const Matrix& train_x);

  size_t input_width() const { return kinds_.size(); }
  size_t output_width() const { return width_; }
  void Encode(std::span<const double> in, std::span<double> out) const;
  Matrix Encode(const Matrix& x) const;

  nlohmann::json ToJson() const;
  static FeatureEncoder FromJson(const nlohmann::json& j);

 private:
  std::vector<FeatureKind> kinds_;
  std::vector<int> cardinality_;
  std::vector<double> mean_;
  std::vector<double> scale_;
  size_t width_ = 0;
};

// L2-regularized linear model; logistic (Newton) for binary targets,
// ridge regression otherwise.
class LinearModel final : public Predictor {
 public:
  struct Options {
    double l2 = 1e-3;
    int max_newton_steps = 50;
  };

  LinearModel(FeatureSchema schema, Options options);
  explicit LinearModel(FeatureSchema schema) : LinearModel(std::move(schema), Options{}) {}

  std::string_view kind() const override { return "linear"; }
  void Fit(const Matrix& x, std::span<const double> targets, uint64_t seed) override;
  std::vector<double> PredictRaw(const Matrix& x) const override;
  Link link() const override { return link_; }
  size_t num_features() const override { return schema_.size(); }
  bool fitted() const override { return fitted_; }
  nlohmann::json ToJson() const override;
  std::unique_ptr<Predictor> Clone() const override;

  static std::unique_ptr<LinearModel> FromJson(const FeatureSchema& schema,
                                               const nlohmann::json& j);

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  FeatureSchema schema_;
  Options options_;
  FeatureEncoder encoder_;
  Link link_ = Link::kLogit;
  std::vector<double> weights_;
  double bias_ = 0.0;
  bool fitted_ = false;
};

// One hidden tanh layer, linear output on the raw scale, trained with
// minibatch AdaGrad.
class MlpModel final : public Predictor {
 public:
  struct Options {
    size_t hidden = 64;
    size_t epochs = 200;
    size_t batch_size = 256;
    double learning_rate = 0.05;
    double l2 = 0.0;
  };

  MlpModel(FeatureSchema schema, Options options);
  explicit MlpModel(FeatureSchema schema) : MlpModel(std::move(schema), Options{}) {}

  std::string_view kind() const override { return "mlp"; }
  void Fit(const Matrix& x, std::span<const double> targets, uint64_t seed) override;
  std::vector<double> PredictRaw(const Matrix& x) const override;
  Link link() const override { return link_; }
  size_t num_features() const override { return schema_.size(); }
  bool fitted() const override { return fitted_; }
  nlohmann::json ToJson() const override;
  std::unique_ptr<Predictor> Clone() const override;

  static std::unique_ptr<MlpModel> FromJson(const FeatureSchema& schema,
                                            const nlohmann::json& j);

  // Full-training-set loss measured after each epoch of the last Fit.
  const std::vector<double>& epoch_loss() const { return epoch_loss_; }

 private:
  FeatureSchema schema_;
  Options options_;
  FeatureEncoder encoder_;
  Link link_ = Link::kLogit;
  // w1: hidden x inputs (row-major), w2: hidden.
  std::vector<double> w1_, b1_, w2_;
  double b2_ = 0.0;
  std::vector<double> epoch_loss_;
  bool fitted_ = false;
};

// Rank-based area under the ROC curve; tied scores count one half.
double Auc(std::span<const double> scores, std::span<const double> labels);
double Auc(const Predictor& model, const Matrix& x, std::span<const double> labels);

}  // namespace fairlens

#endif  // FAIRLENS_MODELS_H_
