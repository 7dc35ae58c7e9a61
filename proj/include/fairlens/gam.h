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

#ifndef FAIRLENS_GAM_H_
#define FAIRLENS_GAM_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairlens/matrix.h"
#include "fairlens/models.h"
#include "json.hpp"

namespace fairlens {

// Unordered feature pair stored with first < second.
struct FeaturePair {
  size_t first = 0;
  size_t second = 0;

  static FeaturePair Of(size_t a, size_t b) {
    return a < b ? FeaturePair{a, b} : FeaturePair{b, a};
  }
  friend auto operator<=>(const FeaturePair&, const FeaturePair&) = default;
};

struct GamOptions {
  double learning_rate = 0.1;
  size_t epochs = 300;
  size_t batch_size = 512;
  // Applied to each shape's mean squared knot value.
  double l2 = 1e-4;
  // Weight on squared changes of slope between adjacent segments.
  double smoothness = 1e-3;
  size_t knots_1d = 32;
  size_t knots_2d = 16;
};

nlohmann::json GamOptionsToJson(const GamOptions& o);
GamOptions GamOptionsFromJson(const nlohmann::json& j);

struct DensityHistogram {
  std::vector<double> edges;   // bins + 1 entries
  std::vector<size_t> counts;  // sums to the training row count

  friend bool operator==(const DensityHistogram&, const DensityHistogram&) = default;
};

// Piecewise-linear function of one feature; constant beyond the end knots.
struct Shape1D {
  size_t feature = 0;
  std::vector<double> knots;
  std::vector<double> values;
  DensityHistogram density;

  double Eval(double v) const;
  friend bool operator==(const Shape1D&, const Shape1D&) = default;
};

// Bilinear interpolation on a knot grid; `values` is row-major with
// knots_first.size() rows.
struct Shape2D {
  FeaturePair pair;
  std::vector<double> knots_first;
  std::vector<double> knots_second;
  std::vector<double> values;

  double Eval(double a, double b) const;
  double& at(size_t i, size_t j) { return values[i * knots_second.size() + j]; }
  double at(size_t i, size_t j) const { return values[i * knots_second.size() + j]; }
  friend bool operator==(const Shape2D&, const Shape2D&) = default;
};

// raw(x) = intercept + sum_i f_i(x_i) + sum_(i,j) f_ij(x_i, x_j);
// prediction = inverse_link(raw).
struct AdditiveModel {
  std::vector<std::string> feature_names;
  Link link = Link::kIdentity;
  double intercept = 0.0;
  // shapes1[i].feature == i for every covariate.
  std::vector<Shape1D> shapes1;
  std::vector<Shape2D> shapes2;

  size_t num_features() const { return shapes1.size(); }
  double Raw(std::span<const double> x) const;
  std::vector<double> Raw(const Matrix& x) const;
  std::vector<double> Predict(const Matrix& x) const;
  std::vector<FeaturePair> pairs() const;
  const Shape2D* FindPair(FeaturePair p) const;

  friend bool operator==(const AdditiveModel&, const AdditiveModel&) = default;
};

// Quantile knots per feature, plus the subset of them each feature uses as
// a 2D grid axis. Grid axes are subsets so 2D marginals fold into 1D
// shapes exactly.
struct KnotLayout {
  std::vector<std::vector<double>> knots;
  std::vector<std::vector<size_t>> grid_subset;
};

KnotLayout ComputeKnots(const Matrix& x, size_t knots_1d, size_t knots_2d);

struct GamFit {
  AdditiveModel model;
  // Pairs dropped because a member feature is constant in the training data.
  std::vector<FeaturePair> dropped_pairs;
  // Penalized objective over the full training set after each epoch.
  std::vector<double> epoch_objective;
  // Unpenalized mean loss of the final (purified, centered) model.
  double training_loss = 0.0;
};

// Jointly fits intercept, every 1D shape and the requested 2D shapes with
// AdaGrad. Log-loss for the logit link, squared loss for identity. After
// training, 2D shapes are purified into the 1D shapes and all shapes are
// centered on the training data, with offsets absorbed by the intercept.
// A given `layout` fixes the knots (used to share knots between models).
GamFit FitGam(const Matrix& x, std::span<const double> targets,
              std::span<const FeaturePair> pairs, Link link,
              const GamOptions& options, uint64_t seed,
              const KnotLayout* layout = nullptr,
              std::vector<std::string> feature_names = {});

// Penalized training objective of `model` on the given rows, exactly as
// minimized by FitGam. When `gradient` is set it receives d objective /
// d parameter in FlattenParameters order.
double GamObjective(const AdditiveModel& model, const Matrix& x,
                    std::span<const double> targets, std::span<const size_t> rows,
                    const GamOptions& options, std::vector<double>* gradient);

// [intercept, shapes1 values..., shapes2 values...]
std::vector<double> FlattenParameters(const AdditiveModel& model);
void SetParameters(AdditiveModel& model, std::span<const double> params);

// Moves 2D-shape conditional means into the 1D shapes and centers every
// shape on `x`. Leaves Raw() unchanged up to rounding.
void PurifyAndCenter(AdditiveModel& model, const Matrix& x);

struct ShapeShare {
  std::string label;
  std::optional<size_t> feature;      // set for 1D shapes
  std::optional<FeaturePair> pair;    // set for 2D shapes
  double share = 0.0;
};

// Var(shape output) / Var(raw) per shape over `x_ref`. Shares need not sum
// to one when features are correlated.
std::vector<ShapeShare> VarianceAttribution(const AdditiveModel& model,
                                            const Matrix& x_ref);

nlohmann::json ExportShapes(const AdditiveModel& model);
AdditiveModel ImportShapes(const nlohmann::json& j);

// Predictor adapter so additive models can serve as T-learner arms.
class GamPredictor final : public Predictor {
 public:
  GamPredictor(FeatureSchema schema, std::vector<FeaturePair> pairs,
               GamOptions options, std::optional<Link> forced_link = std::nullopt);

  std::string_view kind() const override { return pairs_.empty() ? "gam1" : "gam2"; }
  void Fit(const Matrix& x, std::span<const double> targets, uint64_t seed) override;
  std::vector<double> PredictRaw(const Matrix& x) const override;
  Link link() const override { return model_.link; }
  size_t num_features() const override { return schema_.size(); }
  bool fitted() const override { return fitted_; }
  nlohmann::json ToJson() const override;
  std::unique_ptr<Predictor> Clone() const override;

  static std::unique_ptr<GamPredictor> FromJson(const FeatureSchema& schema,
                                                const nlohmann::json& j);

  const AdditiveModel& model() const { return model_; }
  const GamFit& last_fit() const { return last_fit_; }

 private:
  FeatureSchema schema_;
  std::vector<FeaturePair> pairs_;
  GamOptions options_;
  std::optional<Link> forced_link_;
  AdditiveModel model_;
  GamFit last_fit_;
  bool fitted_ = false;
};

}  // namespace fairlens

#endif  // FAIRLENS_GAM_H_
