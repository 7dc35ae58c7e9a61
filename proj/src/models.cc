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

#include "fairlens/models.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fairlens/error.h"
#include "fairlens/numeric.h"

namespace fairlens {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// log(1 + exp(z)) without overflow.
double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double PointLoss(Link link, double raw, double target) {
  if (link == Link::kLogit) return Softplus(raw) - target * raw;
  const double r = raw - target;
  return 0.5 * r * r;
}

// d loss / d raw.
double PointGradient(Link link, double raw, double target) {
  if (link == Link::kLogit) return Sigmoid(raw) - target;
  return raw - target;
}

void CheckTargets(const Matrix& x, std::span<const double> targets) {
  Require(!x.empty(), ErrorCode::kEmptyInput, "cannot fit on an empty dataset");
  Require(x.rows() == targets.size(), ErrorCode::kSchemaMismatch,
          "row count of X and targets differ");
}

}  // namespace

std::string_view LinkName(Link link) {
  return link == Link::kLogit ? "logit" : "identity";
}

Link ParseLink(std::string_view name) {
  if (name == "logit") return Link::kLogit;
  if (name == "identity") return Link::kIdentity;
  Fail(ErrorCode::kParse, "unknown link '" + std::string(name) + "'");
}

double ApplyInverseLink(Link link, double raw) {
  return link == Link::kLogit ? Sigmoid(raw) : raw;
}

Link InferLink(std::span<const double> targets) {
  for (double y : targets) {
    if (y != 0.0 && y != 1.0) return Link::kIdentity;
  }
  return Link::kLogit;
}

std::vector<double> Predictor::Predict(const Matrix& x) const {
  auto out = PredictRaw(x);
  const Link l = link();
  for (double& v : out) v = ApplyInverseLink(l, v);
  return out;
}

void Predictor::CheckInput(const Matrix& x) const {
  Require(fitted(), ErrorCode::kInvalidArgument,
          std::string(kind()) + " model used before it was fitted");
  Require(x.cols() == num_features(), ErrorCode::kSchemaMismatch,
          "input has " + std::to_string(x.cols()) + " columns, model expects " +
              std::to_string(num_features()));
}

FeatureEncoder::FeatureEncoder(const FeatureSchema& schema, const Matrix& train_x) {
  Require(train_x.cols() == schema.size(), ErrorCode::kSchemaMismatch,
          "training matrix does not match schema");
  for (size_t c = 0; c < schema.size(); ++c) {
    const auto& f = schema.feature(c);
    kinds_.push_back(f.kind);
    cardinality_.push_back(f.cardinality);
    double mean = 0.0;
    double scale = 1.0;
    if (f.kind == FeatureKind::kContinuous && !train_x.empty()) {
      const auto col = train_x.column(c);
      mean = Mean(col);
      const double sd = std::sqrt(Variance(col));
      scale = sd > 1e-12 ? sd : 1.0;
    }
    mean_.push_back(mean);
    scale_.push_back(scale);
    width_ += f.kind == FeatureKind::kCategorical ? static_cast<size_t>(f.cardinality) : 1;
  }
}

void FeatureEncoder::Encode(std::span<const double> in, std::span<double> out) const {
  size_t k = 0;
  for (size_t c = 0; c < kinds_.size(); ++c) {
    switch (kinds_[c]) {
      case FeatureKind::kContinuous:
        out[k++] = (in[c] - mean_[c]) / scale_[c];
        break;
      case FeatureKind::kBinary:
        out[k++] = in[c];
        break;
      case FeatureKind::kCategorical: {
        const int level = static_cast<int>(in[c]);
        for (int l = 0; l < cardinality_[c]; ++l) out[k++] = l == level ? 1.0 : 0.0;
        break;
      }
    }
  }
}

Matrix FeatureEncoder::Encode(const Matrix& x) const {
  Matrix out(x.rows(), width_);
  for (size_t r = 0; r < x.rows(); ++r) Encode(x.row(r), out.row(r));
  return out;
}

nlohmann::json FeatureEncoder::ToJson() const {
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : kinds_) kinds.push_back(std::string(FeatureKindName(k)));
  return {{"kinds", kinds},
          {"cardinality", cardinality_},
          {"mean", mean_},
          {"scale", scale_}};
}

FeatureEncoder FeatureEncoder::FromJson(const nlohmann::json& j) {
  FeatureEncoder e;
  for (const auto& k : j.at("kinds")) e.kinds_.push_back(ParseFeatureKind(k.get<std::string>()));
  e.cardinality_ = j.at("cardinality").get<std::vector<int>>();
  e.mean_ = j.at("mean").get<std::vector<double>>();
  e.scale_ = j.at("scale").get<std::vector<double>>();
  for (size_t c = 0; c < e.kinds_.size(); ++c) {
    e.width_ += e.kinds_[c] == FeatureKind::kCategorical
                    ? static_cast<size_t>(e.cardinality_[c])
                    : 1;
  }
  return e;
}

// ---------------------------------------------------------------------------
// LinearModel

LinearModel::LinearModel(FeatureSchema schema, Options options)
    : schema_(std::move(schema)), options_(options) {}

void LinearModel::Fit(const Matrix& x, std::span<const double> targets, uint64_t) {
  CheckTargets(x, targets);
  encoder_ = FeatureEncoder(schema_, x);
  link_ = InferLink(targets);
  const Matrix z = encoder_.Encode(x);
  const size_t n = z.rows();
  const size_t p = z.cols() + 1;

  // Design matrix with a trailing intercept column.
  Eigen::MatrixXd design(n, p);
  for (size_t r = 0; r < n; ++r) {
    for (size_t c = 0; c + 1 < p; ++c) design(r, c) = z(r, c);
    design(r, p - 1) = 1.0;
  }
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(), n);
  Eigen::MatrixXd penalty = Eigen::MatrixXd::Identity(p, p) * options_.l2 * n;
  penalty(p - 1, p - 1) = 0.0;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (link_ == Link::kIdentity) {
    Eigen::MatrixXd gram = design.transpose() * design + penalty;
    beta = gram.ldlt().solve(design.transpose() * y);
  } else {
    for (int step = 0; step < options_.max_newton_steps; ++step) {
      Eigen::VectorXd eta = design * beta;
      Eigen::VectorXd mu(n), w(n);
      for (size_t r = 0; r < n; ++r) {
        mu(r) = Sigmoid(eta(r));
        w(r) = std::max(mu(r) * (1.0 - mu(r)), 1e-10);
      }
      Eigen::VectorXd grad = design.transpose() * (mu - y) + penalty * beta;
      Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design + penalty;
      hess.diagonal().array() += 1e-9;
      Eigen::VectorXd delta = hess.ldlt().solve(grad);
      beta -= delta;
      if (delta.lpNorm<Eigen::Infinity>() < 1e-10) break;
    }
  }
  weights_.assign(beta.data(), beta.data() + p - 1);
  bias_ = beta(p - 1);
  fitted_ = true;
}

std::vector<double> LinearModel::PredictRaw(const Matrix& x) const {
  CheckInput(x);
  std::vector<double> out(x.rows());
  std::vector<double> z(encoder_.output_width());
  for (size_t r = 0; r < x.rows(); ++r) {
    encoder_.Encode(x.row(r), z);
    double s = bias_;
    for (size_t c = 0; c < z.size(); ++c) s += weights_[c] * z[c];
    out[r] = s;
  }
  return out;
}

nlohmann::json LinearModel::ToJson() const {
  return {{"format_version", 1},
          {"kind", "linear"},
          {"link", std::string(LinkName(link_))},
          {"l2", options_.l2},
          {"encoder", encoder_.ToJson()},
          {"weights", weights_},
          {"bias", bias_}};
}

std::unique_ptr<LinearModel> LinearModel::FromJson(const FeatureSchema& schema,
                                                   const nlohmann::json& j) {
  Options opt;
  opt.l2 = j.at("l2").get<double>();
  auto m = std::make_unique<LinearModel>(schema, opt);
  m->link_ = ParseLink(j.at("link").get<std::string>());
  m->encoder_ = FeatureEncoder::FromJson(j.at("encoder"));
  m->weights_ = j.at("weights").get<std::vector<double>>();
  m->bias_ = j.at("bias").get<double>();
  m->fitted_ = true;
  return m;
}

std::unique_ptr<Predictor> LinearModel::Clone() const {
  return std::make_unique<LinearModel>(*this);
}

// ---------------------------------------------------------------------------
// MlpModel

MlpModel::MlpModel(FeatureSchema schema, Options options)
    : schema_(std::move(schema)), options_(options) {
  Require(options_.hidden > 0 && options_.batch_size > 0 && options_.epochs > 0,
          ErrorCode::kInvalidArgument, "MLP sizes must be positive");
  Require(options_.learning_rate > 0.0, ErrorCode::kInvalidArgument,
          "MLP learning rate must be positive");
}

namespace {

// tanh through the vectorized exp; Eigen's double tanh is scalar.
template <typename A>
auto FastTanh(const A& a) {
  return 1.0 - 2.0 / ((2.0 * a).exp() + 1.0);
}

}  // namespace

void MlpModel::Fit(const Matrix& x, std::span<const double> targets, uint64_t seed) {
  CheckTargets(x, targets);
  encoder_ = FeatureEncoder(schema_, x);
  link_ = InferLink(targets);
  const Matrix encoded = encoder_.Encode(x);
  const size_t n = encoded.rows();
  const size_t in = encoded.cols();
  const size_t h = options_.hidden;

  Eigen::Map<const RowMatrix> data(encoded.data().data(), n, in);
  Eigen::Map<const Eigen::VectorXd> y(targets.data(), n);

  std::mt19937_64 rng(seed);
  RowMatrix w1(h, in);
  Eigen::VectorXd b1 = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd w2(h);
  {
    std::uniform_real_distribution<double> u1(-1.0, 1.0);
    const double a1 = std::sqrt(6.0 / static_cast<double>(in + h));
    const double a2 = std::sqrt(6.0 / static_cast<double>(h + 1));
    for (size_t i = 0; i < h; ++i) {
      for (size_t j = 0; j < in; ++j) w1(i, j) = a1 * u1(rng);
    }
    for (size_t i = 0; i < h; ++i) w2(i) = a2 * u1(rng);
  }
  const double ybar = y.mean();
  double b2 = link_ == Link::kLogit
                  ? std::log(std::clamp(ybar, 1e-6, 1.0 - 1e-6) /
                             (1.0 - std::clamp(ybar, 1e-6, 1.0 - 1e-6)))
                  : ybar;

  RowMatrix g_w1 = RowMatrix::Zero(h, in);
  Eigen::VectorXd g_b1 = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd g_w2 = Eigen::VectorXd::Zero(h);
  double g_b2 = 0.0;
  constexpr double kEps = 1e-8;
  const double lr = options_.learning_rate;

  auto full_loss = [&]() {
    RowMatrix hidden = FastTanh(((data * w1.transpose()).rowwise() + b1.transpose()).array());
    Eigen::VectorXd out = (hidden * w2).array() + b2;
    double loss = 0.0;
    for (size_t r = 0; r < n; ++r) loss += PointLoss(link_, out(r), y(r));
    loss /= static_cast<double>(n);
    if (options_.l2 > 0) loss += 0.5 * options_.l2 * (w1.squaredNorm() + w2.squaredNorm());
    return loss;
  };

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  epoch_loss_.clear();
  RowMatrix xb;
  Eigen::VectorXd yb;
  // An epoch that raises the full-data loss is rolled back; the grown
  // AdaGrad accumulators shrink the next attempt's steps.
  double best = full_loss();
  RowMatrix keep_w1 = w1;
  Eigen::VectorXd keep_b1 = b1, keep_w2 = w2;
  double keep_b2 = b2;
  for (size_t epoch = 0; epoch < options_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < n; start += options_.batch_size) {
      const size_t bs = std::min(options_.batch_size, n - start);
      xb.resize(bs, in);
      yb.resize(bs);
      for (size_t k = 0; k < bs; ++k) {
        xb.row(k) = data.row(order[start + k]);
        yb(k) = y(order[start + k]);
      }
      RowMatrix hidden = FastTanh(((xb * w1.transpose()).rowwise() + b1.transpose()).array());
      Eigen::VectorXd out = (hidden * w2).array() + b2;
      Eigen::VectorXd g(bs);
      for (size_t k = 0; k < bs; ++k) g(k) = PointGradient(link_, out(k), yb(k));
      g /= static_cast<double>(bs);

      Eigen::VectorXd d_w2 = hidden.transpose() * g;
      const double d_b2 = g.sum();
      RowMatrix d_hidden = (g * w2.transpose()).array() * (1.0 - hidden.array().square());
      RowMatrix d_w1 = d_hidden.transpose() * xb;
      Eigen::VectorXd d_b1 = d_hidden.colwise().sum().transpose();
      if (options_.l2 > 0) {
        d_w1 += options_.l2 * w1;
        d_w2 += options_.l2 * w2;
      }

      g_w1.array() += d_w1.array().square();
      g_b1.array() += d_b1.array().square();
      g_w2.array() += d_w2.array().square();
      g_b2 += d_b2 * d_b2;
      w1.array() -= lr * d_w1.array() / (g_w1.array().sqrt() + kEps);
      b1.array() -= lr * d_b1.array() / (g_b1.array().sqrt() + kEps);
      w2.array() -= lr * d_w2.array() / (g_w2.array().sqrt() + kEps);
      b2 -= lr * d_b2 / (std::sqrt(g_b2) + kEps);
    }
    const double loss = full_loss();
    if (loss <= best) {
      best = loss;
      keep_w1 = w1;
      keep_b1 = b1;
      keep_w2 = w2;
      keep_b2 = b2;
    } else {
      w1 = keep_w1;
      b1 = keep_b1;
      w2 = keep_w2;
      b2 = keep_b2;
    }
    epoch_loss_.push_back(best);
  }

  w1_.assign(w1.data(), w1.data() + h * in);
  b1_.assign(b1.data(), b1.data() + h);
  w2_.assign(w2.data(), w2.data() + h);
  b2_ = b2;
  fitted_ = true;
}

std::vector<double> MlpModel::PredictRaw(const Matrix& x) const {
  CheckInput(x);
  const Matrix encoded = encoder_.Encode(x);
  const size_t in = encoded.cols();
  const size_t h = b1_.size();
  Eigen::Map<const RowMatrix> data(encoded.data().data(), encoded.rows(), in);
  Eigen::Map<const RowMatrix> w1(w1_.data(), h, in);
  Eigen::Map<const Eigen::VectorXd> b1(b1_.data(), h);
  Eigen::Map<const Eigen::VectorXd> w2(w2_.data(), h);
  std::vector<double> out(x.rows());
  // Row-at-a-time keeps results independent of batch composition.
  Eigen::VectorXd hidden(h);
  for (size_t r = 0; r < x.rows(); ++r) {
    hidden.noalias() = w1 * data.row(r).transpose();
    hidden = FastTanh((hidden + b1).array());
    out[r] = hidden.dot(w2) + b2_;
  }
  return out;
}

nlohmann::json MlpModel::ToJson() const {
  return {{"format_version", 1},
          {"kind", "mlp"},
          {"link", std::string(LinkName(link_))},
          {"hidden", options_.hidden},
          {"epochs", options_.epochs},
          {"batch_size", options_.batch_size},
          {"learning_rate", options_.learning_rate},
          {"l2", options_.l2},
          {"encoder", encoder_.ToJson()},
          {"w1", w1_},
          {"b1", b1_},
          {"w2", w2_},
          {"b2", b2_}};
}

std::unique_ptr<MlpModel> MlpModel::FromJson(const FeatureSchema& schema,
                                             const nlohmann::json& j) {
  Options opt;
  opt.hidden = j.at("hidden").get<size_t>();
  opt.epochs = j.at("epochs").get<size_t>();
  opt.batch_size = j.at("batch_size").get<size_t>();
  opt.learning_rate = j.at("learning_rate").get<double>();
  opt.l2 = j.value("l2", 0.0);
  auto m = std::make_unique<MlpModel>(schema, opt);
  m->link_ = ParseLink(j.at("link").get<std::string>());
  m->encoder_ = FeatureEncoder::FromJson(j.at("encoder"));
  m->w1_ = j.at("w1").get<std::vector<double>>();
  m->b1_ = j.at("b1").get<std::vector<double>>();
  m->w2_ = j.at("w2").get<std::vector<double>>();
  m->b2_ = j.at("b2").get<double>();
  m->fitted_ = true;
  return m;
}

std::unique_ptr<Predictor> MlpModel::Clone() const {
  return std::make_unique<MlpModel>(*this);
}

// ---------------------------------------------------------------------------

double Auc(std::span<const double> scores, std::span<const double> labels) {
  Require(scores.size() == labels.size(), ErrorCode::kInvalidArgument,
          "scores and labels differ in length");
  size_t positives = 0;
  for (double l : labels) {
    Require(l == 0.0 || l == 1.0, ErrorCode::kInvalidArgument,
            "AUC labels must be binary");
    if (l == 1.0) ++positives;
  }
  const size_t negatives = labels.size() - positives;
  Require(positives > 0 && negatives > 0, ErrorCode::kUndefinedMetric,
          "AUC needs both classes present");
  const auto ranks = Ranks(scores);
  double rank_sum = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1.0) rank_sum += ranks[i];
  }
  const double np = static_cast<double>(positives);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(negatives));
}

double Auc(const Predictor& model, const Matrix& x, std::span<const double> labels) {
  return Auc(model.PredictRaw(x), labels);
}

}  // namespace fairlens
