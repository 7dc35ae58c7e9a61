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

#include "fairlens/gam.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <set>

#include "fairlens/error.h"
#include "fairlens/numeric.h"

namespace fairlens {

namespace {

// Location of a value among knots: value = v[lo] * (1 - frac) + v[hi] * frac.
struct Interp {
  uint32_t lo = 0;
  uint32_t hi = 0;
  double frac = 0.0;
};

Interp Locate(std::span<const double> knots, double v) {
  const size_t b = knots.size();
  if (b <= 1 || v <= knots.front()) return {0, 0, 0.0};
  if (v >= knots.back()) {
    const auto last = static_cast<uint32_t>(b - 1);
    return {last, last, 0.0};
  }
  const auto it = std::upper_bound(knots.begin(), knots.end(), v);
  const auto hi = static_cast<uint32_t>(it - knots.begin());
  const uint32_t lo = hi - 1;
  return {lo, hi, (v - knots[lo]) / (knots[hi] - knots[lo])};
}

double Combine(std::span<const double> values, const Interp& p) {
  return values[p.lo] * (1.0 - p.frac) + values[p.hi] * p.frac;
}

double PointLoss(Link link, double raw, double target) {
  if (link == Link::kLogit) {
    const double sp = raw > 0 ? raw + std::log1p(std::exp(-raw)) : std::log1p(std::exp(raw));
    return sp - target * raw;
  }
  const double r = raw - target;
  return 0.5 * r * r;
}

double PointGradient(Link link, double raw, double target) {
  return link == Link::kLogit ? Sigmoid(raw) - target : raw - target;
}

DensityHistogram BuildHistogram(std::span<const double> column) {
  DensityHistogram h;
  if (column.empty()) return h;
  const auto [mn, mx] = std::minmax_element(column.begin(), column.end());
  std::set<double> distinct;
  for (double v : column) {
    distinct.insert(v);
    if (distinct.size() > 20) break;
  }
  const size_t bins = std::max<size_t>(1, std::min<size_t>(20, distinct.size()));
  const double lo = *mn;
  const double hi = *mx;
  const double width = bins > 1 ? (hi - lo) / static_cast<double>(bins) : 0.0;
  for (size_t k = 0; k <= bins; ++k) {
    h.edges.push_back(k == bins ? hi : lo + width * static_cast<double>(k));
  }
  h.counts.assign(bins, 0);
  for (double v : column) {
    size_t k = width > 0 ? static_cast<size_t>((v - lo) / width) : 0;
    h.counts[std::min(k, bins - 1)]++;
  }
  return h;
}

// Parameter offsets in FlattenParameters order.
struct Layout {
  std::vector<size_t> offset1;
  std::vector<size_t> offset2;
  size_t total = 1;

  explicit Layout(const AdditiveModel& m) {
    for (const auto& s : m.shapes1) {
      offset1.push_back(total);
      total += s.values.size();
    }
    for (const auto& s : m.shapes2) {
      offset2.push_back(total);
      total += s.values.size();
    }
  }
};

// Training objective with per-row knot locations precomputed.
class GamTrainer {
 public:
  GamTrainer(const AdditiveModel& skeleton, const Matrix& x,
             std::span<const double> targets, const GamOptions& options)
      : model_(skeleton), layout_(skeleton), x_(x), targets_(targets),
        options_(options) {
    const size_t n = x.rows();
    const size_t d = skeleton.shapes1.size();
    loc1_.resize(n * d);
    for (size_t r = 0; r < n; ++r) {
      for (size_t i = 0; i < d; ++i) {
        loc1_[r * d + i] = Locate(skeleton.shapes1[i].knots, x(r, i));
      }
    }
    loc2_.resize(skeleton.shapes2.size());
    for (size_t p = 0; p < skeleton.shapes2.size(); ++p) {
      const auto& s = skeleton.shapes2[p];
      loc2_[p].resize(2 * n);
      for (size_t r = 0; r < n; ++r) {
        loc2_[p][2 * r] = Locate(s.knots_first, x(r, s.pair.first));
        loc2_[p][2 * r + 1] = Locate(s.knots_second, x(r, s.pair.second));
      }
    }
  }

  size_t num_parameters() const { return layout_.total; }

  double Raw(std::span<const double> params, size_t r) const {
    const size_t d = model_.shapes1.size();
    double raw = params[0];
    for (size_t i = 0; i < d; ++i) {
      const auto& p = loc1_[r * d + i];
      const double* v = params.data() + layout_.offset1[i];
      raw += v[p.lo] * (1.0 - p.frac) + v[p.hi] * p.frac;
    }
    for (size_t k = 0; k < loc2_.size(); ++k) {
      const auto& a = loc2_[k][2 * r];
      const auto& b = loc2_[k][2 * r + 1];
      const size_t cols = model_.shapes2[k].knots_second.size();
      const double* v = params.data() + layout_.offset2[k];
      raw += (1.0 - a.frac) * ((1.0 - b.frac) * v[a.lo * cols + b.lo] + b.frac * v[a.lo * cols + b.hi]) +
             a.frac * ((1.0 - b.frac) * v[a.hi * cols + b.lo] + b.frac * v[a.hi * cols + b.hi]);
    }
    return raw;
  }

  double Objective(std::span<const double> params, std::span<const size_t> rows,
                   std::vector<double>* grad) const {
    const size_t d = model_.shapes1.size();
    if (grad) grad->assign(layout_.total, 0.0);
    double data = 0.0;
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (size_t r : rows) {
      const double raw = Raw(params, r);
      data += PointLoss(model_.link, raw, targets_[r]);
      if (!grad) continue;
      const double g = PointGradient(model_.link, raw, targets_[r]) * inv;
      auto& G = *grad;
      G[0] += g;
      for (size_t i = 0; i < d; ++i) {
        const auto& p = loc1_[r * d + i];
        const size_t o = layout_.offset1[i];
        G[o + p.lo] += g * (1.0 - p.frac);
        G[o + p.hi] += g * p.frac;
      }
      for (size_t k = 0; k < loc2_.size(); ++k) {
        const auto& a = loc2_[k][2 * r];
        const auto& b = loc2_[k][2 * r + 1];
        const size_t cols = model_.shapes2[k].knots_second.size();
        const size_t o = layout_.offset2[k];
        G[o + a.lo * cols + b.lo] += g * (1.0 - a.frac) * (1.0 - b.frac);
        G[o + a.lo * cols + b.hi] += g * (1.0 - a.frac) * b.frac;
        G[o + a.hi * cols + b.lo] += g * a.frac * (1.0 - b.frac);
        G[o + a.hi * cols + b.hi] += g * a.frac * b.frac;
      }
    }
    return data * inv + Penalty(params, grad);
  }

 private:
  double Penalty(std::span<const double> params, std::vector<double>* grad) const {
    double pen = 0.0;
    const double l2 = options_.l2;
    const double sm = options_.smoothness;
    // Ridge on the mean squared knot value of each shape, so the pull per
    // knot does not grow with the knot count.
    auto ridge = [&](size_t base, size_t count) {
      const double w = l2 / static_cast<double>(count);
      for (size_t k = base; k < base + count; ++k) {
        pen += w * params[k] * params[k];
        if (grad) (*grad)[k] += 2.0 * w * params[k];
      }
    };
    if (l2 > 0) {
      for (size_t i = 0; i < model_.shapes1.size(); ++i) {
        ridge(layout_.offset1[i], model_.shapes1[i].values.size());
      }
      for (size_t k = 0; k < model_.shapes2.size(); ++k) {
        ridge(layout_.offset2[k], model_.shapes2[k].values.size());
      }
    }
    // Squared difference of adjacent segment slopes, scaled by the mean knot
    // spacing so the weight does not depend on feature units.
    auto smooth = [&](size_t base, std::span<const double> knots, size_t stride) {
      const size_t count = knots.size();
      if (count < 3) return;
      const double h = (knots.back() - knots.front()) / static_cast<double>(count - 1);
      for (size_t k = 1; k + 1 < count; ++k) {
        const size_t a = base + (k - 1) * stride;
        const size_t b = base + k * stride;
        const size_t c = base + (k + 1) * stride;
        const double ca = h / (knots[k] - knots[k - 1]);
        const double cc = h / (knots[k + 1] - knots[k]);
        const double diff = ca * params[a] - (ca + cc) * params[b] + cc * params[c];
        pen += sm * diff * diff;
        if (grad) {
          (*grad)[a] += 2.0 * sm * diff * ca;
          (*grad)[b] -= 2.0 * sm * diff * (ca + cc);
          (*grad)[c] += 2.0 * sm * diff * cc;
        }
      }
    };
    if (sm > 0) {
      for (size_t i = 0; i < model_.shapes1.size(); ++i) {
        smooth(layout_.offset1[i], model_.shapes1[i].knots, 1);
      }
      for (size_t k = 0; k < model_.shapes2.size(); ++k) {
        const auto& s = model_.shapes2[k];
        const size_t rows = s.knots_first.size();
        const size_t cols = s.knots_second.size();
        const size_t o = layout_.offset2[k];
        for (size_t i = 0; i < rows; ++i) smooth(o + i * cols, s.knots_second, 1);
        for (size_t j = 0; j < cols; ++j) smooth(o + j, s.knots_first, cols);
      }
    }
    return pen;
  }

  const AdditiveModel& model_;
  Layout layout_;
  const Matrix& x_;
  std::span<const double> targets_;
  GamOptions options_;
  std::vector<Interp> loc1_;
  std::vector<std::vector<Interp>> loc2_;
};

std::vector<double> SubsetKnots(const std::vector<double>& knots,
                                const std::vector<size_t>& subset) {
  std::vector<double> out;
  out.reserve(subset.size());
  for (size_t k : subset) out.push_back(knots[k]);
  return out;
}

}  // namespace

nlohmann::json GamOptionsToJson(const GamOptions& o) {
  return {{"learning_rate", o.learning_rate}, {"epochs", o.epochs},
          {"batch_size", o.batch_size},       {"l2", o.l2},
          {"smoothness", o.smoothness},       {"knots_1d", o.knots_1d},
          {"knots_2d", o.knots_2d}};
}

GamOptions GamOptionsFromJson(const nlohmann::json& j) {
  GamOptions o;
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.epochs = j.value("epochs", o.epochs);
  o.batch_size = j.value("batch_size", o.batch_size);
  o.l2 = j.value("l2", o.l2);
  o.smoothness = j.value("smoothness", o.smoothness);
  o.knots_1d = j.value("knots_1d", o.knots_1d);
  o.knots_2d = j.value("knots_2d", o.knots_2d);
  return o;
}

double Shape1D::Eval(double v) const {
  if (values.empty()) return 0.0;
  return Combine(values, Locate(knots, v));
}

double Shape2D::Eval(double a, double b) const {
  if (values.empty()) return 0.0;
  const auto pa = Locate(knots_first, a);
  const auto pb = Locate(knots_second, b);
  return (1.0 - pa.frac) * ((1.0 - pb.frac) * at(pa.lo, pb.lo) + pb.frac * at(pa.lo, pb.hi)) +
         pa.frac * ((1.0 - pb.frac) * at(pa.hi, pb.lo) + pb.frac * at(pa.hi, pb.hi));
}

double AdditiveModel::Raw(std::span<const double> x) const {
  double raw = intercept;
  for (const auto& s : shapes1) raw += s.Eval(x[s.feature]);
  for (const auto& s : shapes2) raw += s.Eval(x[s.pair.first], x[s.pair.second]);
  return raw;
}

std::vector<double> AdditiveModel::Raw(const Matrix& x) const {
  Require(x.cols() == num_features(), ErrorCode::kSchemaMismatch,
          "input has " + std::to_string(x.cols()) + " columns, additive model expects " +
              std::to_string(num_features()));
  std::vector<double> out(x.rows());
  for (size_t r = 0; r < x.rows(); ++r) out[r] = Raw(x.row(r));
  return out;
}

std::vector<double> AdditiveModel::Predict(const Matrix& x) const {
  auto out = Raw(x);
  for (double& v : out) v = ApplyInverseLink(link, v);
  return out;
}

std::vector<FeaturePair> AdditiveModel::pairs() const {
  std::vector<FeaturePair> out;
  for (const auto& s : shapes2) out.push_back(s.pair);
  return out;
}

const Shape2D* AdditiveModel::FindPair(FeaturePair p) const {
  for (const auto& s : shapes2) {
    if (s.pair == p) return &s;
  }
  return nullptr;
}

KnotLayout ComputeKnots(const Matrix& x, size_t knots_1d, size_t knots_2d) {
  Require(!x.empty(), ErrorCode::kEmptyInput, "cannot place knots on empty data");
  Require(knots_1d >= 2 && knots_2d >= 2, ErrorCode::kInvalidArgument,
          "knot counts must be at least 2");
  KnotLayout layout;
  for (size_t c = 0; c < x.cols(); ++c) {
    auto col = x.column(c);
    std::sort(col.begin(), col.end());
    std::vector<double> distinct = col;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> knots;
    if (distinct.size() <= knots_1d) {
      knots = distinct;
    } else {
      for (size_t k = 0; k < knots_1d; ++k) {
        const double q = static_cast<double>(k) / static_cast<double>(knots_1d - 1);
        const double pos = q * static_cast<double>(col.size() - 1);
        const size_t lo = static_cast<size_t>(std::floor(pos));
        const size_t hi = std::min(lo + 1, col.size() - 1);
        knots.push_back(col[lo] + (pos - static_cast<double>(lo)) * (col[hi] - col[lo]));
      }
      knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    }
    std::vector<size_t> subset;
    const size_t m = knots.size();
    if (m <= knots_2d) {
      subset.resize(m);
      std::iota(subset.begin(), subset.end(), 0);
    } else {
      for (size_t k = 0; k < knots_2d; ++k) {
        const double pos = static_cast<double>(k) * static_cast<double>(m - 1) /
                           static_cast<double>(knots_2d - 1);
        const auto idx = static_cast<size_t>(std::lround(pos));
        if (subset.empty() || subset.back() != idx) subset.push_back(idx);
      }
    }
    layout.knots.push_back(std::move(knots));
    layout.grid_subset.push_back(std::move(subset));
  }
  return layout;
}

std::vector<double> FlattenParameters(const AdditiveModel& model) {
  std::vector<double> p{model.intercept};
  for (const auto& s : model.shapes1) p.insert(p.end(), s.values.begin(), s.values.end());
  for (const auto& s : model.shapes2) p.insert(p.end(), s.values.begin(), s.values.end());
  return p;
}

void SetParameters(AdditiveModel& model, std::span<const double> params) {
  const Layout layout(model);
  Require(params.size() == layout.total, ErrorCode::kInvalidArgument,
          "parameter vector has the wrong length");
  model.intercept = params[0];
  for (size_t i = 0; i < model.shapes1.size(); ++i) {
    auto& v = model.shapes1[i].values;
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(layout.offset1[i]), v.size(), v.begin());
  }
  for (size_t k = 0; k < model.shapes2.size(); ++k) {
    auto& v = model.shapes2[k].values;
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(layout.offset2[k]), v.size(), v.begin());
  }
}

double GamObjective(const AdditiveModel& model, const Matrix& x,
                    std::span<const double> targets, std::span<const size_t> rows,
                    const GamOptions& options, std::vector<double>* gradient) {
  Require(!rows.empty(), ErrorCode::kEmptyInput, "objective over no rows");
  GamTrainer trainer(model, x, targets, options);
  const auto params = FlattenParameters(model);
  return trainer.Objective(params, rows, gradient);
}

void PurifyAndCenter(AdditiveModel& model, const Matrix& x) {
  Require(!x.empty(), ErrorCode::kEmptyInput, "cannot center on empty data");
  const double n = static_cast<double>(x.rows());

  for (auto& s : model.shapes2) {
    const size_t rows = s.knots_first.size();
    const size_t cols = s.knots_second.size();
    // Joint soft-bin mass of the training rows on the grid.
    std::vector<double> w(rows * cols, 0.0);
    for (size_t r = 0; r < x.rows(); ++r) {
      const auto a = Locate(s.knots_first, x(r, s.pair.first));
      const auto b = Locate(s.knots_second, x(r, s.pair.second));
      w[a.lo * cols + b.lo] += (1.0 - a.frac) * (1.0 - b.frac) / n;
      w[a.lo * cols + b.hi] += (1.0 - a.frac) * b.frac / n;
      w[a.hi * cols + b.lo] += a.frac * (1.0 - b.frac) / n;
      w[a.hi * cols + b.hi] += a.frac * b.frac / n;
    }
    std::vector<double> row_fix(rows, 0.0), col_fix(cols, 0.0);
    for (int iter = 0; iter < 5000; ++iter) {
      double moved = 0.0;
      for (size_t i = 0; i < rows; ++i) {
        double mass = 0.0, sum = 0.0;
        for (size_t j = 0; j < cols; ++j) {
          mass += w[i * cols + j];
          sum += w[i * cols + j] * s.at(i, j);
        }
        if (mass <= 1e-300) continue;
        const double m = sum / mass;
        for (size_t j = 0; j < cols; ++j) s.at(i, j) -= m;
        row_fix[i] += m;
        moved = std::max(moved, std::abs(m));
      }
      for (size_t j = 0; j < cols; ++j) {
        double mass = 0.0, sum = 0.0;
        for (size_t i = 0; i < rows; ++i) {
          mass += w[i * cols + j];
          sum += w[i * cols + j] * s.at(i, j);
        }
        if (mass <= 1e-300) continue;
        const double m = sum / mass;
        for (size_t i = 0; i < rows; ++i) s.at(i, j) -= m;
        col_fix[j] += m;
        moved = std::max(moved, std::abs(m));
      }
      if (moved < 1e-15) break;
    }
    // The removed marginals are piecewise linear on the grid axes, whose
    // knots are a subset of the 1D knots, so they fold in exactly.
    auto fold = [](Shape1D& target, std::span<const double> axis, std::span<const double> fix) {
      for (size_t k = 0; k < target.knots.size(); ++k) {
        target.values[k] += Combine(fix, Locate(axis, target.knots[k]));
      }
    };
    fold(model.shapes1[s.pair.first], s.knots_first, row_fix);
    fold(model.shapes1[s.pair.second], s.knots_second, col_fix);
  }

  for (auto& s : model.shapes2) {
    double mean = 0.0;
    for (size_t r = 0; r < x.rows(); ++r) mean += s.Eval(x(r, s.pair.first), x(r, s.pair.second));
    mean /= n;
    for (double& v : s.values) v -= mean;
    model.intercept += mean;
  }
  for (auto& s : model.shapes1) {
    double mean = 0.0;
    for (size_t r = 0; r < x.rows(); ++r) mean += s.Eval(x(r, s.feature));
    mean /= n;
    for (double& v : s.values) v -= mean;
    model.intercept += mean;
  }
}

GamFit FitGam(const Matrix& x, std::span<const double> targets,
              std::span<const FeaturePair> pairs, Link link,
              const GamOptions& options, uint64_t seed, const KnotLayout* layout,
              std::vector<std::string> feature_names) {
  Require(!x.empty(), ErrorCode::kEmptyInput, "cannot fit an additive model on no rows");
  Require(x.rows() == targets.size(), ErrorCode::kSchemaMismatch,
          "row count of X and targets differ");
  Require(options.batch_size > 0 && options.learning_rate > 0.0,
          ErrorCode::kInvalidArgument, "invalid additive-model options");
  const size_t d = x.cols();

  KnotLayout computed;
  if (!layout) {
    computed = ComputeKnots(x, options.knots_1d, options.knots_2d);
    layout = &computed;
  }
  Require(layout->knots.size() == d, ErrorCode::kSchemaMismatch,
          "knot layout does not match the feature count");

  GamFit fit;
  AdditiveModel& model = fit.model;
  model.link = link;
  if (feature_names.empty()) {
    for (size_t i = 0; i < d; ++i) feature_names.push_back("x" + std::to_string(i + 1));
  }
  Require(feature_names.size() == d, ErrorCode::kSchemaMismatch,
          "feature name count does not match X");
  model.feature_names = std::move(feature_names);

  for (size_t i = 0; i < d; ++i) {
    Shape1D s;
    s.feature = i;
    s.knots = layout->knots[i];
    s.values.assign(s.knots.size(), 0.0);
    s.density = BuildHistogram(x.column(i));
    model.shapes1.push_back(std::move(s));
  }

  std::set<FeaturePair> seen;
  for (const auto& p : pairs) {
    Require(p.first < d && p.second < d && p.first != p.second,
            ErrorCode::kInvalidArgument,
            "pair (" + std::to_string(p.first) + "," + std::to_string(p.second) +
                ") does not reference two distinct features");
    const auto q = FeaturePair::Of(p.first, p.second);
    if (!seen.insert(q).second) continue;
    if (layout->knots[q.first].size() < 2 || layout->knots[q.second].size() < 2) {
      std::clog << "warning: dropping pair (" << model.feature_names[q.first] << ", "
                << model.feature_names[q.second] << "): constant feature\n";
      fit.dropped_pairs.push_back(q);
      continue;
    }
    Shape2D s;
    s.pair = q;
    s.knots_first = SubsetKnots(layout->knots[q.first], layout->grid_subset[q.first]);
    s.knots_second = SubsetKnots(layout->knots[q.second], layout->grid_subset[q.second]);
    s.values.assign(s.knots_first.size() * s.knots_second.size(), 0.0);
    model.shapes2.push_back(std::move(s));
  }

  double ybar = Mean(targets);
  if (link == Link::kLogit) {
    ybar = std::clamp(ybar, 1e-6, 1.0 - 1e-6);
    model.intercept = std::log(ybar / (1.0 - ybar));
  } else {
    model.intercept = ybar;
  }

  GamTrainer trainer(model, x, targets, options);
  std::vector<double> params = FlattenParameters(model);
  std::vector<double> accum(params.size(), 0.0);
  std::vector<double> grad;
  std::vector<size_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  const std::vector<size_t> all = order;
  std::mt19937_64 rng(seed);
  constexpr double kEps = 1e-8;

  for (size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < order.size(); start += options.batch_size) {
      const size_t len = std::min(options.batch_size, order.size() - start);
      trainer.Objective(params, std::span(order).subspan(start, len), &grad);
      for (size_t k = 0; k < params.size(); ++k) {
        accum[k] += grad[k] * grad[k];
        params[k] -= options.learning_rate * grad[k] / (std::sqrt(accum[k]) + kEps);
      }
    }
    fit.epoch_objective.push_back(trainer.Objective(params, all, nullptr));
  }

  SetParameters(model, params);
  PurifyAndCenter(model, x);
  const auto raw = model.Raw(x);
  double loss = 0.0;
  for (size_t r = 0; r < raw.size(); ++r) loss += PointLoss(link, raw[r], targets[r]);
  fit.training_loss = loss / static_cast<double>(raw.size());
  return fit;
}

std::vector<ShapeShare> VarianceAttribution(const AdditiveModel& model,
                                            const Matrix& x_ref) {
  Require(!x_ref.empty(), ErrorCode::kEmptyInput,
          "variance attribution needs a nonempty reference set");
  const auto raw = model.Raw(x_ref);
  const double total = Variance(raw);
  Require(total > 1e-15, ErrorCode::kZeroVariance,
          "raw score has zero variance on the reference set");
  std::vector<ShapeShare> out;
  std::vector<double> values(x_ref.rows());
  for (const auto& s : model.shapes1) {
    for (size_t r = 0; r < x_ref.rows(); ++r) values[r] = s.Eval(x_ref(r, s.feature));
    ShapeShare share;
    share.label = model.feature_names[s.feature];
    share.feature = s.feature;
    share.share = Variance(values) / total;
    out.push_back(share);
  }
  for (const auto& s : model.shapes2) {
    for (size_t r = 0; r < x_ref.rows(); ++r) {
      values[r] = s.Eval(x_ref(r, s.pair.first), x_ref(r, s.pair.second));
    }
    ShapeShare share;
    share.label = model.feature_names[s.pair.first] + "*" + model.feature_names[s.pair.second];
    share.pair = s.pair;
    share.share = Variance(values) / total;
    out.push_back(share);
  }
  return out;
}

nlohmann::json ExportShapes(const AdditiveModel& model) {
  nlohmann::json s1 = nlohmann::json::array();
  for (const auto& s : model.shapes1) {
    s1.push_back({{"feature", s.feature},
                  {"name", model.feature_names.at(s.feature)},
                  {"knots", s.knots},
                  {"values", s.values},
                  {"density", {{"edges", s.density.edges}, {"counts", s.density.counts}}}});
  }
  nlohmann::json s2 = nlohmann::json::array();
  for (const auto& s : model.shapes2) {
    s2.push_back({{"features", {s.pair.first, s.pair.second}},
                  {"names", {model.feature_names.at(s.pair.first),
                             model.feature_names.at(s.pair.second)}},
                  {"knots_first", s.knots_first},
                  {"knots_second", s.knots_second},
                  {"values", s.values}});
  }
  return {{"format_version", 1},
          {"link", std::string(LinkName(model.link))},
          {"intercept", model.intercept},
          {"feature_names", model.feature_names},
          {"shapes1", std::move(s1)},
          {"shapes2", std::move(s2)}};
}

AdditiveModel ImportShapes(const nlohmann::json& j) {
  try {
    Require(j.at("format_version").get<int>() == 1, ErrorCode::kParse,
            "unsupported shape dump version");
    AdditiveModel m;
    m.link = ParseLink(j.at("link").get<std::string>());
    m.intercept = j.at("intercept").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& js : j.at("shapes1")) {
      Shape1D s;
      s.feature = js.at("feature").get<size_t>();
      s.knots = js.at("knots").get<std::vector<double>>();
      s.values = js.at("values").get<std::vector<double>>();
      s.density.edges = js.at("density").at("edges").get<std::vector<double>>();
      s.density.counts = js.at("density").at("counts").get<std::vector<size_t>>();
      Require(s.knots.size() == s.values.size(), ErrorCode::kParse,
              "shape knots and values differ in length");
      m.shapes1.push_back(std::move(s));
    }
    for (const auto& js : j.at("shapes2")) {
      Shape2D s;
      const auto f = js.at("features").get<std::vector<size_t>>();
      Require(f.size() == 2, ErrorCode::kParse, "2D shape needs two features");
      s.pair = FeaturePair{f[0], f[1]};
      s.knots_first = js.at("knots_first").get<std::vector<double>>();
      s.knots_second = js.at("knots_second").get<std::vector<double>>();
      s.values = js.at("values").get<std::vector<double>>();
      Require(s.values.size() == s.knots_first.size() * s.knots_second.size(),
              ErrorCode::kParse, "2D shape grid has the wrong size");
      m.shapes2.push_back(std::move(s));
    }
    for (size_t i = 0; i < m.shapes1.size(); ++i) {
      Require(m.shapes1[i].feature == i, ErrorCode::kParse,
              "1D shapes must be listed in feature order");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("malformed shape dump: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

GamPredictor::GamPredictor(FeatureSchema schema, std::vector<FeaturePair> pairs,
                           GamOptions options, std::optional<Link> forced_link)
    : schema_(std::move(schema)), pairs_(std::move(pairs)), options_(options),
      forced_link_(forced_link) {}

void GamPredictor::Fit(const Matrix& x, std::span<const double> targets, uint64_t seed) {
  const Link link = forced_link_.value_or(InferLink(targets));
  last_fit_ = FitGam(x, targets, pairs_, link, options_, seed, nullptr, schema_.names());
  model_ = last_fit_.model;
  fitted_ = true;
}

std::vector<double> GamPredictor::PredictRaw(const Matrix& x) const {
  CheckInput(x);
  return model_.Raw(x);
}

nlohmann::json GamPredictor::ToJson() const {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : pairs_) pairs.push_back({p.first, p.second});
  nlohmann::json j = {{"format_version", 1},
                      {"kind", std::string(kind())},
                      {"pairs", pairs},
                      {"options", GamOptionsToJson(options_)},
                      {"model", ExportShapes(model_)}};
  if (forced_link_) j["forced_link"] = std::string(LinkName(*forced_link_));
  return j;
}

std::unique_ptr<GamPredictor> GamPredictor::FromJson(const FeatureSchema& schema,
                                                     const nlohmann::json& j) {
  std::vector<FeaturePair> pairs;
  for (const auto& p : j.at("pairs")) {
    pairs.push_back(FeaturePair::Of(p.at(0).get<size_t>(), p.at(1).get<size_t>()));
  }
  std::optional<Link> forced;
  if (j.contains("forced_link")) forced = ParseLink(j.at("forced_link").get<std::string>());
  auto g = std::make_unique<GamPredictor>(schema, std::move(pairs),
                                          GamOptionsFromJson(j.at("options")), forced);
  g->model_ = ImportShapes(j.at("model"));
  g->fitted_ = true;
  return g;
}

std::unique_ptr<Predictor> GamPredictor::Clone() const {
  return std::make_unique<GamPredictor>(*this);
}

}  // namespace fairlens
