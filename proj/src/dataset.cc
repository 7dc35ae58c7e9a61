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

#include "fairlens/dataset.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "fairlens/error.h"
#include "fairlens/numeric.h"

namespace fairlens {

std::string_view FeatureKindName(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kBinary: return "binary";
    case FeatureKind::kContinuous: return "continuous";
    case FeatureKind::kCategorical: return "categorical";
  }
  return "continuous";
}

FeatureKind ParseFeatureKind(std::string_view name) {
  if (name == "binary") return FeatureKind::kBinary;
  if (name == "continuous") return FeatureKind::kContinuous;
  if (name == "categorical") return FeatureKind::kCategorical;
  Fail(ErrorCode::kParse, "unknown feature kind '" + std::string(name) + "'");
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features,
                             size_t group_feature)
    : features_(std::move(features)), group_feature_(group_feature) {
  Validate();
}

void FeatureSchema::Validate() const {
  std::set<std::string> seen;
  for (const auto& f : features_) {
    Require(!f.name.empty(), ErrorCode::kInvalidArgument, "empty feature name");
    Require(seen.insert(f.name).second, ErrorCode::kInvalidArgument,
            "duplicate feature name '" + f.name + "'");
    Require(f.name != "T" && f.name != "Y", ErrorCode::kInvalidArgument,
            "feature names T and Y are reserved");
    if (f.kind == FeatureKind::kCategorical) {
      Require(f.cardinality >= 2, ErrorCode::kInvalidArgument,
              "categorical feature '" + f.name + "' needs cardinality >= 2");
    }
  }
  Require(group_feature_ < features_.size(), ErrorCode::kInvalidArgument,
          "group feature index out of range");
  const auto& g = features_[group_feature_];
  Require(g.sensitive, ErrorCode::kInvalidArgument,
          "group feature '" + g.name + "' is not flagged sensitive");
  Require(g.kind == FeatureKind::kBinary, ErrorCode::kInvalidArgument,
          "group feature '" + g.name + "' must be binary");
}

FeatureSchema FeatureSchema::with_group_feature(size_t index) const {
  return FeatureSchema(features_, index);
}

std::optional<size_t> FeatureSchema::index_of(std::string_view name) const {
  for (size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(features_.size());
  for (const auto& f : features_) out.push_back(f.name);
  return out;
}

std::string FeatureSchema::fingerprint() const {
  std::ostringstream os;
  for (const auto& f : features_) {
    os << f.name << ':' << FeatureKindName(f.kind) << ':' << f.cardinality
       << ':' << (f.sensitive ? 1 : 0) << ';';
  }
  return Sha256Hex(os.str()).substr(0, 16);
}

ExperimentDataset ExperimentDataset::subset(std::span<const size_t> rows) const {
  ExperimentDataset out;
  out.schema = schema;
  out.assignment_prob = assignment_prob;
  out.x = x.select_rows(rows);
  out.t.reserve(rows.size());
  out.y.reserve(rows.size());
  for (size_t r : rows) {
    out.t.push_back(t[r]);
    out.y.push_back(y[r]);
  }
  auto pick = [&](const std::optional<std::vector<double>>& src) {
    if (!src) return std::optional<std::vector<double>>{};
    std::vector<double> v;
    v.reserve(rows.size());
    for (size_t r : rows) v.push_back((*src)[r]);
    return std::optional<std::vector<double>>{std::move(v)};
  };
  out.y0 = pick(y0);
  out.y1 = pick(y1);
  out.p0 = pick(p0);
  out.p1 = pick(p1);
  return out;
}

ExperimentDataset ExperimentDataset::with_group_feature(size_t index) const {
  ExperimentDataset out = *this;
  out.schema = schema.with_group_feature(index);
  return out;
}

std::vector<size_t> ExperimentDataset::arm_rows(int arm) const {
  std::vector<size_t> rows;
  for (size_t r = 0; r < t.size(); ++r) {
    if (t[r] == arm) rows.push_back(r);
  }
  return rows;
}

void ExperimentDataset::Validate() const {
  const size_t n = y.size();
  Require(x.rows() == n && t.size() == n, ErrorCode::kSchemaMismatch,
          "X, T and Y have different row counts");
  Require(x.cols() == schema.size(), ErrorCode::kSchemaMismatch,
          "X column count does not match schema");
  Require(assignment_prob > 0.0 && assignment_prob < 1.0,
          ErrorCode::kInvalidArgument, "assignment probability must be in (0,1)");
  for (size_t r = 0; r < n; ++r) {
    Require(t[r] == 0 || t[r] == 1, ErrorCode::kTypeMismatch,
            "treatment must be 0 or 1 (row " + std::to_string(r + 1) + ")");
  }
  if (y0 || y1) {
    Require(y0 && y1 && y0->size() == n && y1->size() == n,
            ErrorCode::kSchemaMismatch, "potential outcomes are incomplete");
    for (size_t r = 0; r < n; ++r) {
      const double expected = t[r] == 1 ? (*y1)[r] : (*y0)[r];
      Require(y[r] == expected, ErrorCode::kInvalidArgument,
              "observed outcome differs from the potential outcome of the "
              "received treatment (row " + std::to_string(r + 1) + ")");
    }
  }
}

namespace {

constexpr size_t kSyntheticFeatures = 12;

FeatureSchema SyntheticSchema() {
  std::vector<FeatureSpec> specs;
  for (size_t i = 0; i < kSyntheticFeatures; ++i) {
    FeatureSpec f;
    f.name = "x" + std::to_string(i + 1);
    f.sensitive = i < 4;
    const bool gaussian = i >= 4 && i <= 8;
    f.kind = gaussian ? FeatureKind::kContinuous : FeatureKind::kBinary;
    specs.push_back(f);
  }
  // x3 is the feature whose links are dialed by c.
  return FeatureSchema(std::move(specs), 2);
}

// Standard-normal variable with correlation `c` to the fair-coin bit `s`.
double LinkedGaussian(double c, int s, double noise) {
  return c * (2.0 * s - 1.0) + std::sqrt(1.0 - c * c) * noise;
}

}  // namespace

double SyntheticTreatedProbability(std::span<const double> x) {
  const double z = x[4] + x[6] + 2.0 * x[8] - x[5] * x[6] + x[9] * x[10];
  return Sigmoid(z);
}

double SyntheticControlProbability(std::span<const double> x) {
  const double z = x[4] + 0.1 * x[7] * x[7] + x[4] * x[6] - x[8] * x[10];
  return Sigmoid(z);
}

ExperimentDataset GenerateSynthetic(const SyntheticConfig& cfg) {
  Require(cfg.n >= 1, ErrorCode::kInvalidArgument, "n must be positive");
  Require(cfg.c >= 0.0 && cfg.c <= 1.0, ErrorCode::kInvalidArgument,
          "correlation c must lie in [0, 1]");
  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  ExperimentDataset ds;
  ds.schema = SyntheticSchema();
  ds.x = Matrix(cfg.n, kSyntheticFeatures);
  ds.t.resize(cfg.n);
  ds.y.resize(cfg.n);
  ds.y0 = std::vector<double>(cfg.n);
  ds.y1 = std::vector<double>(cfg.n);
  ds.p0 = std::vector<double>(cfg.n);
  ds.p1 = std::vector<double>(cfg.n);
  ds.assignment_prob = 0.5;

  for (size_t r = 0; r < cfg.n; ++r) {
    auto x = ds.x.row(r);
    for (size_t k = 0; k < 4; ++k) x[k] = coin(rng) ? 1.0 : 0.0;
    const int s1 = static_cast<int>(x[0]);
    const int s2 = static_cast<int>(x[1]);
    const int s3 = static_cast<int>(x[2]);
    x[4] = LinkedGaussian(cfg.c, s3, normal(rng));
    x[5] = LinkedGaussian(cfg.c, s1, normal(rng));
    x[6] = LinkedGaussian(cfg.c, s3, normal(rng));
    x[7] = LinkedGaussian(cfg.c, s2, normal(rng));
    x[8] = LinkedGaussian(cfg.c, s3, normal(rng));
    for (size_t k = 9; k < 12; ++k) x[k] = coin(rng) ? 1.0 : 0.0;

    const double p1 = SyntheticTreatedProbability(x);
    const double p0 = SyntheticControlProbability(x);
    const int t = coin(rng) ? 1 : 0;
    const double y1 = unif(rng) < p1 ? 1.0 : 0.0;
    const double y0 = unif(rng) < p0 ? 1.0 : 0.0;
    ds.t[r] = t;
    (*ds.p1)[r] = p1;
    (*ds.p0)[r] = p0;
    (*ds.y1)[r] = y1;
    (*ds.y0)[r] = y0;
    ds.y[r] = t == 1 ? y1 : y0;
  }
  return ds;
}

ExperimentDataset GenerateCollege(const CollegeConfig& cfg) {
  Require(cfg.n >= 1, ErrorCode::kInvalidArgument, "n must be positive");
  Require(cfg.minority_fraction > 0.0 && cfg.minority_fraction < 1.0,
          ErrorCode::kInvalidArgument, "minority_fraction must lie in (0, 1)");
  Require(cfg.score_noise > 0.0, ErrorCode::kInvalidArgument,
          "score_noise must be positive");
  Require(cfg.budget > 0.0 && cfg.budget <= 1.0, ErrorCode::kInvalidArgument,
          "budget must lie in (0, 1]");

  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution minority(cfg.minority_fraction);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  ExperimentDataset ds;
  ds.schema = FeatureSchema(
      {FeatureSpec{"minority", FeatureKind::kBinary, 0, true},
       FeatureSpec{"test_score", FeatureKind::kContinuous, 0, false}},
      0);
  ds.x = Matrix(cfg.n, 2);
  ds.t.resize(cfg.n);
  ds.y.resize(cfg.n);
  ds.y0 = std::vector<double>(cfg.n);
  ds.y1 = std::vector<double>(cfg.n);
  ds.p0 = std::vector<double>(cfg.n);
  ds.p1 = std::vector<double>(cfg.n);

  for (size_t r = 0; r < cfg.n; ++r) {
    const double m = minority(rng) ? 1.0 : 0.0;
    const double prep = normal(rng) + cfg.prep_gap * (1.0 - m);
    const double score = prep + cfg.score_noise * normal(rng);
    const double p1 = Sigmoid(cfg.grad_slope * prep + cfg.grad_intercept);
    // Graduating without this admission is possible but rare.
    const double p0 = Sigmoid(cfg.grad_slope * prep + cfg.grad_intercept - 4.0);
    const int t = coin(rng) ? 1 : 0;
    const double y1 = unif(rng) < p1 ? 1.0 : 0.0;
    const double y0 = unif(rng) < p0 ? 1.0 : 0.0;
    ds.x(r, 0) = m;
    ds.x(r, 1) = score;
    ds.t[r] = t;
    (*ds.p1)[r] = p1;
    (*ds.p0)[r] = p0;
    (*ds.y1)[r] = y1;
    (*ds.y0)[r] = y0;
    ds.y[r] = t == 1 ? y1 : y0;
  }
  return ds;
}

namespace {

// Largest-remainder apportionment of `total` over `weights` (sum 1).
std::vector<size_t> Apportion(size_t total, std::span<const double> weights) {
  std::vector<size_t> out(weights.size());
  std::vector<std::pair<double, size_t>> remainders;
  size_t assigned = 0;
  for (size_t k = 0; k < weights.size(); ++k) {
    const double q = weights[k] * static_cast<double>(total);
    out[k] = static_cast<size_t>(std::floor(q + 1e-9));
    assigned += out[k];
    remainders.emplace_back(q - static_cast<double>(out[k]), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t i = 0; assigned < total; ++i, ++assigned) {
    ++out[remainders[i % remainders.size()].second];
  }
  return out;
}

}  // namespace

DatasetSplit Split(const ExperimentDataset& ds, std::array<double, 3> fractions,
                   uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    Require(f >= 0.0 && std::isfinite(f), ErrorCode::kInvalidArgument,
            "split fractions must be nonnegative");
    sum += f;
  }
  Require(std::abs(sum - 1.0) < 1e-9, ErrorCode::kInvalidArgument,
          "split fractions must sum to 1");
  Require(fractions[0] > 0.0, ErrorCode::kInvalidArgument,
          "the training fraction must be positive");

  const size_t n = ds.size();
  const auto totals = Apportion(n, fractions);

  std::mt19937_64 rng(seed);
  std::array<std::vector<size_t>, 2> strata = {ds.arm_rows(0), ds.arm_rows(1)};
  for (auto& s : strata) std::shuffle(s.begin(), s.end(), rng);

  // Per-stratum counts whose column sums hit `totals` exactly.
  std::array<std::array<size_t, 3>, 2> counts{};
  std::array<size_t, 2> left{};
  std::array<size_t, 3> need = {totals[0], totals[1], totals[2]};
  std::vector<std::tuple<double, size_t, size_t>> fracs;
  for (size_t s = 0; s < 2; ++s) {
    left[s] = strata[s].size();
    for (size_t k = 0; k < 3; ++k) {
      const double q = fractions[k] * static_cast<double>(strata[s].size());
      size_t c = static_cast<size_t>(std::floor(q + 1e-9));
      c = std::min({c, need[k], left[s]});
      counts[s][k] = c;
      need[k] -= c;
      left[s] -= c;
      fracs.emplace_back(q - static_cast<double>(c), s, k);
    }
  }
  std::stable_sort(fracs.begin(), fracs.end(), [](const auto& a, const auto& b) {
    return std::get<0>(a) > std::get<0>(b);
  });
  for (const auto& [frac, s, k] : fracs) {
    if (left[s] > 0 && need[k] > 0 && frac > 0.0) {
      ++counts[s][k];
      --left[s];
      --need[k];
    }
  }
  for (size_t s = 0; s < 2; ++s) {
    for (size_t k = 0; k < 3 && left[s] > 0; ++k) {
      const size_t take = std::min(left[s], need[k]);
      counts[s][k] += take;
      left[s] -= take;
      need[k] -= take;
    }
  }

  std::array<std::vector<size_t>, 3> parts;
  for (size_t s = 0; s < 2; ++s) {
    size_t pos = 0;
    for (size_t k = 0; k < 3; ++k) {
      for (size_t i = 0; i < counts[s][k]; ++i) parts[k].push_back(strata[s][pos++]);
    }
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return DatasetSplit{ds.subset(parts[0]), ds.subset(parts[1]),
                      ds.subset(parts[2])};
}

}  // namespace fairlens
