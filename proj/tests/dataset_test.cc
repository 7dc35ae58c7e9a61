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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "fairlens/dataset.h"
#include "fairlens/error.h"
#include "fairlens/io.h"
#include "fairlens/numeric.h"
#include "test_util.h"

namespace fairlens {
namespace {

std::vector<double> Column(const ExperimentDataset& ds, size_t c) {
  std::vector<double> v(ds.size());
  for (size_t r = 0; r < ds.size(); ++r) v[r] = ds.x(r, c);
  return v;
}

// Two-sample Kolmogorov-Smirnov statistic.
double KsStatistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

FeatureSchema TinySchema() {
  return FeatureSchema({{"s", FeatureKind::kBinary, 0, true},
                        {"age", FeatureKind::kContinuous, 0, false},
                        {"tier", FeatureKind::kCategorical, 3, false}},
                       0);
}

TEST(FeatureSchema, RejectsDuplicateNames) {
  EXPECT_THROW(FeatureSchema({{"a", FeatureKind::kBinary, 0, true},
                              {"a", FeatureKind::kContinuous, 0, false}},
                             0),
               Error);
}

TEST(FeatureSchema, GroupFeatureMustBeSensitiveBinary) {
  EXPECT_THROW(FeatureSchema({{"a", FeatureKind::kBinary, 0, false}}, 0), Error);
  EXPECT_THROW(FeatureSchema({{"a", FeatureKind::kContinuous, 0, true}}, 0), Error);
  EXPECT_THROW(FeatureSchema({{"a", FeatureKind::kBinary, 0, true}}, 3), Error);
  EXPECT_NO_THROW(FeatureSchema({{"a", FeatureKind::kBinary, 0, true}}, 0));
}

TEST(FeatureSchema, FingerprintTracksLayout) {
  const auto a = TinySchema();
  auto specs = a.features();
  specs[1].name = "age2";
  const FeatureSchema b(specs, 0);
  EXPECT_EQ(a.fingerprint(), TinySchema().fingerprint());
  EXPECT_NE(a.fingerprint(), b.fingerprint());
}

TEST(SyntheticProbabilities, AllZeroRowHasZeroEffect) {
  const std::vector<double> x(12, 0.0);
  EXPECT_DOUBLE_EQ(SyntheticTreatedProbability(x), 0.5);
  EXPECT_DOUBLE_EQ(SyntheticControlProbability(x), 0.5);
}

TEST(SyntheticProbabilities, NinthCovariateOnly) {
  std::vector<double> x(12, 0.0);
  x[8] = 1.0;  // x9
  const double p1 = SyntheticTreatedProbability(x);
  const double p0 = SyntheticControlProbability(x);
  EXPECT_NEAR(p1, 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(p1, 0.8808, 1e-4);
  EXPECT_DOUBLE_EQ(p0, 0.5);
  EXPECT_NEAR(p1 - p0, 0.3808, 1e-4);
}

TEST(SyntheticProbabilities, MatchDirectFormulas) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(12);
    for (auto& v : x) v = N(rng);
    const double p1 = Sigmoid(x[4] + x[6] + 2 * x[8] - x[5] * x[6] + x[9] * x[10]);
    const double p0 = Sigmoid(x[4] + 0.1 * x[7] * x[7] + x[4] * x[6] - x[8] * x[10]);
    EXPECT_NEAR(SyntheticTreatedProbability(x), p1, 1e-15);
    EXPECT_NEAR(SyntheticControlProbability(x), p0, 1e-15);
  }
}

TEST(GenerateSynthetic, ShapeKindsAndFlags) {
  const auto ds = GenerateSynthetic({1000, 0.5, 1});
  ASSERT_EQ(ds.num_features(), 12u);
  ASSERT_EQ(ds.size(), 1000u);
  for (size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(ds.schema.feature(i).sensitive, i < 4) << i;
    const bool gaussian = i >= 4 && i <= 8;
    EXPECT_EQ(ds.schema.feature(i).kind,
              gaussian ? FeatureKind::kContinuous : FeatureKind::kBinary);
  }
  EXPECT_EQ(ds.schema.feature(ds.schema.group_feature()).name, "x3");
  ds.Validate();
}

TEST(GenerateSynthetic, ConsistencyAndStoredProbabilities) {
  const auto ds = GenerateSynthetic({5000, 0.75, 2});
  ASSERT_TRUE(ds.has_potential_outcomes());
  for (size_t r = 0; r < ds.size(); ++r) {
    EXPECT_EQ(ds.y[r], ds.t[r] == 1 ? (*ds.y1)[r] : (*ds.y0)[r]);
    const auto row = ds.x.row(r);
    EXPECT_DOUBLE_EQ((*ds.p1)[r], SyntheticTreatedProbability(row));
    EXPECT_DOUBLE_EQ((*ds.p0)[r], SyntheticControlProbability(row));
  }
}

TEST(GenerateSynthetic, Randomization) {
  const size_t n = 100000;
  const auto ds = GenerateSynthetic({n, 1.0, 3});
  std::vector<double> t(ds.t.begin(), ds.t.end());
  EXPECT_LT(std::abs(Mean(t) - 0.5), 3 * std::sqrt(0.25 / n));
  // 2x2 chi-square of T against x3; 10.83 is the 0.001 critical value.
  double counts[2][2] = {{0, 0}, {0, 0}};
  for (size_t r = 0; r < n; ++r) counts[ds.t[r]][ds.x(r, 2) >= 0.5 ? 1 : 0] += 1;
  double chi = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double row = counts[a][0] + counts[a][1];
      const double col = counts[0][b] + counts[1][b];
      const double e = row * col / n;
      chi += (counts[a][b] - e) * (counts[a][b] - e) / e;
    }
  }
  EXPECT_LT(chi, 10.83);
}

TEST(GenerateSynthetic, IndependenceAtZeroCorrelation) {
  const auto ds = GenerateSynthetic({100000, 0.0, 4});
  EXPECT_LT(std::abs(Correlation(Column(ds, 2), Column(ds, 4))), 0.05);
}

TEST(GenerateSynthetic, CorrelationDialIsMonotone) {
  const std::vector<std::pair<size_t, size_t>> links = {{0, 5}, {1, 7}, {2, 4}, {2, 6}, {2, 8}};
  std::vector<std::vector<double>> corr(links.size());
  for (double c : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto ds = GenerateSynthetic({100000, c, 5});
    for (size_t k = 0; k < links.size(); ++k) {
      corr[k].push_back(Correlation(Column(ds, links[k].first), Column(ds, links[k].second)));
    }
  }
  for (const auto& seq : corr) {
    for (size_t i = 1; i < seq.size(); ++i) EXPECT_GE(seq[i], seq[i - 1]);
  }
}

TEST(GenerateSynthetic, FourthCovariateIndependent) {
  for (double c : {0.0, 0.5, 1.0}) {
    const auto ds = GenerateSynthetic({100000, c, 6});
    const auto x4 = Column(ds, 3);
    for (size_t j = 0; j < 12; ++j) {
      if (j == 3) continue;
      EXPECT_LT(std::abs(Correlation(x4, Column(ds, j))), 0.05) << "c=" << c << " j=" << j;
    }
  }
}

TEST(GenerateSynthetic, RejectsBadConfig) {
  EXPECT_THROW(GenerateSynthetic({100, -0.1, 0}), Error);
  EXPECT_THROW(GenerateSynthetic({100, 1.1, 0}), Error);
  EXPECT_THROW(GenerateSynthetic({0, 0.5, 0}), Error);
}

TEST(GenerateSynthetic, SeedDeterminism) {
  EXPECT_EQ(GenerateSynthetic({2000, 0.5, 9}), GenerateSynthetic({2000, 0.5, 9}));
  EXPECT_NE(GenerateSynthetic({2000, 0.5, 9}).y, GenerateSynthetic({2000, 0.5, 10}).y);
}

TEST(GenerateCollege, NoGapMeansIdenticalScoreDistributions) {
  CollegeConfig cfg;
  cfg.n = 100000;
  cfg.prep_gap = 0.0;
  cfg.seed = 11;
  const auto ds = GenerateCollege(cfg);
  std::vector<double> a, b;
  for (size_t r = 0; r < ds.size(); ++r) (ds.x(r, 0) >= 0.5 ? b : a).push_back(ds.x(r, 1));
  const double crit = 1.95 * std::sqrt((a.size() + b.size()) / double(a.size() * b.size()));
  EXPECT_LT(KsStatistic(a, b), crit);
}

TEST(GenerateCollege, GraduationIncreasesWithScore) {
  CollegeConfig cfg;
  cfg.n = 50000;
  cfg.seed = 12;
  const auto ds = GenerateCollege(cfg);
  const auto score = Column(ds, 1);
  const double hi = Quantile(score, 0.9), lo = Quantile(score, 0.1);
  double top = 0, bottom = 0;
  size_t nt = 0, nb = 0;
  for (size_t r = 0; r < ds.size(); ++r) {
    if (score[r] >= hi) top += (*ds.y1)[r], ++nt;
    if (score[r] <= lo) bottom += (*ds.y1)[r], ++nb;
  }
  EXPECT_GT(top / nt, bottom / nb);
}

TEST(GenerateCollege, SchemaAndConsistency) {
  const auto ds = GenerateCollege(CollegeConfig{});
  EXPECT_EQ(ds.schema.names(), (std::vector<std::string>{"minority", "test_score"}));
  EXPECT_TRUE(ds.schema.feature(0).sensitive);
  ds.Validate();
  double minority = 0;
  for (size_t r = 0; r < ds.size(); ++r) minority += ds.x(r, 0);
  EXPECT_NEAR(minority / ds.size(), 0.3, 0.02);
}

TEST(GenerateCollege, RejectsBadConfig) {
  CollegeConfig cfg;
  cfg.minority_fraction = 0.0;
  EXPECT_THROW(GenerateCollege(cfg), Error);
  cfg = CollegeConfig{};
  cfg.score_noise = 0.0;
  EXPECT_THROW(GenerateCollege(cfg), Error);
  cfg = CollegeConfig{};
  cfg.budget = 0.0;
  EXPECT_THROW(GenerateCollege(cfg), Error);
}

TEST(Csv, ParsesWellFormedFile) {
  const auto ds = ParseCsv("s,age,tier,T,Y\n1,30.5,2,1,1\n0,41,0,0,0\n1,22,1,0,1\n", TinySchema());
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.x(0, 1), 30.5);
  EXPECT_EQ(ds.t, (std::vector<int>{1, 0, 0}));
  EXPECT_FALSE(ds.has_potential_outcomes());
}

TEST(Csv, BadTreatmentNamesTheRow) {
  std::string text = "s,age,tier,T,Y\n";
  for (int r = 1; r <= 9; ++r) text += std::string("0,1,0,") + (r == 7 ? "2" : "1") + ",0\n";
  try {
    ParseCsv(text, TinySchema());
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 7u);
    EXPECT_EQ(e.column(), "T");
    EXPECT_EQ(e.code(), ErrorCode::kTypeMismatch);
    EXPECT_NE(std::string(e.what()).find("row 7"), std::string::npos);
  }
}

TEST(Csv, DistinctErrors) {
  auto code_of = [](const std::string& text) {
    try {
      ParseCsv(text, TinySchema());
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInternal;
  };
  EXPECT_EQ(code_of(""), ErrorCode::kEmptyInput);
  EXPECT_EQ(code_of("s,age,tier,T,Y\n"), ErrorCode::kEmptyInput);
  EXPECT_EQ(code_of("s,age,T,Y\n1,2,0,1\n"), ErrorCode::kMissingColumn);
  EXPECT_EQ(code_of("s,age,tier,T,Y\n1,2,0,1\n"), ErrorCode::kMissingColumn);
  EXPECT_EQ(code_of("s,age,tier,T,Y\n1,abc,0,1,1\n"), ErrorCode::kTypeMismatch);
  EXPECT_EQ(code_of("s,age,tier,T,Y\n2,1,0,1,1\n"), ErrorCode::kTypeMismatch);
  EXPECT_EQ(code_of("s,age,tier,T,Y\n1,1,3,1,1\n"), ErrorCode::kTypeMismatch);
}

TEST(Csv, RoundTrip) {
  const auto text = std::string("s,age,tier,T,Y\n1,30.5,2,1,1\n0,41,0,0,0.25\n1,-2e-05,1,0,1\n");
  const auto ds = ParseCsv(text, TinySchema());
  EXPECT_EQ(ParseCsv(FormatCsv(ds), TinySchema()), ds);

  const auto dir = std::filesystem::temp_directory_path() / "fairlens_csv_roundtrip";
  std::filesystem::create_directories(dir);
  const auto gen = GenerateSynthetic({500, 0.25, 13});
  SaveCsv(gen, (dir / "d.csv").string());
  SaveSchema(gen.schema, (dir / "s.json").string());
  const auto loaded = LoadCsv((dir / "d.csv").string(), (dir / "s.json").string());
  EXPECT_EQ(loaded.x, gen.x);
  EXPECT_EQ(loaded.t, gen.t);
  EXPECT_EQ(loaded.y, gen.y);
  EXPECT_EQ(loaded.schema, gen.schema);
  std::filesystem::remove_all(dir);
}

TEST(Csv, SchemaJsonRoundTrip) {
  const auto s = TinySchema();
  EXPECT_EQ(SchemaFromJson(SchemaToJson(s)), s);
}

TEST(Checksum, SensitiveToEveryColumn) {
  const auto ds = GenerateSynthetic({300, 0.5, 14});
  const auto base = DatasetChecksum(ds);
  EXPECT_EQ(base, DatasetChecksum(GenerateSynthetic({300, 0.5, 14})));
  auto changed = ds;
  (*changed.p1)[5] += 1e-9;
  EXPECT_NE(DatasetChecksum(changed), base);
  changed = ds;
  changed.x(3, 7) += 1e-9;
  EXPECT_NE(DatasetChecksum(changed), base);
}

TEST(Split, FullTrainFractionReturnsInput) {
  const auto ds = GenerateSynthetic({400, 0.5, 15});
  const auto parts = Split(ds, {1.0, 0.0, 0.0}, 1);
  EXPECT_EQ(parts.train, ds);
  EXPECT_EQ(parts.audit.size(), 0u);
  EXPECT_EQ(parts.test.size(), 0u);
}

TEST(Split, SizesAndDeterminism) {
  const auto ds = GenerateSynthetic({100, 0.5, 16});
  const auto a = Split(ds, {0.8, 0.1, 0.1}, 7);
  EXPECT_EQ(a.train.size(), 80u);
  EXPECT_EQ(a.audit.size(), 10u);
  EXPECT_EQ(a.test.size(), 10u);
  const auto b = Split(ds, {0.8, 0.1, 0.1}, 7);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.audit, b.audit);
  EXPECT_EQ(a.test, b.test);
}

TEST(Split, DisjointExhaustiveStratified) {
  const auto ds = GenerateSynthetic({10000, 0.5, 17});
  const auto parts = Split(ds, {0.6, 0.2, 0.2}, 3);
  // Every row appears exactly once: match on (x5, x6), continuous and unique.
  std::multiset<std::pair<double, double>> all, seen;
  for (size_t r = 0; r < ds.size(); ++r) all.insert({ds.x(r, 4), ds.x(r, 5)});
  const double base = std::count(ds.t.begin(), ds.t.end(), 1) / double(ds.size());
  for (const auto* p : {&parts.train, &parts.audit, &parts.test}) {
    for (size_t r = 0; r < p->size(); ++r) seen.insert({p->x(r, 4), p->x(r, 5)});
    const double rate = std::count(p->t.begin(), p->t.end(), 1) / double(p->size());
    EXPECT_LT(std::abs(rate - base), 0.02);
  }
  EXPECT_EQ(all, seen);
}

TEST(Split, RejectsDegenerateFractions) {
  const auto ds = GenerateSynthetic({100, 0.5, 18});
  EXPECT_THROW(Split(ds, {0.5, 0.2, 0.2}, 0), Error);
  EXPECT_THROW(Split(ds, {0.0, 0.5, 0.5}, 0), Error);
  EXPECT_THROW(Split(ds, {1.2, -0.2, 0.0}, 0), Error);
}

TEST(Validate, DetectsInconsistency) {
  auto ds = GenerateSynthetic({50, 0.5, 19});
  ds.y[0] = 1.0 - ds.y[0];
  EXPECT_THROW(ds.Validate(), Error);
}

}  // namespace
}  // namespace fairlens
