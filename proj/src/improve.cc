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

#include "fairlens/improve.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fairlens/error.h"
#include "fairlens/io.h"
#include "fairlens/numeric.h"

namespace fairlens {

namespace {

size_t FeatureByName(const AdditiveModel& model, std::string_view name) {
  for (size_t i = 0; i < model.feature_names.size(); ++i) {
    if (model.feature_names[i] == name) return i;
  }
  Fail(ErrorCode::kNotFound, "unknown feature '" + std::string(name) + "'");
}

void CheckShape(const AdditiveModel& model, const ShapeId& id) {
  Require(id.feature.has_value() != id.pair.has_value(), ErrorCode::kInvalidArgument,
          "shape id must name exactly one feature or one pair");
  if (id.feature) {
    Require(*id.feature < model.num_features(), ErrorCode::kNotFound,
            "shape feature out of range");
  } else {
    Require(model.FindPair(*id.pair) != nullptr, ErrorCode::kNotFound,
            "model has no shape for pair (" + std::to_string(id.pair->first) + ", " +
                std::to_string(id.pair->second) + ")");
  }
}

nlohmann::json Opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string OptCsv(const std::optional<double>& v) {
  return v ? FormatDouble(*v) : std::string("NA");
}

}  // namespace

ShapeId ParseShapeId(const AdditiveModel& model, std::string_view label) {
  const auto star = label.find('*');
  ShapeId id;
  if (star == std::string_view::npos) {
    id = ShapeId::Feature(FeatureByName(model, label));
  } else {
    id = ShapeId::Pair(FeaturePair::Of(FeatureByName(model, label.substr(0, star)),
                                       FeatureByName(model, label.substr(star + 1))));
  }
  CheckShape(model, id);
  return id;
}

std::string ShapeLabel(const AdditiveModel& model, const ShapeId& id) {
  if (id.feature) return model.feature_names.at(*id.feature);
  return model.feature_names.at(id.pair->first) + "*" + model.feature_names.at(id.pair->second);
}

std::vector<ShapeId> ShapesReferencing(const AdditiveModel& model, size_t f) {
  Require(f < model.num_features(), ErrorCode::kNotFound, "feature out of range");
  std::vector<ShapeId> out{ShapeId::Feature(f)};
  for (const auto& s : model.shapes2) {
    if (s.pair.first == f || s.pair.second == f) out.push_back(ShapeId::Pair(s.pair));
  }
  return out;
}

std::vector<double> ShapeContribution(const AdditiveModel& model, const ShapeId& id,
                                      const Matrix& x) {
  CheckShape(model, id);
  Require(x.cols() == model.num_features(), ErrorCode::kSchemaMismatch,
          "input width does not match model");
  std::vector<double> out(x.rows());
  if (id.feature) {
    const auto& s = model.shapes1[*id.feature];
    for (size_t r = 0; r < x.rows(); ++r) out[r] = s.Eval(x(r, *id.feature));
  } else {
    const auto* s = model.FindPair(*id.pair);
    for (size_t r = 0; r < x.rows(); ++r) {
      out[r] = s->Eval(x(r, id.pair->first), x(r, id.pair->second));
    }
  }
  return out;
}

std::string_view ReplacementName(Replacement r) {
  return r == Replacement::kZero ? "zero" : "audit";
}

Replacement ParseReplacement(std::string_view name) {
  if (name == "zero") return Replacement::kZero;
  if (name == "audit") return Replacement::kAudit;
  Fail(ErrorCode::kInvalidArgument, "unknown replacement '" + std::string(name) + "'");
}

nlohmann::json AdjustmentsToJson(const AdditiveModel& model,
                                 std::span<const ShapeAdjustment> adjustments) {
  auto out = nlohmann::json::array();
  for (const auto& a : adjustments) {
    out.push_back({{"shape", ShapeLabel(model, a.target)},
                   {"alpha", a.alpha},
                   {"replacement", ReplacementName(a.replacement)}});
  }
  return out;
}

std::vector<ShapeAdjustment> AdjustmentsFromJson(const AdditiveModel& model,
                                                 const nlohmann::json& j) {
  Require(j.is_array(), ErrorCode::kInvalidArgument, "adjustments must be an array");
  std::vector<ShapeAdjustment> out;
  for (const auto& e : j) {
    Require(e.is_object() && e.contains("shape"), ErrorCode::kInvalidArgument,
            "adjustment needs a shape");
    ShapeAdjustment a;
    a.target = ParseShapeId(model, e.at("shape").get<std::string>());
    a.alpha = e.value("alpha", 1.0);
    a.replacement = ParseReplacement(e.value("replacement", std::string("zero")));
    out.push_back(a);
  }
  return out;
}

std::vector<double> AdjustPrediction(std::span<const double> teacher_raw,
                                     const AdditiveModel& distilled,
                                     const AdditiveModel& audit,
                                     std::span<const ShapeAdjustment> adjustments,
                                     const Matrix& x) {
  Require(teacher_raw.size() == x.rows(), ErrorCode::kInvalidArgument,
          "teacher scores do not match rows");
  std::vector<double> out(teacher_raw.begin(), teacher_raw.end());
  for (const auto& a : adjustments) {
    Require(a.alpha >= 0.0 && a.alpha <= 1.0, ErrorCode::kInvalidArgument,
            "alpha must lie in [0, 1]");
    CheckShape(distilled, a.target);
    if (a.alpha == 0.0) continue;
    const auto removed = ShapeContribution(distilled, a.target, x);
    for (size_t r = 0; r < out.size(); ++r) out[r] -= a.alpha * removed[r];
    if (a.replacement == Replacement::kAudit) {
      const auto added = ShapeContribution(audit, a.target, x);
      for (size_t r = 0; r < out.size(); ++r) out[r] += a.alpha * added[r];
    }
  }
  return out;
}

RawFunction AdjustedScore(RawFunction teacher, AdditiveModel distilled, AdditiveModel audit,
                          std::vector<ShapeAdjustment> adjustments) {
  for (const auto& a : adjustments) {
    CheckShape(distilled, a.target);
    if (a.replacement == Replacement::kAudit) CheckShape(audit, a.target);
  }
  return [teacher = std::move(teacher), d = std::move(distilled), au = std::move(audit),
          adj = std::move(adjustments)](const Matrix& x) {
    const auto raw = teacher(x);
    return AdjustPrediction(raw, d, au, adj, x);
  };
}

namespace {

// Threshold treating the top m of the sorted scores. It sits halfway
// between neighbours so rounding noise in a score cannot move a row across.
double ThresholdForCount(const std::vector<double>& sorted, size_t m) {
  const size_t n = sorted.size();
  if (m == 0) return sorted.back() + 1.0;
  if (m >= n) return sorted.front() - 1.0;
  return 0.5 * (sorted[n - m - 1] + sorted[n - m]);
}

std::array<std::vector<double>, 2> ScoresByGroup(std::span<const double> scores,
                                                 const ExperimentDataset& ds) {
  Require(scores.size() == ds.size(), ErrorCode::kInvalidArgument,
          "score count does not match rows");
  std::array<std::vector<double>, 2> g;
  for (size_t r = 0; r < ds.size(); ++r) g[ds.group(r)].push_back(scores[r]);
  for (int k = 0; k < 2; ++k) {
    Require(!g[k].empty(), ErrorCode::kEmptyInput,
            "group " + std::to_string(k) + " of the audited feature is empty");
    std::sort(g[k].begin(), g[k].end());
  }
  return g;
}

}  // namespace

ThresholdGrid QuantileGrid(std::span<const double> scores, const ExperimentDataset& ds,
                           size_t resolution) {
  Require(resolution >= 2, ErrorCode::kInvalidArgument, "grid resolution must be at least 2");
  const auto groups = ScoresByGroup(scores, ds);
  ThresholdGrid grid;
  for (int g = 0; g < 2; ++g) {
    const auto& s = groups[g];
    for (size_t k = resolution; k-- > 0;) {
      const double rate = static_cast<double>(k) / static_cast<double>(resolution - 1);
      const auto m = static_cast<size_t>(std::llround(rate * static_cast<double>(s.size())));
      grid.thresholds[g].push_back(ThresholdForCount(s, m));
    }
  }
  return grid;
}

PolicyManifold SweepThresholds(const ExperimentDataset& ds, std::span<const double> scores,
                               const ThresholdGrid& grid, const ValueModel& value,
                               std::string score_source) {
  Require(!grid.thresholds[0].empty() && !grid.thresholds[1].empty(),
          ErrorCode::kInvalidArgument, "threshold grid is empty for a group");
  Require(scores.size() == ds.size(), ErrorCode::kInvalidArgument,
          "score count does not match rows");
  PolicyManifold m;
  m.score_source = std::move(score_source);
  m.resolution = std::max(grid.thresholds[0].size(), grid.thresholds[1].size());

  const std::vector<int> none(ds.size(), 0);
  const auto natural = NaturalOutcomeFairness(MockEvaluate(ds, none, value));

  const size_t gf = ds.schema.group_feature();
  std::vector<int> decisions(ds.size());
  m.points.reserve(grid.size());
  for (double t0 : grid.thresholds[0]) {
    for (double t1 : grid.thresholds[1]) {
      const std::array<double, 2> th{t0, t1};
      for (size_t r = 0; r < ds.size(); ++r) {
        decisions[r] = scores[r] >= th[ds.x(r, gf) >= 0.5 ? 1 : 0] ? 1 : 0;
      }
      const auto res = MockEvaluate(ds, decisions, value);
      ManifoldPoint p;
      p.thresholds = th;
      p.treat_rate = {res.groups[0].treat_rate, res.groups[1].treat_rate};
      p.tf = TreatmentFairness(res);
      p.of = OutcomeFairness(res);
      if (p.of && natural && *natural > 0.0) p.nwo = NoWorseOff(*p.of, *natural);
      p.econ_mean = res.econ_mean;
      p.econ_se = res.econ_se;
      m.points.push_back(p);
    }
  }
  return m;
}

nlohmann::json ManifoldToJson(const PolicyManifold& m, size_t offset, size_t limit) {
  auto pts = nlohmann::json::array();
  const size_t end = offset + std::min(limit, m.points.size() - std::min(offset, m.points.size()));
  for (size_t i = offset; i < end && i < m.points.size(); ++i) {
    const auto& p = m.points[i];
    pts.push_back({{"index", i},
                   {"thresholds", p.thresholds},
                   {"treat_rate", p.treat_rate},
                   {"tf", p.tf},
                   {"of", Opt(p.of)},
                   {"nwo", Opt(p.nwo)},
                   {"econ_mean", p.econ_mean},
                   {"econ_se", p.econ_se}});
  }
  return {{"format_version", 1},
          {"score_source", m.score_source},
          {"resolution", m.resolution},
          {"total_points", m.points.size()},
          {"offset", offset},
          {"points", std::move(pts)}};
}

std::string ManifoldToCsv(const PolicyManifold& m) {
  std::ostringstream os;
  os << "index,threshold_0,threshold_1,treat_rate_0,treat_rate_1,tf,of,nwo,econ_mean,econ_se\n";
  for (size_t i = 0; i < m.points.size(); ++i) {
    const auto& p = m.points[i];
    os << i << ',' << FormatDouble(p.thresholds[0]) << ',' << FormatDouble(p.thresholds[1])
       << ',' << FormatDouble(p.treat_rate[0]) << ',' << FormatDouble(p.treat_rate[1]) << ','
       << FormatDouble(p.tf) << ',' << OptCsv(p.of) << ',' << OptCsv(p.nwo) << ','
       << FormatDouble(p.econ_mean) << ',' << FormatDouble(p.econ_se) << '\n';
  }
  return os.str();
}

double DefaultThreshold(std::span<const double> scores, const ExperimentDataset& ds) {
  Require(scores.size() == ds.size() && !scores.empty(), ErrorCode::kInvalidArgument,
          "score count does not match rows");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const size_t treated = static_cast<size_t>(std::count(ds.t.begin(), ds.t.end(), 1));
  return ThresholdForCount(sorted, treated);
}

std::vector<RemovalRow> ShapeRemovalCurve(const ExperimentDataset& ds,
                                          std::span<const double> teacher_raw,
                                          const AdditiveModel& distilled,
                                          const AdditiveModel& audit,
                                          std::span<const ShapeId> targets,
                                          std::span<const double> alphas,
                                          Replacement replacement, const ValueModel& value) {
  Require(!targets.empty(), ErrorCode::kInvalidArgument, "no shapes to remove");
  Require(!alphas.empty(), ErrorCode::kInvalidArgument, "no alpha values");
  const std::vector<int> none(ds.size(), 0);
  const size_t gf = ds.schema.group_feature();
  std::vector<RemovalRow> rows;
  for (double alpha : alphas) {
    std::vector<ShapeAdjustment> adj;
    for (const auto& t : targets) adj.push_back({t, alpha, replacement});
    const auto scores = AdjustPrediction(teacher_raw, distilled, audit, adj, ds.x);
    RemovalRow row;
    row.alpha = alpha;
    row.threshold = DefaultThreshold(scores, ds);
    const auto decisions =
        ThresholdDecisions(ds.x, scores, {row.threshold, row.threshold}, gf);
    row.report = Evaluate(ds, decisions, value, std::span<const int>(none));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json RemovalCurveToJson(std::span<const RemovalRow> rows) {
  auto out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"alpha", r.alpha}, {"threshold", r.threshold},
                   {"report", ReportToJson(r.report)}});
  }
  return {{"format_version", 1}, {"rows", std::move(out)}};
}

std::string RemovalCurveToCsv(std::span<const RemovalRow> rows) {
  std::ostringstream os;
  os << "alpha,threshold,tf,of,nwo,econ_mean,econ_se,econ_ci_low,econ_ci_high\n";
  for (const auto& r : rows) {
    os << FormatDouble(r.alpha) << ',' << FormatDouble(r.threshold) << ','
       << FormatDouble(r.report.tf) << ',' << OptCsv(r.report.of) << ','
       << OptCsv(r.report.nwo) << ',' << FormatDouble(r.report.econ_mean) << ','
       << FormatDouble(r.report.econ_se) << ',' << FormatDouble(r.report.econ_ci_low()) << ','
       << FormatDouble(r.report.econ_ci_high()) << '\n';
  }
  return os.str();
}

ParetoSet Pareto(std::vector<std::array<double, 2>> objectives) {
  Require(!objectives.empty(), ErrorCode::kEmptyInput, "no policies to compare");
  for (const auto& o : objectives) {
    Require(std::isfinite(o[0]) && std::isfinite(o[1]), ErrorCode::kInvalidArgument,
            "objectives must be finite");
  }
  std::vector<size_t> order(objectives.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (objectives[a][0] != objectives[b][0]) return objectives[a][0] > objectives[b][0];
    return objectives[a][1] > objectives[b][1];
  });
  ParetoSet out;
  // Best second objective among points with a strictly larger first one.
  double best = -std::numeric_limits<double>::infinity();
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    const double first = objectives[order[i]][0];
    while (j < order.size() && objectives[order[j]][0] == first) ++j;
    const double group_max = objectives[order[i]][1];
    if (group_max > best) {
      for (size_t k = i; k < j && objectives[order[k]][1] == group_max; ++k) {
        out.frontier.push_back(order[k]);
      }
      best = group_max;
    }
    i = j;
  }
  std::sort(out.frontier.begin(), out.frontier.end());
  out.objectives = std::move(objectives);
  return out;
}

CollegeAnalysis AnalyzeCollege(const ExperimentDataset& ds, double budget, size_t resolution) {
  Require(budget > 0.0 && budget <= 1.0, ErrorCode::kInvalidArgument,
          "budget must lie in (0, 1]");
  const bool probs = ds.p0 && ds.p1;
  Require(probs || ds.has_potential_outcomes(), ErrorCode::kInvalidArgument,
          "college analysis needs potential outcomes");
  const auto& g0 = probs ? *ds.p0 : *ds.y0;
  const auto& g1 = probs ? *ds.p1 : *ds.y1;
  const auto score_col = ds.schema.index_of("test_score");
  Require(score_col.has_value(), ErrorCode::kMissingColumn, "college data needs test_score");

  // Per group: rows sorted by descending score, with prefix sums of the
  // graduation gain from admission and of treated graduation.
  struct Group {
    std::vector<double> desc_scores;
    std::vector<double> gain_prefix{0.0};
    std::vector<double> g1_prefix{0.0};
    double g0_total = 0.0;
  };
  std::array<Group, 2> groups;
  std::array<std::vector<size_t>, 2> rows;
  for (size_t r = 0; r < ds.size(); ++r) rows[ds.group(r)].push_back(r);
  for (int g = 0; g < 2; ++g) {
    Require(!rows[g].empty(), ErrorCode::kEmptyInput, "college group is empty");
    auto& idx = rows[g];
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
      return ds.x(a, *score_col) > ds.x(b, *score_col);
    });
    for (size_t r : idx) {
      groups[g].desc_scores.push_back(ds.x(r, *score_col));
      groups[g].gain_prefix.push_back(groups[g].gain_prefix.back() + g1[r] - g0[r]);
      groups[g].g1_prefix.push_back(groups[g].g1_prefix.back() + g1[r]);
      groups[g].g0_total += g0[r];
    }
  }
  // The minority flag is the group feature; group 1 is the minority.
  const double n = static_cast<double>(ds.size());
  const std::array<double, 2> size{static_cast<double>(rows[0].size()),
                                   static_cast<double>(rows[1].size())};
  CollegeAnalysis out;
  out.budget = budget;
  out.resolution = resolution;
  const double natural0 = groups[0].g0_total / size[0];
  const double natural1 = groups[1].g0_total / size[1];
  if (natural0 > 0.0 || natural1 > 0.0) out.baseline_of = PRule(natural0, natural1);

  std::vector<double> all_scores(ds.size());
  for (size_t r = 0; r < ds.size(); ++r) all_scores[r] = ds.x(r, *score_col);
  const auto grid = QuantileGrid(all_scores, ds, resolution);

  auto admitted = [&](int g, double th) {
    const auto& s = groups[g].desc_scores;
    // Count of scores >= th in a descending array.
    return static_cast<size_t>(
        std::partition_point(s.begin(), s.end(), [th](double v) { return v >= th; }) -
        s.begin());
  };
  for (double t0 : grid.thresholds[0]) {
    const size_t m0 = admitted(0, t0);
    for (double t1 : grid.thresholds[1]) {
      const size_t m1 = admitted(1, t1);
      const double rate = static_cast<double>(m0 + m1) / n;
      if (rate > budget + 1e-12) continue;
      CollegePolicy p;
      p.thresholds = {t0, t1};
      p.admit_rate = {static_cast<double>(m0) / size[0], static_cast<double>(m1) / size[1]};
      p.overall_admit_rate = rate;
      p.graduates = groups[0].g0_total + groups[1].g0_total + groups[0].gain_prefix[m0] +
                    groups[1].gain_prefix[m1];
      p.minority_admits = static_cast<double>(m1);
      p.treatment_parity_gap = p.admit_rate[0] - p.admit_rate[1];
      if (m0 > 0 && m1 > 0) {
        const double grad0 = groups[0].g1_prefix[m0] / static_cast<double>(m0);
        const double grad1 = groups[1].g1_prefix[m1] / static_cast<double>(m1);
        p.predictive_parity_gap = grad0 - grad1;
        if (out.baseline_of && *out.baseline_of > 0.0 && (grad0 > 0.0 || grad1 > 0.0)) {
          p.nwo = NoWorseOff(PRule(grad0, grad1), *out.baseline_of);
        }
      }
      out.policies.push_back(p);
    }
  }
  Require(!out.policies.empty(), ErrorCode::kEmptyInput, "no policy fits the budget");
  std::vector<std::array<double, 2>> obj;
  obj.reserve(out.policies.size());
  for (const auto& p : out.policies) obj.push_back({p.graduates, p.minority_admits});
  for (size_t i : Pareto(std::move(obj)).frontier) out.policies[i].on_frontier = true;
  return out;
}

nlohmann::json CollegeToJson(const CollegeAnalysis& a) {
  auto pol = nlohmann::json::array();
  for (const auto& p : a.policies) {
    pol.push_back({{"thresholds", p.thresholds},
                   {"admit_rate", p.admit_rate},
                   {"overall_admit_rate", p.overall_admit_rate},
                   {"graduates", p.graduates},
                   {"minority_admits", p.minority_admits},
                   {"treatment_parity_gap", p.treatment_parity_gap},
                   {"predictive_parity_gap", Opt(p.predictive_parity_gap)},
                   {"nwo", Opt(p.nwo)},
                   {"on_frontier", p.on_frontier}});
  }
  return {{"format_version", 1},
          {"budget", a.budget},
          {"resolution", a.resolution},
          {"baseline_of", Opt(a.baseline_of)},
          {"policies", std::move(pol)}};
}

std::string CollegeToCsv(const CollegeAnalysis& a) {
  std::ostringstream os;
  os << "threshold_majority,threshold_minority,admit_rate_majority,admit_rate_minority,"
        "overall_admit_rate,graduates,minority_admits,treatment_parity_gap,"
        "predictive_parity_gap,nwo,on_frontier\n";
  for (const auto& p : a.policies) {
    os << FormatDouble(p.thresholds[0]) << ',' << FormatDouble(p.thresholds[1]) << ','
       << FormatDouble(p.admit_rate[0]) << ',' << FormatDouble(p.admit_rate[1]) << ','
       << FormatDouble(p.overall_admit_rate) << ',' << FormatDouble(p.graduates) << ','
       << FormatDouble(p.minority_admits) << ',' << FormatDouble(p.treatment_parity_gap) << ','
       << OptCsv(p.predictive_parity_gap) << ',' << OptCsv(p.nwo) << ','
       << (p.on_frontier ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace fairlens
