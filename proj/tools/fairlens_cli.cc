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

// fairlens: command line front end.
//
//   fairlens generate --config cfg.json --seed 7 --out run/
//   fairlens fit --config cfg.json --out run/
//   fairlens sweep --model run/model.json --config cfg.json --out run/
//
// The config file is one JSON object; each command reads its own section
// ("dataset", "model", "interactions", "distill", "evaluate", "sweep",
// "removal", "college") and ignores the rest.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fairlens/error.h"
#include "fairlens/io.h"
#include "fairlens/pipeline.h"
#include "fairlens/service.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fairlens {
namespace {

struct Globals {
  uint64_t seed = 0;
  std::string config_path;
  std::string out = ".";
  json config = json::object();
};

json Section(const Globals& g, const char* name) {
  if (!g.config.contains(name)) return json::object();
  const auto& s = g.config.at(name);
  Require(s.is_object(), ErrorCode::kInvalidArgument,
          std::string("config section '") + name + "' must be an object");
  return s;
}

void Emit(const Globals& g, const std::string& name, std::string_view contents) {
  fs::create_directories(g.out);
  const auto path = (fs::path(g.out) / name).string();
  WriteFile(path, contents);
  std::cout << "wrote " << path << "\n";
}

// Dataset from --data/--schema, or generated from the "dataset" section.
ExperimentDataset LoadDataset(const Globals& g, const std::string& data,
                              const std::string& schema) {
  if (!data.empty()) {
    Require(!schema.empty(), ErrorCode::kInvalidArgument, "--data needs --schema");
    return LoadCsv(data, schema);
  }
  return GenerateDataset(Section(g, "dataset"), g.seed);
}

FittedModel LoadModel(const std::string& path) {
  Require(!path.empty(), ErrorCode::kInvalidArgument, "this command needs --model");
  try {
    return FittedModelFromJson(json::parse(ReadFile(path)));
  } catch (const json::parse_error& e) {
    Fail(ErrorCode::kParse, path + ": " + e.what());
  }
}

std::string PotentialOutcomesCsv(const ExperimentDataset& ds) {
  std::string out = "y0,y1,p0,p1\n";
  for (size_t r = 0; r < ds.size(); ++r) {
    out += FormatDouble((*ds.y0)[r]) + "," + FormatDouble((*ds.y1)[r]) + "," +
           (ds.p0 ? FormatDouble((*ds.p0)[r]) : "NA") + "," +
           (ds.p1 ? FormatDouble((*ds.p1)[r]) : "NA") + "\n";
  }
  return out;
}

std::string IteCsv(const FittedModel& m, const ExperimentDataset& ds) {
  const auto ite = m.learner->Ite(ds.x);
  const bool truth = ds.p0 && ds.p1;
  std::string out = truth ? "row,ite,true_ite\n" : "row,ite\n";
  for (size_t r = 0; r < ds.size(); ++r) {
    out += std::to_string(r) + "," + FormatDouble(ite[r]);
    if (truth) out += "," + FormatDouble((*ds.p1)[r] - (*ds.p0)[r]);
    out += "\n";
  }
  return out;
}

std::string RankingCsv(const json& ranking) {
  std::string out = "rank,first,second,score,defined_draws\n";
  size_t rank = 1;
  for (const auto& e : ranking.at("ranked")) {
    out += std::to_string(rank++) + "," + e.at("names").at(0).get<std::string>() + "," +
           e.at("names").at(1).get<std::string>() + "," +
           FormatDouble(e.at("score").get<double>()) + "," +
           std::to_string(e.at("defined_draws").get<size_t>()) + "\n";
  }
  return out;
}

std::string Shapes1Csv(const Distillation& d) {
  std::string out = "feature,knot,distilled,audit\n";
  for (size_t i = 0; i < d.student.shapes1.size(); ++i) {
    const auto& s = d.student.shapes1[i];
    const auto& a = d.audit.shapes1[i];
    for (size_t k = 0; k < s.knots.size(); ++k) {
      out += d.student.feature_names[i] + "," + FormatDouble(s.knots[k]) + "," +
             FormatDouble(s.values[k]) + "," + FormatDouble(a.values.at(k)) + "\n";
    }
  }
  return out;
}

std::string Shapes2Csv(const Distillation& d) {
  std::string out = "pair,knot_first,knot_second,distilled,audit\n";
  for (const auto& s : d.student.shapes2) {
    const auto* a = d.audit.FindPair(s.pair);
    const auto label =
        d.student.feature_names[s.pair.first] + "*" + d.student.feature_names[s.pair.second];
    for (size_t i = 0; i < s.knots_first.size(); ++i) {
      for (size_t j = 0; j < s.knots_second.size(); ++j) {
        out += label + "," + FormatDouble(s.knots_first[i]) + "," +
               FormatDouble(s.knots_second[j]) + "," + FormatDouble(s.at(i, j)) + "," +
               (a ? FormatDouble(a->at(i, j)) : "NA") + "\n";
      }
    }
  }
  return out;
}

std::string SharesCsv(const std::vector<ShapeShare>& shares) {
  std::string out = "shape,share\n";
  for (const auto& s : shares) out += s.label + "," + FormatDouble(s.share) + "\n";
  return out;
}

std::string ReportCsv(const json& r) {
  auto opt = [](const json& v) { return v.is_null() ? std::string("NA") : FormatDouble(v.get<double>()); };
  std::string out = "metric,value\n";
  out += "tf," + FormatDouble(r.at("tf").get<double>()) + "\n";
  out += "of," + opt(r.at("of")) + "\n";
  out += "nwo," + opt(r.at("nwo")) + "\n";
  out += "econ_mean," + FormatDouble(r.at("econ").at("mean").get<double>()) + "\n";
  out += "econ_ci_low," + FormatDouble(r.at("econ").at("ci_low").get<double>()) + "\n";
  out += "econ_ci_high," + FormatDouble(r.at("econ").at("ci_high").get<double>()) + "\n";
  return out;
}

std::string FrontierCsv(const CollegeAnalysis& a) {
  std::string out = "graduates,minority_admits,treatment_parity_gap,predictive_parity_gap,nwo\n";
  for (const auto& p : a.policies) {
    if (!p.on_frontier) continue;
    out += FormatDouble(p.graduates) + "," + FormatDouble(p.minority_admits) + "," +
           FormatDouble(p.treatment_parity_gap) + "," +
           (p.predictive_parity_gap ? FormatDouble(*p.predictive_parity_gap) : "NA") + "," +
           (p.nwo ? FormatDouble(*p.nwo) : "NA") + "\n";
  }
  return out;
}

int Run(int argc, char** argv) {
  CLI::App app{"Fairness auditing for treatment-assignment policies"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  std::string data, schema, model_path, host = "127.0.0.1";
  int port = 8080;
  auto add_data = [&](CLI::App* c) {
    c->add_option("--data", data, "Dataset CSV (else generated from config)");
    c->add_option("--schema", schema, "Schema JSON for --data");
  };
  auto add_model = [&](CLI::App* c) {
    c->add_option("--model", model_path, "Fitted model JSON from `fit`");
  };

  auto* generate = app.add_subcommand("generate", "Generate a synthetic or college dataset");
  auto* fit = app.add_subcommand("fit", "Fit a T-learner and distill its effect");
  add_data(fit);
  auto* interactions = app.add_subcommand("interactions", "Rank pairwise interactions");
  add_data(interactions);
  add_model(interactions);
  auto* distill = app.add_subcommand("distill", "Distill a fitted model into a GAM");
  add_data(distill);
  add_model(distill);
  auto* audit = app.add_subcommand("audit", "Evaluate one policy by mock experiment");
  add_data(audit);
  add_model(audit);
  auto* sweep = app.add_subcommand("sweep", "Sweep per-group thresholds");
  add_data(sweep);
  add_model(sweep);
  auto* removal = app.add_subcommand("removal-curve", "Shape removal curve");
  add_data(removal);
  add_model(removal);
  auto* college = app.add_subcommand("college", "College admission Pareto analysis");
  auto* serve = app.add_subcommand("serve", "Run the HTTP evaluation service");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (!g.config_path.empty()) {
    try {
      g.config = json::parse(ReadFile(g.config_path));
    } catch (const json::parse_error& e) {
      Fail(ErrorCode::kParse, g.config_path + ": " + e.what());
    }
    Require(g.config.is_object(), ErrorCode::kInvalidArgument, "config must be a JSON object");
  }

  if (generate->parsed()) {
    const auto ds = GenerateDataset(Section(g, "dataset"), g.seed);
    Emit(g, "dataset.csv", FormatCsv(ds));
    Emit(g, "schema.json", Dump(SchemaToJson(ds.schema)));
    if (ds.has_potential_outcomes()) Emit(g, "potential_outcomes.csv", PotentialOutcomesCsv(ds));
    Emit(g, "summary.json", Dump(DatasetSummary(ds)));
  } else if (fit->parsed()) {
    const auto ds = LoadDataset(g, data, schema);
    const auto m = FitModel(ds, ModelSpec::FromJson(Section(g, "model")), g.seed);
    Emit(g, "model.json", Dump(FittedModelToJson(m)));
    Emit(g, "ite.csv", IteCsv(m, ds));
    json summary = {{"dataset_checksum", m.dataset_checksum},
                    {"kind", m.spec.kind},
                    {"fidelity", m.distillation ? json(m.distillation->fidelity) : json(nullptr)}};
    Emit(g, "fit.json", Dump(summary));
  } else if (interactions->parsed()) {
    const auto ds = LoadDataset(g, data, schema);
    const auto m = LoadModel(model_path);
    const auto s = Section(g, "interactions");
    const auto r = RankModel(m, ds, s.value("M", size_t{50}), s.value("K", size_t{10}), g.seed);
    const auto j = RankingToJson(r, ds.schema);
    Emit(g, "interactions.json", Dump(j));
    Emit(g, "interactions.csv", RankingCsv(j));
  } else if (distill->parsed()) {
    const auto ds = LoadDataset(g, data, schema);
    auto m = LoadModel(model_path);
    const auto s = Section(g, "distill");
    m.spec.top_k = s.value("top_k", m.spec.top_k);
    m.spec.draws = s.value("draws", m.spec.draws);
    if (s.contains("audit_target")) {
      m.spec.audit_target = ParseAuditTarget(s.at("audit_target").get<std::string>());
    }
    DistillInto(m, ds, g.seed);
    const auto& d = m.distilled();
    Emit(g, "model.json", Dump(FittedModelToJson(m)));
    Emit(g, "shapes.json", Dump(ModelShapes(m)));
    Emit(g, "shapes1.csv", Shapes1Csv(d));
    Emit(g, "shapes2.csv", Shapes2Csv(d));
    Emit(g, "variance_shares.csv", SharesCsv(VarianceAttribution(d.student, ds.x)));
    std::cout << "fidelity " << FormatDouble(d.fidelity) << "\n";
  } else if (audit->parsed()) {
    const auto ds = LoadDataset(g, data, schema);
    std::optional<FittedModel> m;
    if (!model_path.empty()) m = LoadModel(model_path);
    const auto r = RunEvaluate(m ? &*m : nullptr, ds, Section(g, "evaluate"));
    Emit(g, "report.json", Dump(r));
    Emit(g, "report.csv", ReportCsv(r));
  } else if (sweep->parsed()) {
    const auto ds = LoadDataset(g, data, schema);
    std::optional<FittedModel> m;
    if (!model_path.empty()) m = LoadModel(model_path);
    const auto mf = RunSweep(m ? &*m : nullptr, ds, Section(g, "sweep"));
    Emit(g, "manifold.json", Dump(ManifoldToJson(mf)));
    Emit(g, "manifold.csv", ManifoldToCsv(mf));
  } else if (removal->parsed()) {
    const auto ds = LoadDataset(g, data, schema);
    const auto m = LoadModel(model_path);
    const auto rows = RunRemovalCurve(m, ds, Section(g, "removal"));
    Emit(g, "removal_curve.json", Dump(RemovalCurveToJson(rows)));
    Emit(g, "removal_curve.csv", RemovalCurveToCsv(rows));
  } else if (college->parsed()) {
    const auto a = RunCollege(Section(g, "college"), g.seed);
    Emit(g, "college.json", Dump(CollegeToJson(a)));
    Emit(g, "college.csv", CollegeToCsv(a));
    Emit(g, "frontier.csv", FrontierCsv(a));
  } else if (serve->parsed()) {
    Service service;
    std::cout << "listening on " << host << ":" << port << std::endl;
    if (!service.Listen(host, port)) {
      std::cerr << "error: cannot bind " << host << ":" << port << "\n";
      return 1;
    }
  }
  return 0;
}

}  // namespace
}  // namespace fairlens

int main(int argc, char** argv) {
  try {
    return fairlens::Run(argc, argv);
  } catch (const fairlens::ParseError& e) {
    std::cerr << "error [" << fairlens::ErrorCodeName(e.code()) << "] row " << e.row() << ": "
              << e.what() << "\n";
    return 2;
  } catch (const fairlens::Error& e) {
    std::cerr << "error [" << fairlens::ErrorCodeName(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
