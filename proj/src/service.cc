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

#include "fairlens/service.h"

#include <sstream>

#include "fairlens/error.h"
#include "fairlens/io.h"
#include "fairlens/numeric.h"
#include "httplib.h"

namespace fairlens {

namespace {

HttpResponse Json(int status, const nlohmann::json& j) { return {status, Dump(j)}; }

nlohmann::json ParseBody(const std::string& body) {
  if (body.empty()) return nlohmann::json::object();
  try {
    auto j = nlohmann::json::parse(body);
    Require(j.is_object(), ErrorCode::kParse, "request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    Fail(ErrorCode::kParse, std::string("request body is not JSON: ") + e.what());
  }
}

std::string RequireString(const nlohmann::json& j, const char* key) {
  Require(j.contains(key) && j.at(key).is_string(), ErrorCode::kInvalidArgument,
          std::string("missing string field '") + key + "'");
  return j.at(key).get<std::string>();
}

std::vector<std::string> SplitPath(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kSchemaMismatch: return 409;
    case ErrorCode::kUndefinedMetric:
    case ErrorCode::kZeroVariance:
    case ErrorCode::kEmptyTreatmentArm: return 422;
    case ErrorCode::kInternal: return 500;
    default: return 400;
  }
}

}  // namespace

HttpResponse ErrorResponse(const std::exception& e) {
  nlohmann::json err;
  int status = 500;
  if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
    status = StatusFor(pe->code());
    err = {{"code", std::string(ErrorCodeName(pe->code()))},
           {"message", pe->what()},
           {"row", pe->row()},
           {"column", pe->column()}};
  } else if (const auto* fe = dynamic_cast<const Error*>(&e)) {
    status = StatusFor(fe->code());
    err = {{"code", std::string(ErrorCodeName(fe->code()))}, {"message", fe->what()}};
  } else if (dynamic_cast<const nlohmann::json::exception*>(&e) != nullptr) {
    status = 400;
    err = {{"code", std::string(ErrorCodeName(ErrorCode::kInvalidArgument))},
           {"message", e.what()}};
  } else {
    err = {{"code", std::string(ErrorCodeName(ErrorCode::kInternal))}, {"message", e.what()}};
  }
  return Json(status, {{"error", err}});
}

Service::Service() = default;

Service::~Service() {
  Stop();
  WaitForJobs();
}

void Service::WaitForJobs() {
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(jobs_mu_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
}

std::string Service::NextId(char prefix) {
  return std::string(1, prefix) + std::to_string(next_id_++);
}

HttpResponse Service::Handle(const HttpRequest& request) {
  const bool mutation = request.method == "POST";
  if (!mutation || request.idempotency_key.empty()) return Dispatch(request);
  // Retries with the same key replay the first response.
  std::lock_guard<std::mutex> lock(idempotency_mu_);
  const std::string key = request.path + "\n" + request.idempotency_key;
  if (auto it = idempotent_.find(key); it != idempotent_.end()) return it->second;
  auto response = Dispatch(request);
  if (response.status < 500) idempotent_.emplace(key, response);
  return response;
}

HttpResponse Service::Dispatch(const HttpRequest& request) {
  try {
    const auto parts = SplitPath(request.path);
    const auto& m = request.method;
    if (m == "GET" && parts.size() == 1 && parts[0] == "datasets") return ListDatasets();
    if (m == "POST" && parts.size() == 2 && parts[0] == "datasets") {
      if (parts[1] == "generate") return GenerateDatasetRoute(ParseBody(request.body));
      if (parts[1] == "upload") return UploadDataset(ParseBody(request.body));
    }
    if (m == "POST" && parts.size() == 2 && parts[0] == "models" && parts[1] == "fit") {
      return FitModelRoute(ParseBody(request.body));
    }
    if (m == "GET" && parts.size() == 2 && parts[0] == "jobs") return JobStatus(parts[1]);
    if (m == "GET" && parts.size() == 3 && parts[0] == "models") {
      if (parts[2] == "shapes") return ModelShapesRoute(parts[1]);
      if (parts[2] == "interactions") return ModelInteractions(parts[1], request.params);
    }
    if (m == "POST" && parts.size() == 1) {
      if (parts[0] == "evaluate") return EvaluateRoute(ParseBody(request.body));
      if (parts[0] == "manifold") return ManifoldRoute(ParseBody(request.body));
      if (parts[0] == "adjust") return AdjustRoute(ParseBody(request.body));
    }
    return Json(404, {{"error", {{"code", "not_found"},
                                 {"message", "no route for " + m + " " + request.path}}}});
  } catch (const std::exception& e) {
    return ErrorResponse(e);
  }
}

std::string Service::AddDataset(std::string source, ExperimentDataset ds, std::string* checksum) {
  DatasetEntry e;
  e.source = std::move(source);
  e.checksum = DatasetChecksum(ds);
  e.data = std::make_shared<const ExperimentDataset>(std::move(ds));
  if (checksum) *checksum = e.checksum;
  std::lock_guard<std::mutex> lock(mu_);
  e.id = NextId('d');
  const auto id = e.id;
  datasets_.emplace(id, std::move(e));
  return id;
}

Service::DatasetEntry Service::GetDataset(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = datasets_.find(id);
  Require(it != datasets_.end(), ErrorCode::kNotFound, "unknown dataset '" + id + "'");
  return it->second;
}

Service::ModelEntry Service::GetModel(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = models_.find(id);
  Require(it != models_.end(), ErrorCode::kNotFound, "unknown or unfinished model '" + id + "'");
  return it->second;
}

HttpResponse Service::ListDatasets() {
  std::lock_guard<std::mutex> lock(mu_);
  auto list = nlohmann::json::array();
  for (const auto& [id, e] : datasets_) {
    list.push_back({{"dataset_id", id},
                    {"source", e.source},
                    {"rows", e.data->size()},
                    {"checksum", e.checksum}});
  }
  return Json(200, {{"datasets", list}});
}

HttpResponse Service::GenerateDatasetRoute(const nlohmann::json& body) {
  const auto kind = RequireString(body, "kind");
  auto spec = body.value("config", nlohmann::json::object());
  Require(spec.is_object(), ErrorCode::kInvalidArgument, "config must be an object");
  spec["kind"] = kind;
  const uint64_t seed = body.value("seed", uint64_t{0});
  auto ds = GenerateDataset(spec, seed);
  const auto summary = DatasetSummary(ds);
  const auto id = AddDataset(kind, std::move(ds), nullptr);
  return Json(200, {{"dataset_id", id},
                    {"result", summary},
                    {"reproduce", {{"command", "generate"}, {"seed", seed}, {"dataset", spec}}}});
}

HttpResponse Service::UploadDataset(const nlohmann::json& body) {
  const auto csv = RequireString(body, "csv");
  Require(body.contains("schema"), ErrorCode::kInvalidArgument, "missing field 'schema'");
  const auto schema = SchemaFromJson(body.at("schema"));
  auto ds = ParseCsv(csv, schema);
  const auto summary = DatasetSummary(ds);
  const auto id = AddDataset("upload", std::move(ds), nullptr);
  return Json(200, {{"dataset_id", id}, {"result", summary}});
}

HttpResponse Service::FitModelRoute(const nlohmann::json& body) {
  const auto dataset_id = RequireString(body, "dataset_id");
  const auto data = GetDataset(dataset_id);
  nlohmann::json spec_json = nlohmann::json::object();
  for (const char* key : {"kind", "distill", "top_k", "draws", "audit_target", "audit_fraction"}) {
    if (body.contains(key)) spec_json[key] = body.at(key);
  }
  if (body.contains("hyperparams")) spec_json["hyper"] = body.at("hyperparams");
  const auto spec = ModelSpec::FromJson(spec_json);
  const uint64_t seed = body.value("seed", uint64_t{0});

  std::string job_id, model_id;
  {
    std::lock_guard<std::mutex> lock(mu_);
    job_id = NextId('j');
    model_id = NextId('m');
    jobs_[job_id] = JobEntry{job_id, model_id, "running", nullptr};
  }
  auto work = [this, data, spec, seed, job_id, model_id, dataset_id] {
    try {
      auto fitted = std::make_shared<const FittedModel>(FitModel(*data.data, spec, seed));
      std::lock_guard<std::mutex> lock(mu_);
      models_[model_id] = ModelEntry{model_id, dataset_id, std::move(fitted)};
      jobs_[job_id].status = "succeeded";
    } catch (const std::exception& e) {
      const auto err = nlohmann::json::parse(ErrorResponse(e).body).at("error");
      std::lock_guard<std::mutex> lock(mu_);
      jobs_[job_id].status = "failed";
      jobs_[job_id].error = err;
    }
  };
  {
    std::lock_guard<std::mutex> lock(jobs_mu_);
    workers_.emplace_back(std::move(work));
  }
  return Json(202, {{"job_id", job_id},
                    {"model_id", model_id},
                    {"status", "running"},
                    {"reproduce", {{"command", "fit"},
                                   {"seed", seed},
                                   {"dataset_id", dataset_id},
                                   {"model", spec.ToJson()}}}});
}

HttpResponse Service::JobStatus(const std::string& id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = jobs_.find(id);
  Require(it != jobs_.end(), ErrorCode::kNotFound, "unknown job '" + id + "'");
  const auto& j = it->second;
  return Json(200, {{"job_id", j.id}, {"model_id", j.model_id}, {"status", j.status},
                    {"error", j.error}});
}

HttpResponse Service::ModelShapesRoute(const std::string& id) {
  const auto m = GetModel(id);
  return Json(200, {{"model_id", id}, {"result", ModelShapes(*m.model)}});
}

HttpResponse Service::ModelInteractions(const std::string& id,
                                        const std::map<std::string, std::string>& params) {
  const auto m = GetModel(id);
  const auto data = GetDataset(m.dataset_id);
  auto num = [&](const char* key, uint64_t def) -> uint64_t {
    auto it = params.find(key);
    if (it == params.end()) return def;
    try {
      size_t used = 0;
      const auto v = std::stoull(it->second, &used);
      Require(used == it->second.size(), ErrorCode::kInvalidArgument, "");
      return v;
    } catch (const std::exception&) {
      Fail(ErrorCode::kInvalidArgument, std::string("query parameter '") + key +
                                            "' must be a nonnegative integer");
    }
  };
  const uint64_t draws = num("M", 50), k = num("K", 10), seed = num("seed", 0);
  Require(draws > 0, ErrorCode::kInvalidArgument, "M must be positive");
  const auto r = RankModel(*m.model, *data.data, draws, k, seed);
  return Json(200, {{"model_id", id},
                    {"result", RankingToJson(r, data.data->schema)},
                    {"reproduce", {{"command", "interactions"}, {"M", draws}, {"K", k},
                                   {"seed", seed}}}});
}

void Service::ResolveHandles(nlohmann::json& node, std::string& model_id) const {
  if (node.is_object()) {
    if (node.value("type", std::string()) == "handle") {
      const auto h = RequireString(node, "handle");
      std::lock_guard<std::mutex> lock(mu_);
      auto it = handles_.find(h);
      Require(it != handles_.end(), ErrorCode::kNotFound, "unknown score handle '" + h + "'");
      Require(model_id.empty() || model_id == it->second.model_id, ErrorCode::kInvalidArgument,
              "score handle belongs to a different model");
      model_id = it->second.model_id;
      node = {{"type", "adjusted"}, {"adjustments", it->second.adjustments}};
      return;
    }
    for (auto& [_, v] : node.items()) ResolveHandles(v, model_id);
  } else if (node.is_array()) {
    for (auto& v : node) ResolveHandles(v, model_id);
  }
}

HttpResponse Service::EvaluateRoute(nlohmann::json body) {
  const auto data = GetDataset(RequireString(body, "dataset_id"));
  std::string model_id = body.value("model_id", std::string());
  body.erase("model_id");
  ResolveHandles(body, model_id);
  std::shared_ptr<const FittedModel> model;
  if (!model_id.empty()) model = GetModel(model_id).model;
  const auto result = RunEvaluate(model.get(), *data.data, body);
  body.erase("dataset_id");
  return Json(200, {{"result", result},
                    {"reproduce", {{"command", "audit"}, {"model_id", model_id},
                                   {"request", body}}}});
}

HttpResponse Service::ManifoldRoute(nlohmann::json body) {
  const auto cache_key = Sha256Hex(body.dump());
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = manifold_cache_.find(cache_key); it != manifold_cache_.end()) {
      return {200, it->second};
    }
  }
  const auto data = GetDataset(RequireString(body, "dataset_id"));
  std::string model_id = body.value("model_id", std::string());
  body.erase("model_id");
  ResolveHandles(body, model_id);
  std::shared_ptr<const FittedModel> model;
  if (!model_id.empty()) model = GetModel(model_id).model;
  const size_t offset = body.value("offset", size_t{0});
  const size_t limit = std::min(body.value("limit", kManifoldPageLimit), kManifoldPageLimit);
  Require(limit > 0, ErrorCode::kInvalidArgument, "limit must be positive");
  const auto manifold = RunSweep(model.get(), *data.data, body);
  Require(offset < manifold.points.size() || manifold.points.empty(),
          ErrorCode::kInvalidArgument, "offset beyond the last grid point");
  auto result = ManifoldToJson(manifold, offset, limit);
  const size_t end = offset + result.at("points").size();
  body.erase("dataset_id");
  nlohmann::json out = {{"result", std::move(result)},
                        {"next_offset", end < manifold.points.size() ? nlohmann::json(end)
                                                                      : nlohmann::json(nullptr)},
                        {"reproduce", {{"command", "sweep"}, {"model_id", model_id},
                                       {"request", body}}}};
  auto text = Dump(out);
  std::lock_guard<std::mutex> lock(mu_);
  manifold_cache_.emplace(cache_key, text);
  return {200, text};
}

HttpResponse Service::AdjustRoute(const nlohmann::json& body) {
  const auto model_id = RequireString(body, "model_id");
  const auto m = GetModel(model_id);
  const auto& d = m.model->distilled();
  const auto adj = AdjustmentsFromJson(
      d.student, body.contains("adjustments") ? body.at("adjustments") : nlohmann::json::array());
  for (const auto& a : adj) {
    Require(a.alpha >= 0.0 && a.alpha <= 1.0, ErrorCode::kInvalidArgument,
            "alpha must lie in [0, 1]");
  }
  const auto normalized = AdjustmentsToJson(d.student, adj);
  std::string handle;
  {
    std::lock_guard<std::mutex> lock(mu_);
    handle = NextId('a');
    handles_[handle] = HandleEntry{model_id, normalized};
  }
  return Json(200, {{"handle", handle},
                    {"model_id", model_id},
                    {"score", {{"type", "handle"}, {"handle", handle}}},
                    {"adjustments", normalized}});
}

namespace {

void Bridge(Service& service, const httplib::Request& req, httplib::Response& res) {
  HttpRequest r;
  r.method = req.method;
  r.path = req.path;
  for (const auto& [k, v] : req.params) r.params[k] = v;
  r.body = req.body;
  r.idempotency_key = req.get_header_value("Idempotency-Key");
  const auto out = service.Handle(r);
  res.status = out.status;
  res.set_content(out.body, "application/json");
}

}  // namespace

bool Service::Listen(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    Bridge(*this, req, res);
  };
  server_->Get(R"(/.*)", handler);
  server_->Post(R"(/.*)", handler);
  return server_->listen(host, port);
}

int Service::ListenInBackground(const std::string& host) {
  server_ = std::make_unique<httplib::Server>();
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    Bridge(*this, req, res);
  };
  server_->Get(R"(/.*)", handler);
  server_->Post(R"(/.*)", handler);
  const int port = server_->bind_to_any_port(host);
  Require(port > 0, ErrorCode::kInternal, "could not bind a port");
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void Service::Stop() {
  if (server_) server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
}

}  // namespace fairlens
