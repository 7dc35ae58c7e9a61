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

#ifndef FAIRLENS_SERVICE_H_
#define FAIRLENS_SERVICE_H_

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fairlens/dataset.h"
#include "fairlens/pipeline.h"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace fairlens {

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> params;
  std::string body;
  std::string idempotency_key;
};

struct HttpResponse {
  int status = 200;
  std::string body;
};

// Maximum manifold points returned by one /manifold call.
inline constexpr size_t kManifoldPageLimit = 10000;

// In-memory evaluation service. Artifacts are published once and never
// mutated; ids are never reused.
class Service {
 public:
  Service();
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  HttpResponse Handle(const HttpRequest& request);

  // Blocks until every submitted fit job has finished.
  void WaitForJobs();

  // Serves until Stop is called. Returns false if the port cannot be bound.
  bool Listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it, serving on a background thread.
  int ListenInBackground(const std::string& host);
  void Stop();

 private:
  struct DatasetEntry {
    std::string id;
    std::string source;
    std::shared_ptr<const ExperimentDataset> data;
    std::string checksum;
  };
  struct ModelEntry {
    std::string id;
    std::string dataset_id;
    std::shared_ptr<const FittedModel> model;
  };
  struct JobEntry {
    std::string id;
    std::string model_id;
    std::string status;  // running | succeeded | failed
    nlohmann::json error;
  };
  struct HandleEntry {
    std::string model_id;
    nlohmann::json adjustments;
  };

  HttpResponse Dispatch(const HttpRequest& request);
  HttpResponse ListDatasets();
  HttpResponse GenerateDatasetRoute(const nlohmann::json& body);
  HttpResponse UploadDataset(const nlohmann::json& body);
  HttpResponse FitModelRoute(const nlohmann::json& body);
  HttpResponse JobStatus(const std::string& id);
  HttpResponse ModelShapesRoute(const std::string& id);
  HttpResponse ModelInteractions(const std::string& id,
                                 const std::map<std::string, std::string>& params);
  HttpResponse EvaluateRoute(nlohmann::json body);
  HttpResponse ManifoldRoute(nlohmann::json body);
  HttpResponse AdjustRoute(const nlohmann::json& body);

  std::string NextId(char prefix);
  std::string AddDataset(std::string source, ExperimentDataset ds, std::string* checksum);
  DatasetEntry GetDataset(const std::string& id) const;
  ModelEntry GetModel(const std::string& id) const;
  // Replaces {"type": "handle"} score specs; may set `model_id`.
  void ResolveHandles(nlohmann::json& policy_or_request, std::string& model_id) const;

  mutable std::mutex mu_;
  uint64_t next_id_ = 1;
  std::map<std::string, DatasetEntry> datasets_;
  std::map<std::string, ModelEntry> models_;
  std::map<std::string, JobEntry> jobs_;
  std::map<std::string, HandleEntry> handles_;
  std::map<std::string, std::string> manifold_cache_;
  std::map<std::string, HttpResponse> idempotent_;
  std::mutex idempotency_mu_;

  std::mutex jobs_mu_;
  std::vector<std::thread> workers_;

  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
};

// Maps an error onto a 4xx status and {"error": {"code", "message"}}.
HttpResponse ErrorResponse(const std::exception& e);

}  // namespace fairlens

#endif  // FAIRLENS_SERVICE_H_
