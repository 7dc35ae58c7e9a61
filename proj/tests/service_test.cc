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

#include <string>

#include "fairlens/error.h"
#include "fairlens/io.h"
#include "fairlens/pipeline.h"
#include "fairlens/service.h"
#include "httplib.h"

namespace fairlens {
namespace {

using nlohmann::json;

HttpResponse Post(Service& s, const std::string& path, const json& body,
                  const std::string& key = "") {
  return s.Handle({"POST", path, {}, body.dump(), key});
}

HttpResponse Get(Service& s, const std::string& path,
                 std::map<std::string, std::string> params = {}) {
  return s.Handle({"GET", path, std::move(params), "", ""});
}

json Body(const HttpResponse& r) { return json::parse(r.body); }

std::string ErrorCodeOf(const HttpResponse& r) { return Body(r)["error"]["code"]; }

const json kSpec = {{"kind", "synthetic"}, {"config", {{"n", 3000}, {"c", 1.0}}}, {"seed", 5}};

std::string Generate(Service& s) {
  const auto r = Post(s, "/datasets/generate", kSpec);
  EXPECT_EQ(r.status, 200) << r.body;
  return Body(r)["dataset_id"];
}

// Fits a small linear T-learner with a distilled surrogate and waits for it.
std::string FitLinear(Service& s, const std::string& dataset_id) {
  const auto r = Post(s, "/models/fit",
                      {{"dataset_id", dataset_id}, {"kind", "linear"}, {"top_k", 2},
                       {"draws", 5}, {"seed", 3},
                       {"hyperparams", {{"distill_gam", {{"epochs", 20}}}}}});
  EXPECT_EQ(r.status, 202) << r.body;
  s.WaitForJobs();
  const auto job = Get(s, "/jobs/" + Body(r)["job_id"].get<std::string>());
  EXPECT_EQ(Body(job)["status"], "succeeded") << job.body;
  return Body(r)["model_id"];
}

TEST(Service, GeneratedChecksumMatchesLocalGeneration) {
  Service s;
  const auto r = Post(s, "/datasets/generate", kSpec);
  ASSERT_EQ(r.status, 200) << r.body;
  json spec = kSpec["config"];
  spec["kind"] = "synthetic";
  const auto local = GenerateDataset(spec, 5);
  EXPECT_EQ(Body(r)["result"]["checksum"], DatasetChecksum(local));
  EXPECT_EQ(Body(r)["reproduce"]["command"], "generate");

  const auto list = Body(Get(s, "/datasets"));
  ASSERT_EQ(list["datasets"].size(), 1u);
  EXPECT_EQ(list["datasets"][0]["rows"], 3000);
}

TEST(Service, TreatAllHasFullTreatmentFairness) {
  Service s;
  const auto d = Generate(s);
  const auto r = Post(s, "/evaluate", {{"dataset_id", d}, {"policy", {{"preset", "treat_all"}}}});
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_DOUBLE_EQ(Body(r)["result"]["tf"].get<double>(), 100.0);
}

TEST(Service, EvaluateMatchesPipeline) {
  Service s;
  const auto d = Generate(s);
  const json policy = {{"score", {{"type", "constant"}, {"value", 1.0}}}, {"threshold", 0.5}};
  const auto r = Post(s, "/evaluate", {{"dataset_id", d}, {"policy", policy}});
  ASSERT_EQ(r.status, 200) << r.body;
  json spec = kSpec["config"];
  spec["kind"] = "synthetic";
  const auto local = RunEvaluate(nullptr, GenerateDataset(spec, 5), {{"policy", policy}});
  EXPECT_EQ(Body(r)["result"], local);
}

TEST(Service, IdempotencyKeyReplaysFirstResponse) {
  Service s;
  const auto a = Post(s, "/datasets/generate", kSpec, "k1");
  const auto b = Post(s, "/datasets/generate", kSpec, "k1");
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.body, b.body);
  EXPECT_EQ(Body(Get(s, "/datasets"))["datasets"].size(), 1u);
  const auto c = Post(s, "/datasets/generate", kSpec, "k2");
  EXPECT_NE(Body(c)["dataset_id"], Body(a)["dataset_id"]);
}

TEST(Service, ErrorStatuses) {
  Service s;
  auto r = Get(s, "/nowhere");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(ErrorCodeOf(r), "not_found");
  r = Post(s, "/evaluate", {{"dataset_id", "d99"}});
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(ErrorCodeOf(r), "not_found");
  r = Get(s, "/jobs/j42");
  EXPECT_EQ(r.status, 404);
  r = s.Handle({"POST", "/evaluate", {}, "{not json", ""});
  EXPECT_EQ(r.status, 400);
  r = Post(s, "/datasets/generate", {{"config", json::object()}});
  EXPECT_EQ(r.status, 400);

  // Schema whose group feature is not one of its columns.
  r = Post(s, "/datasets/upload",
           {{"csv", "a,T,Y\n1,0,1\n"},
            {"schema", {{"features", {{{"name", "a"}, {"kind", "binary"}}}},
                        {"group_feature", "b"}}}});
  EXPECT_EQ(r.status, 409) << r.body;
  EXPECT_EQ(ErrorCodeOf(r), "schema_mismatch");

  const auto d = Generate(s);
  r = Post(s, "/evaluate", {{"dataset_id", d}, {"policy", {{"preset", "sometimes"}}}});
  EXPECT_EQ(r.status, 400);
  r = Post(s, "/evaluate", {{"dataset_id", d}, {"colour", "red"}});
  EXPECT_EQ(r.status, 400);
}

TEST(Service, ErrorCodesMapToStatuses) {
  EXPECT_EQ(ErrorResponse(Error(ErrorCode::kUndefinedMetric, "x")).status, 422);
  EXPECT_EQ(ErrorResponse(Error(ErrorCode::kZeroVariance, "x")).status, 422);
  EXPECT_EQ(ErrorResponse(Error(ErrorCode::kEmptyTreatmentArm, "x")).status, 422);
  EXPECT_EQ(ErrorResponse(Error(ErrorCode::kSchemaMismatch, "x")).status, 409);
  EXPECT_EQ(ErrorResponse(Error(ErrorCode::kNotFound, "x")).status, 404);
  EXPECT_EQ(ErrorResponse(Error(ErrorCode::kInvalidArgument, "x")).status, 400);
  EXPECT_EQ(ErrorResponse(std::runtime_error("boom")).status, 500);
  const auto p = ErrorResponse(ParseError(ErrorCode::kParse, 7, "y", "bad cell"));
  EXPECT_EQ(p.status, 400);
  EXPECT_EQ(Body(p)["error"]["row"], 7);
  EXPECT_EQ(Body(p)["error"]["column"], "y");
}

TEST(Service, UploadedCsvRoundTrips) {
  Service s;
  json spec = kSpec["config"];
  spec["kind"] = "synthetic";
  const auto ds = GenerateDataset(spec, 5);
  const auto r = Post(s, "/datasets/upload",
                      {{"csv", FormatCsv(ds)}, {"schema", SchemaToJson(ds.schema)}});
  ASSERT_EQ(r.status, 200) << r.body;
  const auto parsed = ParseCsv(FormatCsv(ds), ds.schema);
  EXPECT_EQ(Body(r)["result"]["checksum"], DatasetChecksum(parsed));
  EXPECT_EQ(Body(r)["result"]["rows"], 3000);
}

TEST(Service, FailedJobReportsItsError) {
  Service s;
  // All outcomes zero: the distilled effect is constant.
  const auto r0 = Post(s, "/datasets/upload",
                       {{"csv", "a,T,Y\n0,0,0\n1,1,0\n0,1,0\n1,0,0\n0,0,0\n1,1,0\n0,1,0\n1,0,0\n"
                                "0,0,0\n1,1,0\n"},
                        {"schema", {{"features", {{{"name", "a"}, {"kind", "binary"},
                                                   {"sensitive", true}}}},
                                    {"group_feature", "a"}}}});
  ASSERT_EQ(r0.status, 200) << r0.body;
  const auto r = Post(s, "/models/fit",
                      {{"dataset_id", Body(r0)["dataset_id"]}, {"kind", "linear"},
                       {"audit_fraction", 0.5}});
  ASSERT_EQ(r.status, 202);
  s.WaitForJobs();
  const auto job = Body(Get(s, "/jobs/" + Body(r)["job_id"].get<std::string>()));
  EXPECT_EQ(job["status"], "failed");
  EXPECT_TRUE(job["error"].contains("code"));
  EXPECT_EQ(Get(s, "/models/" + Body(r)["model_id"].get<std::string>() + "/shapes").status, 404);
}

class ServiceWithModel : public testing::Test {
 protected:
  void SetUp() override {
    dataset_ = Generate(service_);
    model_ = FitLinear(service_, dataset_);
  }
  Service service_;
  std::string dataset_;
  std::string model_;
};

TEST_F(ServiceWithModel, JobLifecycleAndShapes) {
  const auto r = Get(service_, "/models/" + model_ + "/shapes");
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(Body(r)["model_id"], model_);
  EXPECT_FALSE(Body(r)["result"].empty());
}

TEST_F(ServiceWithModel, InteractionsQuery) {
  auto r = Get(service_, "/models/" + model_ + "/interactions", {{"M", "5"}, {"K", "3"}});
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(Body(r)["reproduce"]["K"], 3);
  EXPECT_EQ(r.body, Get(service_, "/models/" + model_ + "/interactions",
                        {{"M", "5"}, {"K", "3"}}).body);
  r = Get(service_, "/models/" + model_ + "/interactions", {{"M", "five"}});
  EXPECT_EQ(r.status, 400);
  r = Get(service_, "/models/" + model_ + "/interactions", {{"M", "0"}});
  EXPECT_EQ(r.status, 400);
}

TEST_F(ServiceWithModel, ManifoldIsCachedAndByteIdentical) {
  const json req = {{"dataset_id", dataset_}, {"model_id", model_}, {"resolution", 9}};
  const auto a = Post(service_, "/manifold", req);
  const auto b = Post(service_, "/manifold", req);
  ASSERT_EQ(a.status, 200) << a.body;
  EXPECT_EQ(a.body, b.body);
  EXPECT_EQ(Body(a)["result"]["points"].size(), 81u);
  EXPECT_TRUE(Body(a)["next_offset"].is_null());

  // A fresh service computes the same bytes without the cache.
  Service other;
  const auto d = Generate(other);
  ASSERT_EQ(d, dataset_);
  const auto m = FitLinear(other, d);
  ASSERT_EQ(m, model_);
  EXPECT_EQ(Post(other, "/manifold", req).body, a.body);
}

TEST_F(ServiceWithModel, ManifoldPages) {
  const json req = {{"dataset_id", dataset_}, {"model_id", model_}, {"resolution", 5}};
  const auto full = Body(Post(service_, "/manifold", req));
  json points = json::array();
  json page_req = req;
  page_req["limit"] = 7;
  page_req["offset"] = 0;
  for (int guard = 0; guard < 10; ++guard) {
    const auto page = Body(Post(service_, "/manifold", page_req));
    ASSERT_TRUE(page.contains("result")) << page.dump();
    for (const auto& p : page["result"]["points"]) points.push_back(p);
    if (page["next_offset"].is_null()) break;
    page_req["offset"] = page["next_offset"];
  }
  EXPECT_EQ(points, full["result"]["points"]);
  page_req["offset"] = 25;
  EXPECT_EQ(Post(service_, "/manifold", page_req).status, 400);
}

TEST_F(ServiceWithModel, AdjustHandleFeedsEvaluate) {
  const auto a = Post(service_, "/adjust",
                      {{"model_id", model_},
                       {"adjustments", {{{"shape", "x3"}, {"alpha", 1.0}}}}});
  ASSERT_EQ(a.status, 200) << a.body;
  const auto score = Body(a)["score"];
  const auto adjustments = Body(a)["adjustments"];

  const auto via_handle = Post(service_, "/evaluate",
                               {{"dataset_id", dataset_},
                                {"policy", {{"score", score}}}});
  ASSERT_EQ(via_handle.status, 200) << via_handle.body;
  const auto direct = Post(service_, "/evaluate",
                           {{"dataset_id", dataset_}, {"model_id", model_},
                            {"policy", {{"score", {{"type", "adjusted"},
                                                   {"adjustments", adjustments}}}}}});
  ASSERT_EQ(direct.status, 200) << direct.body;
  EXPECT_EQ(Body(via_handle)["result"], Body(direct)["result"]);
  EXPECT_EQ(Body(via_handle)["reproduce"]["model_id"], model_);

  auto bad = Post(service_, "/adjust",
                  {{"model_id", model_}, {"adjustments", {{{"shape", "x3"}, {"alpha", 2.0}}}}});
  EXPECT_EQ(bad.status, 400);
  bad = Post(service_, "/evaluate",
             {{"dataset_id", dataset_},
              {"policy", {{"score", {{"type", "handle"}, {"handle", "a999"}}}}}});
  EXPECT_EQ(bad.status, 404);
}

TEST(Service, HttpRoundTrip) {
  Service s;
  const int port = s.ListenInBackground("127.0.0.1");
  httplib::Client client("127.0.0.1", port);
  auto res = client.Post("/datasets/generate", kSpec.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto direct = Post(s, "/evaluate", {{"dataset_id", "d1"}});
  res = client.Post("/evaluate", json{{"dataset_id", "d1"}}.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->body, direct.body);
  res = client.Get("/datasets");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body)["datasets"].size(), 1u);
  res = client.Get("/missing");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  s.Stop();
}

}  // namespace
}  // namespace fairlens
