#include <gtest/gtest.h>

#include <thread>

#include "fixtures.hpp"
#include "httplib.h"
#include "sqlinsight/service.hpp"

using namespace sqlinsight;
using testing_support::kDemoQuestion;

namespace {

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    db_ = testing_support::SeededDb("service");
    pipeline_ = testing_support::DemoPipeline(dir_.path(), db_);
    service_ = std::make_unique<Service>(*pipeline_);
    port_ = service_->Bind("127.0.0.1", 0);
    thread_ = std::thread([this] { service_->Listen(); });
    httplib::Client probe("127.0.0.1", port_);
    for (int i = 0; i < 100 && !probe.Get("/healthz"); ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  void TearDown() override {
    service_->Stop();
    thread_.join();
  }

  httplib::Client Client() {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }

  nlohmann::json Post(const std::string& path, const nlohmann::json& body, int expected_status) {
    auto res = Client().Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expected_status) << res->body;
    return nlohmann::json::parse(res->body);
  }

  testing_support::TempDir dir_;
  DatabaseHandle db_ = DatabaseHandle::InMemory("service_placeholder");
  std::unique_ptr<Pipeline> pipeline_;
  std::unique_ptr<Service> service_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST_F(ServiceTest, Healthz) {
  auto res = Client().Get("/healthz");
  ASSERT_TRUE(res);
  auto doc = nlohmann::json::parse(res->body);
  EXPECT_EQ(doc["status"], "ok");
  EXPECT_EQ(doc["knowledge_version"], pipeline_->version());
}

TEST_F(ServiceTest, QueryMatchesLibraryCall) {
  auto over_http = Post("/v1/query", {{"nl", kDemoQuestion}}, 200);
  auto direct = testing_support::DemoPipeline({}, db_)->Query(kDemoQuestion).ToJson(false);
  auto stripped = over_http;
  stripped.erase("request_id");
  stripped.erase("created_at");
  stripped["timings"].erase("stages_ms");
  EXPECT_EQ(stripped, nlohmann::json::parse(direct.dump()));

  auto res = Client().Get("/v1/requests/" + over_http["request_id"].get<std::string>());
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(nlohmann::json::parse(res->body)["final_sql"], over_http["sql"]);
}

TEST_F(ServiceTest, FeedbackStatusCodes) {
  auto q = Post("/v1/query", {{"nl", kDemoQuestion}}, 200);
  const std::string id = q["request_id"];
  Post("/v1/feedback", {{"request_id", "req_unknown"}, {"verdict", "accept"}}, 404);
  Post("/v1/feedback", {{"request_id", id}, {"verdict", "reject"}, {"corrected_sql", "DELETE FROM X"}}, 422);
  Post("/v1/feedback", {{"request_id", id}, {"verdict", "maybe"}}, 400);
  auto v0 = pipeline_->version();
  auto ok = Post("/v1/feedback", {{"request_id", id}, {"verdict", "accept"}}, 200);
  EXPECT_EQ(ok["knowledge_version"], v0 + 1);
  Post("/v1/feedback", {{"request_id", id}, {"verdict", "accept"}}, 409);

  auto summary = nlohmann::json::parse(Client().Get("/v1/knowledge/summary")->body);
  EXPECT_EQ(summary["version"], v0 + 1);
  EXPECT_EQ(summary["examples"], 4);
  EXPECT_EQ(summary["tables"], (nlohmann::json{"SPORTS_FINANCIALS", "SPORTS_VIEWERSHIP"}));
  EXPECT_EQ(Client().Get("/v1/requests/req_nope")->status, 404);
  Post("/v1/query", {{"question", "x"}}, 400);
}

TEST_F(ServiceTest, ConcurrentQueries) {
  std::vector<std::thread> workers;
  std::vector<nlohmann::json> results(8);
  for (int i = 0; i < 8; ++i) {
    workers.emplace_back([&, i] {
      auto res = Client().Post("/v1/query", nlohmann::json{{"nl", kDemoQuestion}}.dump(), "application/json");
      if (res && res->status == 200) results[i] = nlohmann::json::parse(res->body);
    });
  }
  for (auto& w : workers) w.join();
  std::set<std::string> ids;
  for (const auto& r : results) {
    ASSERT_TRUE(r.is_object());
    EXPECT_EQ(r["status"], "ok");
    EXPECT_EQ(r["sql"], results[0]["sql"]);
    ids.insert(r["request_id"].get<std::string>());
  }
  EXPECT_EQ(ids.size(), 8u);
}
