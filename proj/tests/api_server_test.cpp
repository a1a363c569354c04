#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "fairsel/api_server.hpp"
#include "fairsel/synth_data.hpp"
#include "support.hpp"

using namespace fairsel;
using api::Request;

namespace {

const api::DatasetSnapshot& snapshot() {
  static const api::DatasetSnapshot snap = api::make_snapshot(generate_population(desk_scale_spec()));
  return snap;
}

api::Response get(const std::string& path, std::map<std::string, std::string> params = {}) {
  return api::handle_request(snapshot(), Request{"GET", path, std::move(params), ""});
}

api::Response post(const std::string& path, const std::string& body) {
  return api::handle_request(snapshot(), Request{"POST", path, {}, body});
}

}  // namespace

TEST(Api, Dataset) {
  auto r = get("/api/dataset");
  EXPECT_EQ(r.status, 200);
  auto j = nlohmann::json::parse(r.body);
  EXPECT_EQ(j["rows"], 50000);
  EXPECT_FALSE(j["version"].get<std::string>().empty());
}

TEST(Api, AuditMatchesLibrary) {
  auto r = get("/api/audit", {{"attribute", "race"}, {"k", "150"}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body, render(audit_top_k(*snapshot().cohort, "race", 150), OutputFormat::json));
  auto zero = get("/api/audit", {{"k", "0"}});
  EXPECT_EQ(zero.status, 200);
  EXPECT_EQ(nlohmann::json::parse(zero.body)["k"], 0);
}

TEST(Api, BalanceEqualized) {
  auto r = post("/api/balance", R"({"mode": "equalized", "k": 150})");
  ASSERT_EQ(r.status, 200) << r.body;
  auto j = nlohmann::json::parse(r.body);
  EXPECT_EQ(j["total"], 150);
  EXPECT_TRUE(j.contains("audit"));
  auto nested = post("/api/balance", R"({"mode": "equalized", "constraint": {"k": 150}})");
  EXPECT_EQ(nested.body, r.body);
}

TEST(Api, BalanceProportional) {
  auto r = post("/api/balance",
                R"({"mode": "proportional", "k": 150, "reference_group": "white", "search": "exact", "fit_to_budget": true})");
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(nlohmann::json::parse(r.body)["total"], 150);
}

TEST(Api, ErrorStatuses) {
  EXPECT_EQ(post("/api/balance", "{not json").status, 400);
  EXPECT_EQ(post("/api/balance", R"({"mode": "equalized"})").status, 400);
  EXPECT_EQ(post("/api/balance", R"({"mode": "equalized", "k": 5, "recall": 0.5})").status, 400);
  EXPECT_EQ(post("/api/balance", R"({"mode": "sideways", "k": 5})").status, 400);
  EXPECT_EQ(get("/api/audit", {{"k", "abc"}}).status, 400);
  EXPECT_EQ(get("/api/audit", {{"k", "5"}, {"attribute", "sex"}}).status, 400);
  EXPECT_EQ(get("/api/audit").status, 400);
  EXPECT_EQ(get("/api/nothing").status, 404);
  EXPECT_EQ(get("/api/balance").status, 405);
  EXPECT_EQ(post("/api/audit", "").status, 405);
}

TEST(Api, ZeroPrevalenceReferenceIs422) {
  auto c = support::labels_cohort({{"A", {1, 0, 1}}, {"Z", {0, 0}}});
  auto snap = api::make_snapshot(c);
  auto r = api::handle_request(snap, Request{"POST", "/api/balance", {},
                                             R"({"mode": "proportional", "k": 2, "reference_group": "Z"})"});
  EXPECT_EQ(r.status, 422);
  EXPECT_NE(nlohmann::json::parse(r.body)["error"].get<std::string>().find("Z"), std::string::npos);
}

TEST(Api, TradeoffAndCurve) {
  auto r = get("/api/tradeoff", {{"k", "150"}, {"reference", "white"}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(nlohmann::json::parse(r.body)["scenarios"].size(), 5u);
  auto curve = get("/api/curve", {{"kmin", "10"}, {"kmax", "30"}, {"stride", "10"}});
  ASSERT_EQ(curve.status, 200);
  EXPECT_EQ(nlohmann::json::parse(curve.body)["points"].size(), 3u);
  EXPECT_EQ(get("/api/curve", {{"stride", "0"}}).status, 400);
}

TEST(Api, RepeatedRequestsAreIdentical) {
  const std::string body = R"({"mode": "equalized", "k": 150, "tie_break": "seeded", "seed": 4})";
  EXPECT_EQ(post("/api/balance", body).body, post("/api/balance", body).body);
  std::map<std::string, std::string> p{{"k", "150"}, {"tie_break", "seeded"}, {"seed", "4"}};
  EXPECT_EQ(get("/api/tradeoff", p).body, get("/api/tradeoff", p).body);
}

TEST(Api, ServesOverHttp) {
  httplib::Server server;
  api::ServeOptions opts;
  auto shared = std::make_shared<const api::DatasetSnapshot>(api::make_snapshot(support::labels_cohort(
      {{"A", {1, 0, 1, 0}}, {"B", {1, 1, 0, 0}}})));
  api::install_routes(server, shared, opts);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto audit = client.Get("/api/audit?k=3");
  ASSERT_TRUE(audit);
  EXPECT_EQ(audit->status, 200);
  EXPECT_EQ(audit->get_header_value("Access-Control-Allow-Origin"), "*");
  EXPECT_EQ(audit->body, api::handle_request(*shared, Request{"GET", "/api/audit", {{"k", "3"}}, ""}).body);

  auto bal = client.Post("/api/balance", R"({"mode": "equalized", "k": 3})", "application/json");
  ASSERT_TRUE(bal);
  EXPECT_EQ(bal->status, 200);
  EXPECT_EQ(nlohmann::json::parse(bal->body)["total"], 3);

  auto missing = client.Get("/api/nope");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  server.stop();
  t.join();
}
