#include <gtest/gtest.h>

#include <sstream>

#include "fairsel/api_server.hpp"
#include "fairsel/cli.hpp"
#include "support.hpp"

using namespace fairsel;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args, const std::string& input = "") {
  std::ostringstream out, err;
  std::istringstream in(input);
  int code = cli::run(args, cli::Streams{out, err, in});
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new support::TempDir;
    auto r = run({"synth", "--desk-scale", "--out", dir_->path("desk.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { delete dir_; }
  static std::string desk() { return dir_->path("desk.csv"); }
  static support::TempDir* dir_;
};

support::TempDir* CliTest::dir_ = nullptr;

}  // namespace

TEST_F(CliTest, BalanceEqualized) {
  auto r = run({"balance", "--input", desk(), "--mode", "equalized", "--k", "150", "--attribute", "race"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["total"], 150);
}

TEST_F(CliTest, BalanceCsvFormat) {
  auto r = run({"--format", "csv", "balance", "--input", desk(), "--recall", "0.05"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "group,n,positives,k_g,target_recall,achieved_recall,r_g");
}

TEST_F(CliTest, AuditZeroK) {
  auto r = run({"audit", "--input", desk(), "--k", "0"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["k"], 0);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({"audit", "--input", desk()}).code, 1);                               // missing --k
  EXPECT_EQ(run({"audit", "--input", desk(), "--k", "10", "--attribute", "sex"}).code, 1);
  EXPECT_EQ(run({"balance", "--input", desk(), "--mode", "proportional", "--k", "10"}).code, 1);
  EXPECT_EQ(run({"audit", "--input", dir_->path("missing.csv"), "--k", "10"}).code, 2);
  auto bad = dir_->file("bad.csv", "entity_id,score,label,race\na,0.5,1,x\nb,0.4,2,x\n");
  auto r = run({"audit", "--input", bad, "--k", "1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  EXPECT_EQ(run({"frobnicate"}).code, 1);
}

TEST_F(CliTest, ZeroPrevalenceReferenceIsDataError) {
  auto f = dir_->file("zero.csv", "entity_id,score,label,g\na,0.9,1,A\nb,0.8,0,Z\nc,0.1,0,Z\n");
  auto r = run({"balance", "--input", f, "--mode", "proportional", "--k", "1", "--reference-group", "Z"});
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, TreeFlagsAndInteractive) {
  auto r = run({"tree", "--nature", "assistive", "--scale", "small"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["metric"], "recall parity");

  auto i = run({"tree"}, "punitive\nintervened\n");
  ASSERT_EQ(i.code, 0) << i.err;
  EXPECT_EQ(nlohmann::json::parse(i.out)["metric"], "FDR parity");
  EXPECT_NE(i.err.find("punitive or assistive"), std::string::npos);

  EXPECT_EQ(run({"tree", "--nature", "assistive"}).code, 1);
}

TEST_F(CliTest, TemporalEvalOnFixtures) {
  auto r = run({"--format", "plotdata", "temporal-eval", "--inputs", support::fixture("precision_109_of_150.csv"),
                support::fixture("holdout_104_of_150.csv"), "--start", "2017-01-01", "--end", "2017-07-01",
                "--rule", "best-mean"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("2017-01-01,rf," + format_double(109.0 / 150.0)), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("2017-07-01,rf," + format_double(104.0 / 150.0)), std::string::npos) << r.out;
}

TEST_F(CliTest, SynthIsDeterministic) {
  auto a = run({"synth", "--desk-scale", "--seed", "5"});
  auto b = run({"synth", "--desk-scale", "--seed", "5"});
  auto c = run({"synth", "--desk-scale", "--seed", "6"});
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  EXPECT_EQ(support::slurp(desk()), run({"synth", "--desk-scale"}).out);
}

TEST_F(CliTest, OutputMatchesApi) {
  auto snap = api::make_snapshot(load_score_file(desk(), {}));
  auto api_body = [&](const std::string& method, const std::string& path, std::map<std::string, std::string> params,
                      const std::string& body = "") {
    auto res = api::handle_request(snap, api::Request{method, path, std::move(params), body});
    EXPECT_EQ(res.status, 200) << res.body;
    return res.body;
  };
  EXPECT_EQ(run({"--seed", "3", "audit", "--input", desk(), "--k", "150", "--tie-break", "seeded"}).out,
            api_body("GET", "/api/audit", {{"k", "150"}, {"tie_break", "seeded"}, {"seed", "3"}}));
  EXPECT_EQ(run({"balance", "--input", desk(), "--mode", "proportional", "--k", "150", "--reference-group", "white",
                 "--fit-to-budget"})
                .out,
            api_body("POST", "/api/balance", {},
                     R"({"mode": "proportional", "k": 150, "reference_group": "white", "fit_to_budget": true})"));
  EXPECT_EQ(run({"tradeoff", "--input", desk(), "--k", "150", "--reference-group", "white"}).out,
            api_body("GET", "/api/tradeoff", {{"k", "150"}, {"reference", "white"}}));
}
