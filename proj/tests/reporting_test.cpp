#include <gtest/gtest.h>

#include <sstream>

#include "fairsel/fairsel.hpp"
#include "support.hpp"

using namespace fairsel;

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::istringstream in(text);
  csv::Reader reader(in);
  csv::Record rec;
  std::vector<std::vector<std::string>> rows;
  while (reader.next(rec)) rows.push_back(rec.fields);
  return rows;
}

Cohort desk() {
  static const Cohort c = generate_population(desk_scale_spec());
  return c;
}

}  // namespace

TEST(AuditJson, Schema) {
  auto j = to_json(audit_top_k(desk(), "race", 150));
  for (const char* key : {"attribute", "selection", "k", "reference_group", "groups", "overall_precision",
                          "recall_disparity"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  ASSERT_EQ(j["groups"].size(), 5u);
  const auto& g = j["groups"][0];
  for (const char* key : {"group", "n", "positives", "prevalence", "tp", "fp", "fn", "tn", "metrics", "ratios"}) {
    EXPECT_TRUE(g.contains(key)) << key;
  }
  for (auto m : kAllMetrics) {
    EXPECT_TRUE(g["metrics"].contains(std::string(metric_name(m))));
    EXPECT_TRUE(g["ratios"].contains(std::string(metric_name(m))));
  }
  EXPECT_EQ(j["reference_group"], "hispanic");
}

TEST(AuditJson, AbsentRatesAreNull) {
  auto c = support::labels_cohort({{"A", {1, 0}}, {"B", {0, 0}}});
  auto j = to_json(audit_top_k(c, "g", 0));
  EXPECT_TRUE(j["overall_precision"].is_null());
  EXPECT_TRUE(j["groups"][1]["metrics"]["recall"].is_null());
}

TEST(Render, AuditCsvAndPlotdata) {
  auto r = audit_top_k(desk(), "race", 150);
  auto rows = read_csv(render(r, OutputFormat::csv));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0][0], "group");
  EXPECT_EQ(rows[0].size(), 9u + 16u);
  auto plot = read_csv(render(r, OutputFormat::plotdata));
  EXPECT_EQ(plot[0], (std::vector<std::string>{"scenario", "group", "metric", "value"}));
  for (const auto& row : plot) EXPECT_EQ(row.size(), 4u);
}

TEST(Render, TradeoffPlotdataColumns) {
  auto menu = build_tradeoff_menu(desk(), "race", 150, "white");
  auto plot = read_csv(render(menu, OutputFormat::plotdata));
  EXPECT_EQ(plot[0], (std::vector<std::string>{"scenario", "group", "metric", "value"}));
  std::set<std::string> scenarios;
  for (std::size_t i = 1; i < plot.size(); ++i) scenarios.insert(plot[i][0]);
  EXPECT_TRUE(scenarios.count("top_k_unadjusted"));
  EXPECT_TRUE(scenarios.count("current_scale_proportional_trimmed"));
  EXPECT_EQ(scenarios.size(), 7u);
}

TEST(Render, TemporalPlotdata) {
  IngestConfig ic;
  ic.attribute_cols = std::vector<std::string>{};
  auto c = load_score_file(support::fixture("precision_109_of_150.csv"), ic);
  TemporalConfig cfg;
  cfg.start = cfg.end = *parse_date("2017-01-01");
  auto result = run_temporal_eval(c, cfg, SelectionRule::parse("best-mean", std::nullopt));
  auto rows = read_csv(render(result, OutputFormat::plotdata));
  EXPECT_EQ(rows[0], (std::vector<std::string>{"modeling_date", "model_id", "precision"}));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][0], "2017-01-01");
  EXPECT_EQ(rows[1][1], "rf");
  EXPECT_EQ(*parse_double(rows[1][2]), 109.0 / 150.0);
}

TEST(Render, NumbersRoundTripExactly) {
  auto menu = build_tradeoff_menu(desk(), "race", 150, "white");
  auto text = render(menu, OutputFormat::json);
  auto j = nlohmann::json::parse(text);
  for (std::size_t i = 0; i < menu.scenarios.size(); ++i) {
    const auto& s = menu.scenarios[i];
    EXPECT_EQ(j["scenarios"][i]["overall_precision"].get<double>(), *s.result.overall_precision);
    for (std::size_t g = 0; g < s.result.plan.groups.size(); ++g) {
      const auto& q = s.result.plan.groups[g];
      EXPECT_EQ(j["scenarios"][i]["plan"]["groups"][g]["achieved_recall"].get<double>(), q.achieved_recall);
      if (q.target_recall) {
        EXPECT_EQ(j["scenarios"][i]["plan"]["groups"][g]["target_recall"].get<double>(), *q.target_recall);
      }
    }
  }
  auto rows = read_csv(render(menu, OutputFormat::csv));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][0] == "top_k_unadjusted") {
      EXPECT_EQ(*parse_double(rows[i][6]),
                *menu.scenario(ScenarioLabel::top_k_unadjusted).result.overall_precision);
    }
  }
}

TEST(Tradeoff, DeskScaleShape) {
  auto menu = build_tradeoff_menu(desk(), "race", 150, "white");
  ASSERT_EQ(menu.scenarios.size(), 5u);
  const double top = *menu.scenario(ScenarioLabel::top_k_unadjusted).result.overall_precision;
  for (auto label : {ScenarioLabel::current_scale_equalized, ScenarioLabel::current_scale_proportional}) {
    const auto& s = menu.scenario(label);
    EXPECT_EQ(s.result.total, 150u);
    EXPECT_LE(*s.result.overall_precision, top);
    ASSERT_TRUE(s.trimmed);
    EXPECT_LE(s.trimmed->total, 150u);
  }
  for (auto label : {ScenarioLabel::expanded_equalized, ScenarioLabel::expanded_proportional}) {
    EXPECT_GT(menu.scenario(label).result.total, 150u);
  }
  auto j = to_json(menu);
  EXPECT_EQ(j["scenarios"][0]["precision_delta_vs_top_k"].get<double>(), 0.0);
}

TEST(Tradeoff, BalancedCohortScenariosCoincide) {
  const std::vector<int> labels{1, 0, 1, 1, 0, 0, 1, 0, 0, 1, 0, 0};
  auto c = support::labels_cohort({{"A", labels}, {"B", labels}});
  for (std::size_t K : {2u, 4u, 6u, 10u}) {
    auto menu = build_tradeoff_menu(c, "g", K, "A");
    for (const auto& s : menu.scenarios) {
      EXPECT_EQ(s.result.total, K) << to_string(s.label) << " K=" << K;
      EXPECT_EQ(s.result.plan.k("A"), s.result.plan.k("B"));
      EXPECT_EQ(s.result.plan.quota("A").achieved_recall, s.result.plan.quota("B").achieved_recall);
    }
  }
}

TEST(Summary, DatasetSummary) {
  auto j = dataset_summary(desk());
  EXPECT_EQ(j["rows"], 50000);
  EXPECT_EQ(j["positives"], 2200);
  EXPECT_EQ(j["attributes"][0]["groups"].size(), 5u);
}

TEST(Sweep, MatchesAuditAtEachK) {
  auto c = desk();
  auto j = sweep_top_k(c, "race", 50, 250, 100);
  ASSERT_EQ(j["points"].size(), 3u);
  for (const auto& p : j["points"]) {
    auto r = audit_top_k(c, "race", p["k"].get<std::size_t>());
    EXPECT_EQ(p["precision"].get<double>(), *r.overall_precision);
    EXPECT_EQ(p["recall"]["black"].get<double>(), *r.group("black").metrics.recall);
  }
}

TEST(Write, UnwritablePathIsDataError) {
  EXPECT_THROW(write_text("/nonexistent-dir/x/y.json", "{}"), DataError);
}
