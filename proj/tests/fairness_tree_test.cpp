#include <gtest/gtest.h>

#include <map>
#include <set>

#include "fairsel/fairness_tree.hpp"

using namespace fairsel;

namespace {

// Expected leaf per (nature, scale, focus); independent of the rule table.
std::string expected(const FairnessContext& c) {
  if (c.nature == Nature::punitive) {
    switch (*c.focus) {
      case Focus::everyone: return "FP/GS parity";
      case Focus::intervened_or_served: return "FDR parity";
      case Focus::actual_need_or_unwarranted: return "FPR parity";
      default: return "";
    }
  }
  if (c.scale == Scale::small_fraction_of_need) return "recall parity";
  switch (*c.focus) {
    case Focus::everyone: return "FN/GS parity";
    case Focus::not_intervened_or_unserved: return "FOR parity";
    case Focus::actual_need_or_unwarranted: return "FNR parity";
    default: return "";
  }
}

}  // namespace

TEST(Tree, EnumerationMatchesTable) {
  auto contexts = enumerate_contexts();
  EXPECT_EQ(contexts.size(), 11u);
  std::set<std::string> leaves;
  for (const auto& ctx : contexts) {
    auto rec = recommend_metric(ctx);
    EXPECT_EQ(std::string(to_string(rec.metric)), expected(ctx));
    leaves.insert(std::string(to_string(rec.metric)));
  }
  EXPECT_EQ(leaves.size(), 7u);
}

TEST(Tree, Examples) {
  FairnessContext small{Nature::assistive, Scale::small_fraction_of_need, Focus::actual_need_or_unwarranted};
  auto rec = recommend_metric(small);
  EXPECT_EQ(rec.metric, ParityMetric::recall);
  bool mentions_fnr = false, mentions_focus = false;
  for (const auto& c : rec.caveats) {
    mentions_fnr |= c.find("FNR") != std::string::npos;
    mentions_focus |= c.find("not used") != std::string::npos;
  }
  EXPECT_TRUE(mentions_fnr);
  EXPECT_TRUE(mentions_focus);

  EXPECT_EQ(recommend_metric({Nature::punitive, std::nullopt, Focus::intervened_or_served}).metric, ParityMetric::fdr);
  EXPECT_EQ(recommend_metric({Nature::assistive, Scale::substantial, Focus::actual_need_or_unwarranted}).metric,
            ParityMetric::fnr);
}

TEST(Tree, InvalidContexts) {
  EXPECT_THROW(recommend_metric({Nature::assistive, std::nullopt, Focus::everyone}), ValidationError);
  EXPECT_THROW(recommend_metric({Nature::punitive, Scale::substantial, Focus::everyone}), ValidationError);
  EXPECT_THROW(recommend_metric({Nature::punitive, std::nullopt, std::nullopt}), ValidationError);
  // Punitive programs have no rule for the not-intervened focus.
  EXPECT_THROW(recommend_metric({Nature::punitive, std::nullopt, Focus::not_intervened_or_unserved}), ValidationError);
  EXPECT_THROW(parse_focus("nobody"), ValidationError);
}

TEST(Tree, AliasesParse) {
  EXPECT_EQ(parse_focus("served"), Focus::intervened_or_served);
  EXPECT_EQ(parse_focus("unserved"), Focus::not_intervened_or_unserved);
  EXPECT_EQ(parse_focus("unwarranted"), Focus::actual_need_or_unwarranted);
  EXPECT_EQ(parse_scale("small"), Scale::small_fraction_of_need);
}

TEST(Tree, SelectionFractionHint) {
  RecommendOptions opt;
  opt.selection_fraction = 0.003;
  auto rec = recommend_metric({Nature::assistive, Scale::substantial, Focus::not_intervened_or_unserved},
                              RuleTable::standard(), opt);
  bool hinted = false;
  for (const auto& c : rec.caveats) hinted |= c.find("small program") != std::string::npos;
  EXPECT_TRUE(hinted);
}

TEST(Tree, RuleTableJsonRoundTrip) {
  auto table = RuleTable::from_json(RuleTable::standard().to_json());
  ASSERT_EQ(table.rules().size(), 7u);
  for (const auto& ctx : enumerate_contexts()) {
    EXPECT_EQ(recommend_metric(ctx, table).metric, recommend_metric(ctx).metric);
  }
  EXPECT_THROW(RuleTable::from_json(nlohmann::json::object()), ValidationError);
}
