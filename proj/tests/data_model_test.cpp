#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "fairsel/data_model.hpp"
#include "fairsel/synth_data.hpp"
#include "support.hpp"

using namespace fairsel;

namespace {

Cohort parse(const std::string& text, IngestConfig cfg = {}) {
  std::istringstream in(text);
  return parse_score_file(in, cfg, "input.csv");
}

std::string error_of(const std::string& text, IngestConfig cfg = {}) {
  try {
    parse(text, cfg);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Ingest, ThreeRowFile) {
  auto c = parse("entity_id,score,label,race\nx,0.9,1,a\ny,0.5,0,a\nz,0.1,1,b\n");
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.attributes, std::vector<std::string>{"race"});
  EXPECT_EQ(c.summary.category_counts.at("race").size(), 2u);
  EXPECT_DOUBLE_EQ(c.examples[0].score, 0.9);
  EXPECT_EQ(c.examples[2].label, 1);
  EXPECT_EQ(c.examples[2].group_values[0], "b");
  EXPECT_EQ(c.provenance.source, "input.csv");
  EXPECT_FALSE(c.provenance.ingested_at.empty());
}

TEST(Ingest, EmptyCategoryBecomesUnknown) {
  auto c = parse("entity_id,score,label,race\nx,0.9,1,\n");
  EXPECT_EQ(c.examples[0].group_values[0], "unknown");
}

TEST(Ingest, BadLabelCitesLine) {
  const std::string text = "entity_id,score,label,race\na,0.1,0,x\nb,0.2,1,x\nc,0.3,0,x\nd,0.4,2,x\n";
  auto msg = error_of(text);
  EXPECT_NE(msg.find("line 5"), std::string::npos) << msg;
}

TEST(Ingest, RowErrors) {
  EXPECT_NE(error_of("").find("empty file"), std::string::npos);
  EXPECT_NE(error_of("entity_id,label\na,1\n").find("missing required column 'score'"), std::string::npos);
  EXPECT_NE(error_of("entity_id,score,label\na,0.1\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of("entity_id,score,label\na,nan,1\n").find("malformed score"), std::string::npos);
  EXPECT_NE(error_of("entity_id,score,label\na,inf,1\n").find("malformed score"), std::string::npos);
  EXPECT_NE(error_of("entity_id,score,label\na,abc,1\n").find("malformed score"), std::string::npos);
  EXPECT_NE(error_of("entity_id,score,label\n,0.5,1\n").find("empty entity id"), std::string::npos);
  EXPECT_NE(error_of("entity_id,score,label\n").find("no data rows"), std::string::npos);
  EXPECT_NE(error_of("entity_id,score,label,as_of_date\na,0.5,1,2017-13-01\n").find("malformed date"),
            std::string::npos);
}

TEST(Ingest, DuplicateKeyNamesBothLines) {
  auto msg = error_of("entity_id,score,label\na,0.1,0\nb,0.2,1\na,0.3,1\n");
  EXPECT_NE(msg.find("lines 2 and 4"), std::string::npos) << msg;
  // Same id under another model or date is a different key.
  auto c = parse("entity_id,score,label,model_id\na,0.1,0,m1\na,0.3,1,m2\n");
  EXPECT_EQ(c.size(), 2u);
}

TEST(Ingest, QuotedFieldsAndCustomColumns) {
  IngestConfig cfg;
  cfg.id_col = "pid";
  cfg.score_col = "risk";
  cfg.label_col = "y";
  cfg.attribute_cols = std::vector<std::string>{"race"};
  auto c = parse("pid,risk,y,race,other\n\"a,1\",0.5,1,\"two \"\"words\"\"\",z\n", cfg);
  EXPECT_EQ(c.examples[0].entity_id, "a,1");
  EXPECT_EQ(c.examples[0].group_values[0], "two \"words\"");
  EXPECT_EQ(c.attributes.size(), 1u);
}

TEST(Ingest, ConfigJsonRoundTrip) {
  IngestConfig cfg;
  cfg.score_col = "risk";
  cfg.attribute_cols = std::vector<std::string>{"race", "sex"};
  cfg.date_col = "as_of";
  auto back = IngestConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.score_col, "risk");
  EXPECT_EQ(back.attribute_cols, cfg.attribute_cols);
  EXPECT_EQ(back.date_col, cfg.date_col);
}

TEST(Partition, CountsAndIdentity) {
  auto c = parse("entity_id,score,label,race\nx,0.9,1,a\ny,0.5,0,a\nz,0.1,1,b\n");
  auto parts = partition_by_group(c, "race");
  EXPECT_EQ(parts.at("a").size(), 2u);
  EXPECT_EQ(parts.at("b").size(), 1u);
  EXPECT_THROW(partition_by_group(c, "sex"), ValidationError);

  auto single = parse("entity_id,score,label,race\nx,0.9,1,a\ny,0.5,0,a\n");
  auto one = partition_by_group(single, "race");
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.at("a"), (std::vector<std::size_t>{0, 1}));
}

TEST(Partition, SynthCohortIsExhaustiveAndDisjoint) {
  auto c = generate_population(desk_scale_spec());
  auto parts = partition_by_group(c, "race");
  std::size_t total = 0;
  std::set<std::size_t> seen;
  for (const auto& [g, members] : parts) {
    total += members.size();
    for (auto i : members) {
      EXPECT_TRUE(seen.insert(i).second);
      EXPECT_EQ(c.examples[i].group_values[0], g);
    }
  }
  EXPECT_EQ(total, 50000u);
  EXPECT_EQ(seen.size(), 50000u);
}

TEST(Partition, RandomCohortsExhaustiveAndDisjoint) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    Cohort c;
    c.attributes = {"g"};
    std::size_t n = 1 + rng() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      c.examples.push_back({"e" + std::to_string(i), 0.5, 0, {std::string(1, char('a' + rng() % 4))}, {}, {}});
    }
    auto parts = partition_by_group(c, "g");
    std::vector<int> hits(n, 0);
    for (const auto& [g, members] : parts) {
      for (auto i : members) ++hits[i];
    }
    EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
}

TEST(ScoreFile, RoundTripIsExact) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int t = 0; t < 50; ++t) {
    Cohort c;
    c.attributes = {"race", "sex"};
    for (int i = 0; i < 40; ++i) {
      ScoredExample e;
      e.entity_id = "id," + std::to_string(i) + (i % 3 ? "" : "\"q\"");
      e.score = i % 5 ? u(rng) : std::ldexp(u(rng), -900);
      e.label = static_cast<int>(rng() % 2);
      e.group_values = {i % 2 ? "a b" : "c,d", "x"};
      if (t % 2) e.as_of_date = Date{std::chrono::year{2012 + i % 5}, std::chrono::month{static_cast<unsigned>(1 + i % 12)}, std::chrono::day{1}};
      if (t % 3) e.model_id = "m" + std::to_string(i % 2);
      c.examples.push_back(e);
    }
    std::ostringstream out;
    write_score_file(c, out);
    std::istringstream in(out.str());
    auto back = parse_score_file(in, ingest_config_for(c));
    ASSERT_EQ(back.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(back.examples[i], c.examples[i]);
    EXPECT_EQ(back.attributes, c.attributes);
  }
}

TEST(Util, AddMonthsClamps) {
  using namespace std::chrono;
  EXPECT_EQ(add_months(Date{year{2012}, January, day{31}}, 1), (Date{year{2012}, February, day{29}}));
  EXPECT_EQ(add_months(Date{year{2013}, January, day{31}}, 1), (Date{year{2013}, February, day{28}}));
  EXPECT_EQ(add_months(Date{year{2012}, January, day{1}}, 6), (Date{year{2012}, July, day{1}}));
  EXPECT_EQ(add_months(Date{year{2012}, November, day{15}}, 3), (Date{year{2013}, February, day{15}}));
}

TEST(Util, DoubleFormatRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 5e-324, 1.7976931348623157e308, -0.0, 123456789.125}) {
    EXPECT_EQ(*parse_double(format_double(v)), v);
  }
  EXPECT_FALSE(parse_double("1.0x"));
  EXPECT_FALSE(parse_double(""));
}
