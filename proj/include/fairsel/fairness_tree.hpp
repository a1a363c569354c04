#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fairsel/error.hpp"

namespace fairsel {

enum class Nature { punitive, assistive };
enum class Scale { small_fraction_of_need, substantial };
enum class Focus { everyone, intervened_or_served, not_intervened_or_unserved, actual_need_or_unwarranted };

enum class ParityMetric { fp_over_gs, fdr, fpr, recall, fn_over_gs, for_, fnr };

inline std::string_view to_string(Nature v) { return v == Nature::punitive ? "punitive" : "assistive"; }
inline std::string_view to_string(Scale v) { return v == Scale::small_fraction_of_need ? "small" : "substantial"; }
inline std::string_view to_string(Focus v) {
  switch (v) {
    case Focus::everyone: return "everyone";
    case Focus::intervened_or_served: return "intervened";
    case Focus::not_intervened_or_unserved: return "not-intervened";
    case Focus::actual_need_or_unwarranted: return "need";
  }
  return "?";
}
inline std::string_view to_string(ParityMetric m) {
  switch (m) {
    case ParityMetric::fp_over_gs: return "FP/GS parity";
    case ParityMetric::fdr: return "FDR parity";
    case ParityMetric::fpr: return "FPR parity";
    case ParityMetric::recall: return "recall parity";
    case ParityMetric::fn_over_gs: return "FN/GS parity";
    case ParityMetric::for_: return "FOR parity";
    case ParityMetric::fnr: return "FNR parity";
  }
  return "?";
}

inline Nature parse_nature(std::string_view s) {
  if (s == "punitive") return Nature::punitive;
  if (s == "assistive") return Nature::assistive;
  throw ValidationError("nature must be punitive or assistive, got '" + std::string(s) + "'");
}
inline Scale parse_scale(std::string_view s) {
  if (s == "small" || s == "small_fraction_of_need") return Scale::small_fraction_of_need;
  if (s == "substantial" || s == "large") return Scale::substantial;
  throw ValidationError("scale must be small or substantial, got '" + std::string(s) + "'");
}
inline Focus parse_focus(std::string_view s) {
  if (s == "everyone") return Focus::everyone;
  if (s == "intervened" || s == "served" || s == "intervened_or_served") return Focus::intervened_or_served;
  if (s == "not-intervened" || s == "unserved" || s == "not_intervened_or_unserved") {
    return Focus::not_intervened_or_unserved;
  }
  if (s == "need" || s == "unwarranted" || s == "actual-need" || s == "actual_need_or_unwarranted") {
    return Focus::actual_need_or_unwarranted;
  }
  throw ValidationError("unknown focus '" + std::string(s) + "'");
}
inline ParityMetric parse_parity_metric(std::string_view s) {
  for (auto m : {ParityMetric::fp_over_gs, ParityMetric::fdr, ParityMetric::fpr, ParityMetric::recall,
                 ParityMetric::fn_over_gs, ParityMetric::for_, ParityMetric::fnr}) {
    if (to_string(m) == s) return m;
  }
  throw ValidationError("unknown parity metric '" + std::string(s) + "'");
}

struct FairnessContext {
  Nature nature = Nature::assistive;
  std::optional<Scale> scale;   // required iff assistive
  std::optional<Focus> focus;   // may be omitted for small assistive programs
};

struct MetricRecommendation {
  ParityMetric metric = ParityMetric::recall;
  std::string rationale;
  std::vector<std::string> caveats;
};

// One leaf of the decision tree. Unset scale/focus match anything.
struct TreeRule {
  Nature nature;
  std::optional<Scale> scale;
  std::optional<Focus> focus;
  ParityMetric metric;
  std::string rationale;
  std::vector<std::string> caveats;

  bool matches(const FairnessContext& ctx) const {
    if (nature != ctx.nature) return false;
    if (scale && scale != ctx.scale) return false;
    if (focus && focus != ctx.focus) return false;
    return true;
  }
};

class RuleTable {
 public:
  explicit RuleTable(std::vector<TreeRule> rules) : rules_(std::move(rules)) {}

  const std::vector<TreeRule>& rules() const { return rules_; }

  // The shipped table: seven leaves.
  static const RuleTable& standard() {
    static const RuleTable table{std::vector<TreeRule>{
        {Nature::punitive, std::nullopt, Focus::everyone, ParityMetric::fp_over_gs,
         "punitive program, concern for everyone regardless of outcome: false positives relative to group size",
         {}},
        {Nature::punitive, std::nullopt, Focus::intervened_or_served, ParityMetric::fdr,
         "punitive program, concern for people on whom the intervention is taken", {}},
        {Nature::punitive, std::nullopt, Focus::actual_need_or_unwarranted, ParityMetric::fpr,
         "punitive program, concern for people for whom the intervention is not warranted", {}},
        {Nature::assistive, Scale::small_fraction_of_need, std::nullopt, ParityMetric::recall,
         "assistive program that can serve only a small fraction of need",
         {"FOR and FNR degenerate at small scale: FOR approaches group prevalence and FNR approaches 1 for every "
          "group",
          "recall parity is equivalent to FNR parity here but gives more meaningful ratios between groups"}},
        {Nature::assistive, Scale::substantial, Focus::everyone, ParityMetric::fn_over_gs,
         "larger assistive program, concern for everyone regardless of need: false negatives relative to group size",
         {}},
        {Nature::assistive, Scale::substantial, Focus::not_intervened_or_unserved, ParityMetric::for_,
         "larger assistive program, concern for people not receiving assistance", {}},
        {Nature::assistive, Scale::substantial, Focus::actual_need_or_unwarranted, ParityMetric::fnr,
         "larger assistive program, concern for people with actual need", {}},
    }};
    return table;
  }

  // {"rules": [{"nature", "scale"?, "focus"?, "metric", "rationale", "caveats"?}]}
  static RuleTable from_json(const nlohmann::json& j) {
    if (!j.contains("rules") || !j["rules"].is_array()) throw ValidationError("rule table needs a 'rules' array");
    std::vector<TreeRule> rules;
    for (const auto& r : j["rules"]) {
      TreeRule rule{parse_nature(r.at("nature").get<std::string>()), std::nullopt, std::nullopt,
                    parse_parity_metric(r.at("metric").get<std::string>()), r.value("rationale", ""), {}};
      if (r.contains("scale") && !r["scale"].is_null()) rule.scale = parse_scale(r["scale"].get<std::string>());
      if (r.contains("focus") && !r["focus"].is_null()) rule.focus = parse_focus(r["focus"].get<std::string>());
      if (r.contains("caveats")) rule.caveats = r["caveats"].get<std::vector<std::string>>();
      rules.push_back(std::move(rule));
    }
    return RuleTable(std::move(rules));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["rules"] = nlohmann::json::array();
    for (const auto& r : rules_) {
      nlohmann::json rj;
      rj["nature"] = to_string(r.nature);
      rj["scale"] = r.scale ? nlohmann::json(to_string(*r.scale)) : nlohmann::json(nullptr);
      rj["focus"] = r.focus ? nlohmann::json(to_string(*r.focus)) : nlohmann::json(nullptr);
      rj["metric"] = to_string(r.metric);
      rj["rationale"] = r.rationale;
      rj["caveats"] = r.caveats;
      j["rules"].push_back(std::move(rj));
    }
    return j;
  }

 private:
  std::vector<TreeRule> rules_;
};

inline void validate(const FairnessContext& ctx) {
  if (ctx.nature == Nature::assistive && !ctx.scale) {
    throw ValidationError("assistive programs need a scale (small or substantial)");
  }
  if (ctx.nature == Nature::punitive && ctx.scale) {
    throw ValidationError("scale applies only to assistive programs");
  }
  const bool small = ctx.nature == Nature::assistive && ctx.scale == Scale::small_fraction_of_need;
  if (!small && !ctx.focus) throw ValidationError("a focus is required for this kind of program");
}

// All valid contexts: punitive x 3 foci, assistive-small x (no focus + 4 foci), assistive-substantial x 3 foci.
inline std::vector<FairnessContext> enumerate_contexts() {
  std::vector<FairnessContext> out;
  for (auto f : {Focus::everyone, Focus::intervened_or_served, Focus::actual_need_or_unwarranted}) {
    out.push_back({Nature::punitive, std::nullopt, f});
  }
  out.push_back({Nature::assistive, Scale::small_fraction_of_need, std::nullopt});
  for (auto f : {Focus::everyone, Focus::intervened_or_served, Focus::not_intervened_or_unserved,
                 Focus::actual_need_or_unwarranted}) {
    out.push_back({Nature::assistive, Scale::small_fraction_of_need, f});
  }
  for (auto f : {Focus::everyone, Focus::not_intervened_or_unserved, Focus::actual_need_or_unwarranted}) {
    out.push_back({Nature::assistive, Scale::substantial, f});
  }
  return out;
}

struct RecommendOptions {
  std::optional<double> selection_fraction;  // k/N from an accompanying audit
  double small_program_hint = 0.05;
};

inline MetricRecommendation recommend_metric(const FairnessContext& ctx, const RuleTable& table = RuleTable::standard(),
                                             const RecommendOptions& options = {}) {
  validate(ctx);
  for (const auto& rule : table.rules()) {
    if (!rule.matches(ctx)) continue;
    MetricRecommendation rec{rule.metric, rule.rationale, rule.caveats};
    if (ctx.nature == Nature::assistive && ctx.scale == Scale::small_fraction_of_need && ctx.focus) {
      rec.caveats.push_back("focus '" + std::string(to_string(*ctx.focus)) +
                            "' is not used: the false negative rate is close to 1 for every group at this scale");
    }
    if (options.selection_fraction) {
      const double f = *options.selection_fraction;
      if (f <= options.small_program_hint && ctx.nature == Nature::assistive &&
          ctx.scale == Scale::substantial) {
        rec.caveats.push_back("the audited selection covers " + std::to_string(f * 100.0) +
                              "% of the cohort; consider treating this as a small program (recall parity)");
      } else if (f <= options.small_program_hint &&
                 (rule.metric == ParityMetric::for_ || rule.metric == ParityMetric::fnr)) {
        rec.caveats.push_back("at this selection fraction FOR tracks prevalence and FNR is near 1");
      }
    }
    rec.caveats.push_back("weighing trade-offs across several metrics is often worthwhile");
    return rec;
  }
  throw ValidationError("no rule covers this context");
}

inline nlohmann::json to_json(const MetricRecommendation& rec, const FairnessContext& ctx) {
  nlohmann::json j;
  j["context"] = {{"nature", to_string(ctx.nature)},
                  {"scale", ctx.scale ? nlohmann::json(to_string(*ctx.scale)) : nlohmann::json(nullptr)},
                  {"focus", ctx.focus ? nlohmann::json(to_string(*ctx.focus)) : nlohmann::json(nullptr)}};
  j["metric"] = to_string(rec.metric);
  j["rationale"] = rec.rationale;
  j["caveats"] = rec.caveats;
  return j;
}

}  // namespace fairsel
