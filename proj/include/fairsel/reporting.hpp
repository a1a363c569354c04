#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fairsel/data_model.hpp"
#include "fairsel/error.hpp"
#include "fairsel/group_metrics.hpp"
#include "fairsel/recall_balancer.hpp"
#include "fairsel/temporal_eval.hpp"

namespace fairsel {

enum class OutputFormat { json, csv, plotdata };

inline OutputFormat parse_format(std::string_view s) {
  if (s == "json") return OutputFormat::json;
  if (s == "csv") return OutputFormat::csv;
  if (s == "plotdata") return OutputFormat::plotdata;
  throw ValidationError("unknown format '" + std::string(s) + "' (json, csv or plotdata)");
}

enum class ScenarioLabel {
  top_k_unadjusted,
  expanded_equalized,
  expanded_proportional,
  current_scale_equalized,
  current_scale_proportional
};

inline std::string_view to_string(ScenarioLabel l) {
  switch (l) {
    case ScenarioLabel::top_k_unadjusted: return "top_k_unadjusted";
    case ScenarioLabel::expanded_equalized: return "expanded_equalized";
    case ScenarioLabel::expanded_proportional: return "expanded_proportional";
    case ScenarioLabel::current_scale_equalized: return "current_scale_equalized";
    case ScenarioLabel::current_scale_proportional: return "current_scale_proportional";
  }
  return "?";
}

struct ScenarioVariant {
  SelectionPlan plan;
  AuditReport audit;
  std::optional<double> overall_precision;
  std::size_t total = 0;
};

struct TradeoffScenario {
  ScenarioLabel label;
  ScenarioVariant result;
  std::string note;
  std::optional<ScenarioVariant> trimmed;  // fixed-size scenarios report both quota conventions
};

struct TradeoffMenu {
  std::string attribute;
  std::size_t k = 0;
  std::string reference_group;
  TieBreak tie;
  std::vector<TradeoffScenario> scenarios;

  const TradeoffScenario& scenario(ScenarioLabel label) const {
    for (const auto& s : scenarios) {
      if (s.label == label) return s;
    }
    throw ValidationError("scenario missing");
  }
};

struct TradeoffOptions {
  TieBreak tie;
  double step = kDefaultStep;
  SearchStrategy search = SearchStrategy::fixed_step;
};

namespace detail {

inline ScenarioVariant evaluate_plan(const Cohort& cohort, std::string_view attribute,
                                     const std::vector<RollingRecallCurve>& curves, SelectionPlan plan,
                                     const std::string& reference, std::string label) {
  ScenarioVariant v;
  AuditOptions ao;
  ao.reference_group = reference;
  v.audit = audit_selection(cohort, attribute, plan_mask(plan, curves, cohort.size()), ao, std::move(label));
  v.overall_precision = v.audit.overall_precision;
  v.total = plan.total;
  v.plan = std::move(plan);
  return v;
}

// Keep every top-K member and extend each group to at least its target quota.
inline SelectionPlan extend_over(SelectionPlan target, const SelectionPlan& top,
                                 const std::vector<RollingRecallCurve>& curves) {
  for (std::size_t g = 0; g < curves.size(); ++g) {
    target.groups[g].k = std::max(target.groups[g].k, top.groups[g].k);
  }
  finish_plan(target, curves);
  target.requested_k.reset();
  return target;
}

}  // namespace detail

inline TradeoffMenu build_tradeoff_menu(const Cohort& cohort, std::string_view attribute, std::size_t K,
                                        std::string_view reference_group, const TradeoffOptions& options = {}) {
  if (K > cohort.size()) throw ValidationError("K exceeds cohort size");
  auto curves = build_curves(cohort, attribute, options.tie);
  detail::index_of(curves, reference_group);

  TradeoffMenu menu;
  menu.attribute = std::string(attribute);
  menu.k = K;
  menu.reference_group = std::string(reference_group);
  menu.tie = options.tie;
  const std::string ref(reference_group);
  auto add = [&](ScenarioLabel label, SelectionPlan plan, std::string note) {
    plan.spec.tie = options.tie;
    TradeoffScenario s{label, detail::evaluate_plan(cohort, attribute, curves, std::move(plan), ref,
                                                    std::string(to_string(label))),
                       std::move(note), std::nullopt};
    menu.scenarios.push_back(std::move(s));
    return menu.scenarios.size() - 1;
  };
  auto add_trimmed = [&](std::size_t index) {
    auto& s = menu.scenarios[index];
    auto trimmed = trim_trailing_negatives(s.result.plan, curves);
    s.trimmed = detail::evaluate_plan(cohort, attribute, curves, std::move(trimmed), ref,
                                      std::string(to_string(s.label)) + "_trimmed");
  };

  // (1) unadjusted top-K
  auto top = top_k_plan(cohort, curves, K, options.tie);
  double best_recall = 0.0;
  for (std::size_t g = 0; g < curves.size(); ++g) {
    if (curves[g].has_positives()) best_recall = std::max(best_recall, top.groups[g].achieved_recall);
  }
  const double ref_recall = top.quota(ref).achieved_recall;
  add(ScenarioLabel::top_k_unadjusted, top, "highest-scoring K cohort-wide, no adjustment");

  // (2) expanded, equalized to the best group recall at top-K
  {
    auto eq = trim_trailing_negatives(balance_equalized_by_recall(curves, best_recall), curves);
    auto plan = detail::extend_over(std::move(eq), top, curves);
    add(ScenarioLabel::expanded_equalized, std::move(plan),
        "top-K plus per-group extension to the highest group recall at top-K (" + format_double(best_recall) + ")");
  }
  // (3) expanded, proportional to prevalence with the reference group's top-K recall
  {
    auto prop = trim_trailing_negatives(balance_proportional_by_ref_recall(curves, ref, ref_recall), curves);
    auto plan = detail::extend_over(std::move(prop), top, curves);
    add(ScenarioLabel::expanded_proportional, std::move(plan),
        "top-K plus per-group extension to prevalence-scaled targets; reference recall " + format_double(ref_recall));
  }
  // (4) equalized at fixed size K
  {
    auto i = add(ScenarioLabel::current_scale_equalized, balance_equalized_by_size(curves, K),
                 "first K entries of the merged (recall, depth) order");
    add_trimmed(i);
  }
  // (5) proportional at fixed size K
  {
    ProportionalSearchOptions po;
    po.step = options.step;
    po.search = options.search;
    po.fit_to_budget = true;
    auto i = add(ScenarioLabel::current_scale_proportional, balance_proportional_by_size(curves, ref, K, po),
                 "prevalence-proportional search, cut back to exactly K along the crossing order");
    add_trimmed(i);
  }
  return menu;
}

inline nlohmann::json to_json(const ScenarioVariant& v) {
  nlohmann::json j;
  j["total"] = v.total;
  j["overall_precision"] = detail::opt(v.overall_precision);
  j["plan"] = to_json(v.plan);
  j["audit"] = to_json(v.audit);
  return j;
}

inline nlohmann::json to_json(const TradeoffMenu& menu) {
  nlohmann::json j;
  j["attribute"] = menu.attribute;
  j["k"] = menu.k;
  j["reference_group"] = menu.reference_group;
  j["tie_break"] = menu.tie.name();
  j["seed"] = menu.tie.seed;
  const auto& base = menu.scenario(ScenarioLabel::top_k_unadjusted).result.overall_precision;
  j["scenarios"] = nlohmann::json::array();
  for (const auto& s : menu.scenarios) {
    nlohmann::json sj = to_json(s.result);
    sj["label"] = to_string(s.label);
    sj["note"] = s.note;
    sj["precision_delta_vs_top_k"] =
        (base && s.result.overall_precision) ? nlohmann::json(*s.result.overall_precision - *base) : nlohmann::json(nullptr);
    sj["trimmed"] = s.trimmed ? to_json(*s.trimmed) : nlohmann::json(nullptr);
    j["scenarios"].push_back(std::move(sj));
  }
  return j;
}

// Plan plus the audit of its realized selection: the payload of `balance`.
inline nlohmann::json balance_document(const Cohort& cohort, std::string_view attribute, const BalanceSpec& spec,
                                       std::optional<std::string> audit_reference = std::nullopt) {
  auto curves = build_curves(cohort, attribute, spec.tie);
  auto plan = balance(curves, spec);
  AuditOptions ao;
  ao.reference_group = audit_reference ? audit_reference : spec.reference_group;
  auto audit = audit_selection(cohort, attribute, plan_mask(plan, curves, cohort.size()), ao,
                               std::string(to_string(spec.mode)));
  auto j = to_json(plan);
  j["audit"] = to_json(audit);
  return j;
}

// Per-K series of overall precision and per-group recall under the unadjusted ranking.
inline nlohmann::json sweep_top_k(const Cohort& cohort, std::string_view attribute, std::size_t kmin, std::size_t kmax,
                                  std::size_t stride, const TieBreak& tie = {}) {
  if (stride == 0) throw ValidationError("stride must be positive");
  if (kmin > kmax) throw ValidationError("kmin exceeds kmax");
  if (kmax > cohort.size()) throw ValidationError("kmax exceeds cohort size");
  const std::size_t a = cohort.attribute_index(attribute);
  auto order = ranked_indices(cohort, tie);
  auto parts = partition_by_group(cohort, attribute);
  auto stats = group_stats(cohort, parts);
  std::map<std::string, std::size_t> idx;
  for (std::size_t g = 0; g < stats.size(); ++g) idx[stats[g].group] = g;

  std::vector<std::size_t> tp(stats.size(), 0), sel(stats.size(), 0);
  std::size_t tp_all = 0, depth = 0;
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t k = kmin;; k += stride) {
    for (; depth < k; ++depth) {
      const auto& e = cohort.examples[order[depth]];
      auto g = idx[e.group_values[a]];
      ++sel[g];
      tp[g] += static_cast<std::size_t>(e.label);
      tp_all += static_cast<std::size_t>(e.label);
    }
    nlohmann::json p;
    p["k"] = k;
    p["precision"] = detail::opt(detail::ratio(tp_all, k));
    p["recall"] = nlohmann::json::object();
    p["counts"] = nlohmann::json::object();
    for (std::size_t g = 0; g < stats.size(); ++g) {
      p["recall"][stats[g].group] = detail::opt(detail::ratio(tp[g], stats[g].positives));
      p["counts"][stats[g].group] = sel[g];
    }
    points.push_back(std::move(p));
    if (kmax - k < stride) break;
  }
  return {{"attribute", std::string(attribute)}, {"tie_break", tie.name()}, {"seed", tie.seed}, {"points", points}};
}

inline nlohmann::json dataset_summary(const Cohort& cohort) {
  nlohmann::json j;
  j["source"] = cohort.provenance.source;
  j["rows"] = cohort.size();
  std::size_t positives = 0;
  for (const auto& e : cohort.examples) positives += static_cast<std::size_t>(e.label);
  j["positives"] = positives;
  j["prevalence"] = cohort.size() ? static_cast<double>(positives) / static_cast<double>(cohort.size()) : 0.0;
  j["attributes"] = nlohmann::json::array();
  for (const auto& attr : cohort.attributes) {
    auto stats = group_stats(cohort, partition_by_group(cohort, attr));
    nlohmann::json aj;
    aj["name"] = attr;
    aj["default_reference_group"] = default_reference_group(stats);
    aj["groups"] = nlohmann::json::array();
    for (const auto& s : stats) {
      aj["groups"].push_back({{"group", s.group}, {"n", s.n}, {"positives", s.positives}, {"prevalence", s.prevalence}});
    }
    j["attributes"].push_back(std::move(aj));
  }
  return j;
}

// ---- rendering ------------------------------------------------------------

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

namespace detail {

inline std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline void plot_row(std::ostream& out, std::string_view scenario, std::string_view group, std::string_view metric,
                     const std::optional<double>& value) {
  csv::write_row(out, {std::string(scenario), std::string(group), std::string(metric), cell(value)});
}

inline void audit_plot_rows(std::ostream& out, const AuditReport& r, std::string_view scenario) {
  for (const auto& g : r.groups) {
    for (auto m : kAllMetrics) plot_row(out, scenario, g.stats.group, metric_name(m), g.metrics.get(m));
    plot_row(out, scenario, g.stats.group, "count", static_cast<double>(g.confusion.selected()));
    plot_row(out, scenario, g.stats.group, "prevalence", g.stats.prevalence);
  }
  plot_row(out, scenario, "all", "precision", r.overall_precision);
  plot_row(out, scenario, "all", "count", static_cast<double>(r.k));
}

inline void plan_plot_rows(std::ostream& out, const SelectionPlan& p, std::string_view scenario) {
  for (const auto& q : p.groups) {
    plot_row(out, scenario, q.group, "target_recall", q.target_recall);
  }
}

}  // namespace detail

inline std::string render(const AuditReport& r, OutputFormat format) {
  if (format == OutputFormat::json) return dump(to_json(r));
  std::ostringstream out;
  if (format == OutputFormat::plotdata) {
    csv::write_row(out, {"scenario", "group", "metric", "value"});
    detail::audit_plot_rows(out, r, r.selection);
    return out.str();
  }
  std::vector<std::string> header{"group", "n", "positives", "prevalence", "tp", "fp", "fn", "tn", "selected"};
  for (auto m : kAllMetrics) header.emplace_back(metric_name(m));
  for (auto m : kAllMetrics) header.push_back("ratio_" + std::string(metric_name(m)));
  csv::write_row(out, header);
  for (const auto& g : r.groups) {
    std::vector<std::string> row{g.stats.group,
                                 std::to_string(g.stats.n),
                                 std::to_string(g.stats.positives),
                                 format_double(g.stats.prevalence),
                                 std::to_string(g.confusion.tp),
                                 std::to_string(g.confusion.fp),
                                 std::to_string(g.confusion.fn),
                                 std::to_string(g.confusion.tn),
                                 std::to_string(g.confusion.selected())};
    for (auto m : kAllMetrics) row.push_back(detail::cell(g.metrics.get(m)));
    for (auto m : kAllMetrics) row.push_back(detail::cell(g.ratios.at(std::string(metric_name(m)))));
    csv::write_row(out, row);
  }
  return out.str();
}

inline std::string render_plan_csv(const SelectionPlan& p) {
  std::ostringstream out;
  csv::write_row(out, {"group", "n", "positives", "k_g", "target_recall", "achieved_recall", "r_g"});
  for (const auto& q : p.groups) {
    csv::write_row(out, {q.group, std::to_string(q.n), std::to_string(q.positives), std::to_string(q.k),
                         detail::cell(q.target_recall), format_double(q.achieved_recall), detail::cell(q.ratio)});
  }
  return out.str();
}

inline std::string render(const TradeoffMenu& menu, OutputFormat format) {
  if (format == OutputFormat::json) return dump(to_json(menu));
  std::ostringstream out;
  if (format == OutputFormat::plotdata) {
    csv::write_row(out, {"scenario", "group", "metric", "value"});
    for (const auto& s : menu.scenarios) {
      detail::audit_plot_rows(out, s.result.audit, to_string(s.label));
      detail::plan_plot_rows(out, s.result.plan, to_string(s.label));
      if (s.trimmed) {
        const std::string label = std::string(to_string(s.label)) + "_trimmed";
        detail::audit_plot_rows(out, s.trimmed->audit, label);
        detail::plan_plot_rows(out, s.trimmed->plan, label);
      }
    }
    return out.str();
  }
  csv::write_row(out, {"scenario", "group", "k_g", "target_recall", "achieved_recall", "total", "overall_precision"});
  auto rows = [&](std::string_view label, const ScenarioVariant& v) {
    for (const auto& q : v.plan.groups) {
      csv::write_row(out, {std::string(label), q.group, std::to_string(q.k), detail::cell(q.target_recall),
                           format_double(q.achieved_recall), std::to_string(v.total),
                           detail::cell(v.overall_precision)});
    }
  };
  for (const auto& s : menu.scenarios) {
    rows(to_string(s.label), s.result);
    if (s.trimmed) rows(std::string(to_string(s.label)) + "_trimmed", *s.trimmed);
  }
  return out.str();
}

inline std::string render(const TemporalResult& r, OutputFormat format) {
  if (format == OutputFormat::json) return dump(to_json(r));
  std::ostringstream out;
  if (format == OutputFormat::plotdata) {
    csv::write_row(out, {"modeling_date", "model_id", "precision"});
    for (const auto& e : r.evaluations) {
      csv::write_row(out, {format_date(e.modeling_date), e.model_id, format_double(e.precision_at_k)});
    }
    return out.str();
  }
  csv::write_row(out, {"model_id", "score", "mean", "stddev", "mean_regret", "n_splits"});
  for (const auto& m : r.ranking) {
    csv::write_row(out, {m.model_id, format_double(m.score), format_double(m.mean), format_double(m.stddev),
                         format_double(m.mean_regret), std::to_string(m.n_splits)});
  }
  return out.str();
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
  out.flush();
  if (!out) throw DataError("failed writing '" + path + "'");
}

}  // namespace fairsel
