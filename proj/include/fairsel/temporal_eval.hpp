#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairsel/data_model.hpp"
#include "fairsel/error.hpp"
#include "fairsel/ranking.hpp"
#include "fairsel/util.hpp"

namespace fairsel {

struct TemporalConfig {
  Date start;
  Date end;
  int interval_months = 6;
  int label_window_months = 6;
  std::size_t k = 150;

  void validate() const {
    if (!start.ok() || !end.ok()) throw ValidationError("invalid start or end date");
    if (std::chrono::sys_days{start} > std::chrono::sys_days{end}) throw ValidationError("start date is after end date");
    if (interval_months <= 0) throw ValidationError("interval must be a positive number of months");
    if (label_window_months <= 0) throw ValidationError("label window must be a positive number of months");
    if (k == 0) throw ValidationError("k must be positive");
  }
};

// Labels for a split come from [modeling_date, window_end); the window never precedes the modeling date.
class TemporalSplit {
 public:
  TemporalSplit(Date modeling_date, int label_window_months)
      : modeling_date_(modeling_date), window_end_(add_months(modeling_date, label_window_months)) {
    if (label_window_months <= 0) throw ValidationError("label window must be positive");
  }

  const Date& modeling_date() const { return modeling_date_; }
  const Date& window_start() const { return modeling_date_; }
  const Date& window_end() const { return window_end_; }

 private:
  Date modeling_date_;
  Date window_end_;
};

inline std::vector<TemporalSplit> generate_splits(const TemporalConfig& cfg) {
  cfg.validate();
  std::vector<TemporalSplit> splits;
  const auto last = std::chrono::sys_days{cfg.end};
  for (int step = 0;; ++step) {
    // Step from the start each time so day clamping does not accumulate.
    Date d = add_months(cfg.start, step * cfg.interval_months);
    if (std::chrono::sys_days{d} > last) break;
    splits.emplace_back(d, cfg.label_window_months);
  }
  return splits;
}

struct SplitEvaluation {
  std::string model_id;
  Date modeling_date;
  double precision_at_k = 0.0;
  std::size_t positives_in_top_k = 0;
  std::size_t n_evaluated = 0;
  std::size_t k_effective = 0;
};

// `examples` are one model's scores as of the split's modeling date.
inline SplitEvaluation evaluate_split(const std::vector<ScoredExample>& examples, const TemporalSplit& split,
                                      std::size_t k, bool lenient = false, std::string model_id = {}) {
  if (examples.empty()) throw DataError("no scores to evaluate for " + format_date(split.modeling_date()));
  if (k == 0) throw ValidationError("k must be positive");
  for (const auto& e : examples) {
    if (!e.as_of_date || *e.as_of_date != split.modeling_date()) {
      throw DataError("entity '" + e.entity_id + "' is dated " +
                      (e.as_of_date ? format_date(*e.as_of_date) : std::string("(none)")) +
                      ", not the modeling date " + format_date(split.modeling_date()));
    }
  }
  if (examples.size() < k && !lenient) {
    throw DataError("only " + std::to_string(examples.size()) + " scores for " + format_date(split.modeling_date()) +
                    " but k=" + std::to_string(k) + " (use lenient mode to evaluate all)");
  }
  const std::size_t k_eff = std::min(k, examples.size());
  std::vector<const ScoredExample*> ptrs;
  ptrs.reserve(examples.size());
  for (const auto& e : examples) ptrs.push_back(&e);
  RankOrder order{};
  std::nth_element(ptrs.begin(), ptrs.begin() + static_cast<std::ptrdiff_t>(k_eff - 1), ptrs.end(),
                   [&](const ScoredExample* a, const ScoredExample* b) { return order(*a, *b); });
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k_eff; ++i) hits += static_cast<std::size_t>(ptrs[i]->label);

  SplitEvaluation ev;
  ev.model_id = model_id.empty() ? examples.front().model_id.value_or("") : std::move(model_id);
  ev.modeling_date = split.modeling_date();
  ev.positives_in_top_k = hits;
  ev.n_evaluated = examples.size();
  ev.k_effective = k_eff;
  ev.precision_at_k = static_cast<double>(hits) / static_cast<double>(k_eff);
  return ev;
}

struct SelectionRule {
  enum class Kind { mean_minus_lambda_stddev, best_mean, min_regret };
  Kind kind = Kind::mean_minus_lambda_stddev;
  double lambda = 1.0;

  static SelectionRule parse(std::string_view name, std::optional<double> lambda) {
    SelectionRule r;
    if (name == "mean-minus-lambda-stddev" || name == "mean_minus_lambda_stddev") {
      r.kind = Kind::mean_minus_lambda_stddev;
      r.lambda = lambda.value_or(1.0);
      if (!(r.lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
    } else if (name == "best-mean" || name == "best_mean") {
      if (lambda) throw ValidationError("lambda applies only to mean-minus-lambda-stddev");
      r.kind = Kind::best_mean;
    } else if (name == "min-regret" || name == "min_regret") {
      if (lambda) throw ValidationError("lambda applies only to mean-minus-lambda-stddev");
      r.kind = Kind::min_regret;
    } else {
      throw ValidationError("unknown selection rule '" + std::string(name) + "'");
    }
    return r;
  }

  std::string name() const {
    switch (kind) {
      case Kind::mean_minus_lambda_stddev: return "mean_minus_lambda_stddev";
      case Kind::best_mean: return "best_mean";
      case Kind::min_regret: return "min_regret";
    }
    return "?";
  }
};

struct ModelRanking {
  std::string model_id;
  double score = 0.0;  // min_regret: mean regret (lower is better); otherwise higher is better
  double mean = 0.0;
  double stddev = 0.0;  // population estimator
  double mean_regret = 0.0;
  std::size_t n_splits = 0;
};

inline std::vector<ModelRanking> select_model(const std::vector<SplitEvaluation>& evaluations,
                                              const SelectionRule& rule) {
  if (evaluations.empty()) throw ValidationError("no evaluations to rank");
  std::map<std::string, std::vector<const SplitEvaluation*>> by_model;
  std::map<std::chrono::sys_days, double> best_at;
  for (const auto& ev : evaluations) {
    by_model[ev.model_id].push_back(&ev);
    auto day = std::chrono::sys_days{ev.modeling_date};
    auto [it, inserted] = best_at.emplace(day, ev.precision_at_k);
    if (!inserted) it->second = std::max(it->second, ev.precision_at_k);
  }
  std::vector<ModelRanking> out;
  for (const auto& [model, evs] : by_model) {
    if (rule.kind == SelectionRule::Kind::mean_minus_lambda_stddev && evs.size() < 2) {
      throw ValidationError("model '" + model + "' needs at least 2 evaluations for a stddev-based rule");
    }
    ModelRanking r;
    r.model_id = model;
    r.n_splits = evs.size();
    double sum = 0.0, regret = 0.0;
    for (const auto* ev : evs) {
      sum += ev->precision_at_k;
      regret += best_at[std::chrono::sys_days{ev->modeling_date}] - ev->precision_at_k;
    }
    const double n = static_cast<double>(evs.size());
    r.mean = sum / n;
    double ss = 0.0;
    for (const auto* ev : evs) ss += (ev->precision_at_k - r.mean) * (ev->precision_at_k - r.mean);
    r.stddev = std::sqrt(ss / n);
    r.mean_regret = regret / n;
    switch (rule.kind) {
      case SelectionRule::Kind::mean_minus_lambda_stddev: r.score = r.mean - rule.lambda * r.stddev; break;
      case SelectionRule::Kind::best_mean: r.score = r.mean; break;
      case SelectionRule::Kind::min_regret: r.score = r.mean_regret; break;
    }
    out.push_back(std::move(r));
  }
  const bool ascending = rule.kind == SelectionRule::Kind::min_regret;
  std::stable_sort(out.begin(), out.end(), [&](const ModelRanking& a, const ModelRanking& b) {
    if (a.score != b.score) return ascending ? a.score < b.score : a.score > b.score;
    return a.model_id < b.model_id;
  });
  return out;
}

struct TemporalResult {
  TemporalConfig config;
  std::vector<TemporalSplit> splits;
  std::vector<SplitEvaluation> evaluations;
  std::vector<ModelRanking> ranking;
  SelectionRule rule;
  std::vector<std::string> missing;       // "model@date" pairs without rows
  std::size_t overlapping_entities = 0;   // entities scored at more than one modeling date
};

// Evaluates every model at every split using the rows dated at that split.
inline TemporalResult run_temporal_eval(const Cohort& scores, const TemporalConfig& cfg, const SelectionRule& rule,
                                        bool lenient = false) {
  TemporalResult result;
  result.config = cfg;
  result.rule = rule;
  result.splits = generate_splits(cfg);

  std::map<std::string, std::map<std::chrono::sys_days, std::vector<ScoredExample>>> grouped;
  std::map<std::string, std::set<std::chrono::sys_days>> entity_dates;
  for (const auto& e : scores.examples) {
    if (!e.as_of_date) throw DataError("entity '" + e.entity_id + "' has no as_of_date");
    auto day = std::chrono::sys_days{*e.as_of_date};
    grouped[e.model_id.value_or("")][day].push_back(e);
    entity_dates[e.entity_id].insert(day);
  }
  for (const auto& [id, dates] : entity_dates) result.overlapping_entities += dates.size() > 1 ? 1 : 0;

  for (const auto& [model, by_date] : grouped) {
    for (const auto& split : result.splits) {
      auto it = by_date.find(std::chrono::sys_days{split.modeling_date()});
      if (it == by_date.end()) {
        result.missing.push_back(model + "@" + format_date(split.modeling_date()));
        continue;
      }
      result.evaluations.push_back(evaluate_split(it->second, split, cfg.k, lenient, model));
    }
  }
  if (result.evaluations.empty()) throw DataError("no scores fall on any modeling date");
  result.ranking = select_model(result.evaluations, rule);
  return result;
}

inline nlohmann::json to_json(const TemporalResult& r) {
  using nlohmann::json;
  json j;
  j["config"] = {{"start", format_date(r.config.start)},
                 {"end", format_date(r.config.end)},
                 {"interval_months", r.config.interval_months},
                 {"label_window_months", r.config.label_window_months},
                 {"k", r.config.k},
                 {"rule", r.rule.name()},
                 {"lambda", r.rule.kind == SelectionRule::Kind::mean_minus_lambda_stddev ? json(r.rule.lambda)
                                                                                          : json(nullptr)}};
  j["splits"] = json::array();
  for (const auto& s : r.splits) {
    j["splits"].push_back({{"modeling_date", format_date(s.modeling_date())},
                           {"window_start", format_date(s.window_start())},
                           {"window_end", format_date(s.window_end())}});
  }
  j["evaluations"] = json::array();
  for (const auto& e : r.evaluations) {
    j["evaluations"].push_back({{"model_id", e.model_id},
                                {"modeling_date", format_date(e.modeling_date)},
                                {"precision_at_k", e.precision_at_k},
                                {"positives_in_top_k", e.positives_in_top_k},
                                {"n_evaluated", e.n_evaluated},
                                {"k_effective", e.k_effective}});
  }
  j["ranking"] = json::array();
  for (const auto& m : r.ranking) {
    j["ranking"].push_back({{"model_id", m.model_id},
                            {"score", m.score},
                            {"mean", m.mean},
                            {"stddev", m.stddev},
                            {"mean_regret", m.mean_regret},
                            {"n_splits", m.n_splits}});
  }
  j["missing"] = r.missing;
  j["overlapping_entities"] = r.overlapping_entities;
  return j;
}

}  // namespace fairsel
