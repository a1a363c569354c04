#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "fairsel/data_model.hpp"
#include "fairsel/error.hpp"
#include "fairsel/ranking.hpp"

namespace fairsel {

struct GroupStats {
  std::string group;
  std::size_t n = 0;
  std::size_t positives = 0;
  double prevalence = 0.0;  // 0 when n == 0

  friend bool operator==(const GroupStats&, const GroupStats&) = default;
};

inline GroupStats make_group_stats(std::string group, std::size_t n, std::size_t positives) {
  return {std::move(group), n, positives, n ? static_cast<double>(positives) / static_cast<double>(n) : 0.0};
}

// Selected = predicted positive.
struct GroupConfusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t n() const { return tp + fp + fn + tn; }
  std::size_t positives() const { return tp + fn; }
  std::size_t selected() const { return tp + fp; }

  friend bool operator==(const GroupConfusion&, const GroupConfusion&) = default;
};

enum class Metric { recall, precision, fdr, fpr, fnr, for_, fp_over_group_size, fn_over_group_size };

inline constexpr std::array<Metric, 8> kAllMetrics{Metric::recall, Metric::precision, Metric::fdr,
                                                    Metric::fpr,    Metric::fnr,       Metric::for_,
                                                    Metric::fp_over_group_size, Metric::fn_over_group_size};

inline std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::recall: return "recall";
    case Metric::precision: return "precision";
    case Metric::fdr: return "fdr";
    case Metric::fpr: return "fpr";
    case Metric::fnr: return "fnr";
    case Metric::for_: return "for";
    case Metric::fp_over_group_size: return "fp_over_group_size";
    case Metric::fn_over_group_size: return "fn_over_group_size";
  }
  return "?";
}

// Rates with a zero denominator are absent, never 0 or NaN.
struct GroupMetricSet {
  std::optional<double> recall, precision, fdr, fpr, fnr, for_, fp_over_group_size, fn_over_group_size;
  std::size_t selected = 0;

  std::optional<double> get(Metric m) const {
    switch (m) {
      case Metric::recall: return recall;
      case Metric::precision: return precision;
      case Metric::fdr: return fdr;
      case Metric::fpr: return fpr;
      case Metric::fnr: return fnr;
      case Metric::for_: return for_;
      case Metric::fp_over_group_size: return fp_over_group_size;
      case Metric::fn_over_group_size: return fn_over_group_size;
    }
    return std::nullopt;
  }
};

namespace detail {
inline std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace detail

inline GroupMetricSet metrics_from_confusion(const GroupConfusion& c) {
  GroupMetricSet m;
  const std::size_t n = c.n();
  m.recall = detail::ratio(c.tp, c.tp + c.fn);
  m.fnr = detail::ratio(c.fn, c.tp + c.fn);
  m.precision = detail::ratio(c.tp, c.tp + c.fp);
  m.fdr = detail::ratio(c.fp, c.tp + c.fp);
  m.fpr = detail::ratio(c.fp, c.fp + c.tn);
  m.for_ = detail::ratio(c.fn, c.fn + c.tn);
  m.fp_over_group_size = detail::ratio(c.fp, n);
  m.fn_over_group_size = detail::ratio(c.fn, n);
  m.selected = c.selected();
  return m;
}

inline std::vector<GroupStats> group_stats(const Cohort& cohort, const GroupPartition& partitions) {
  std::vector<GroupStats> out;
  out.reserve(partitions.size());
  for (const auto& [group, members] : partitions) {
    std::size_t positives = 0;
    for (auto i : members) positives += static_cast<std::size_t>(cohort.examples[i].label);
    out.push_back(make_group_stats(group, members.size(), positives));
  }
  return out;
}

// `selected` is a mask over cohort.examples.
inline GroupConfusion confusion_from_mask(const Cohort& cohort, const std::vector<std::size_t>& members,
                                          const std::vector<char>& selected) {
  GroupConfusion c;
  for (auto i : members) {
    const bool pos = cohort.examples[i].label == 1;
    if (selected[i]) (pos ? c.tp : c.fp)++;
    else (pos ? c.fn : c.tn)++;
  }
  return c;
}

inline GroupConfusion confusion_at_selection(const Cohort& cohort, const std::vector<std::size_t>& group,
                                             const std::unordered_set<std::string>& selected_ids) {
  GroupConfusion c;
  std::unordered_set<std::string> matched;
  for (auto i : group) {
    const auto& e = cohort.examples[i];
    const bool sel = selected_ids.count(e.entity_id) > 0;
    if (sel) matched.insert(e.entity_id);
    const bool pos = e.label == 1;
    if (sel) (pos ? c.tp : c.fp)++;
    else (pos ? c.fn : c.tn)++;
  }
  if (matched.size() != selected_ids.size()) {
    for (const auto& id : selected_ids) {
      if (!matched.count(id)) throw ValidationError("selected id '" + id + "' is not a member of the group");
    }
  }
  return c;
}

struct GroupAudit {
  GroupStats stats;
  GroupConfusion confusion;
  GroupMetricSet metrics;
  std::map<std::string, std::optional<double>> ratios;  // metric name -> group / reference
};

struct RecallDisparity {
  std::string max_group;
  std::string min_group;
  std::optional<double> ratio;  // max recall / min recall; absent when the minimum is 0
  bool flagged = false;
};

struct AuditReport {
  std::string attribute;
  std::string selection;  // "top_k" or the plan that produced the selection
  std::size_t k = 0;      // number selected
  std::string reference_group;
  std::vector<GroupAudit> groups;
  std::optional<double> overall_precision;
  RecallDisparity recall_disparity;

  const GroupAudit& group(std::string_view name) const {
    for (const auto& g : groups) {
      if (g.stats.group == name) return g;
    }
    throw ValidationError("no group '" + std::string(name) + "' in audit");
  }
};

struct AuditOptions {
  std::optional<std::string> reference_group;  // default: largest group by n
  double disparity_threshold = 1.25;           // flag when max/min recall reaches this
};

inline std::string default_reference_group(const std::vector<GroupStats>& stats) {
  if (stats.empty()) throw DataError("no groups");
  const GroupStats* best = &stats.front();
  for (const auto& s : stats) {
    if (s.n > best->n || (s.n == best->n && s.group < best->group)) best = &s;
  }
  return best->group;
}

// Audit of an arbitrary selection (mask over cohort.examples).
inline AuditReport audit_selection(const Cohort& cohort, std::string_view attribute, const std::vector<char>& selected,
                                   const AuditOptions& options = {}, std::string selection_label = "selection") {
  if (selected.size() != cohort.size()) throw ValidationError("selection mask does not match cohort size");
  auto parts = partition_by_group(cohort, attribute);
  auto stats = group_stats(cohort, parts);

  AuditReport report;
  report.attribute = std::string(attribute);
  report.selection = std::move(selection_label);
  report.reference_group = options.reference_group.value_or(default_reference_group(stats));
  if (!parts.count(report.reference_group)) {
    throw ValidationError("reference group '" + report.reference_group + "' not present for attribute '" +
                          report.attribute + "'");
  }

  std::size_t idx = 0;
  std::size_t tp_total = 0, sel_total = 0;
  for (const auto& [group, members] : parts) {
    GroupAudit ga;
    ga.stats = stats[idx++];
    ga.confusion = confusion_from_mask(cohort, members, selected);
    ga.metrics = metrics_from_confusion(ga.confusion);
    tp_total += ga.confusion.tp;
    sel_total += ga.confusion.selected();
    report.groups.push_back(std::move(ga));
  }
  report.k = sel_total;
  report.overall_precision = detail::ratio(tp_total, sel_total);

  const auto& ref = report.group(report.reference_group).metrics;
  for (auto& ga : report.groups) {
    const bool is_ref = ga.stats.group == report.reference_group;
    for (auto m : kAllMetrics) {
      auto value = ga.metrics.get(m);
      auto base = ref.get(m);
      std::optional<double> r;
      if (is_ref) {
        if (value) r = 1.0;
      } else if (value && base && *base != 0.0) {
        r = *value / *base;
      }
      ga.ratios[std::string(metric_name(m))] = r;
    }
  }

  const GroupAudit* hi = nullptr;
  const GroupAudit* lo = nullptr;
  for (const auto& ga : report.groups) {
    if (!ga.metrics.recall) continue;
    if (!hi || *ga.metrics.recall > *hi->metrics.recall) hi = &ga;
    if (!lo || *ga.metrics.recall < *lo->metrics.recall) lo = &ga;
  }
  if (hi && lo) {
    report.recall_disparity.max_group = hi->stats.group;
    report.recall_disparity.min_group = lo->stats.group;
    const double top = *hi->metrics.recall, bottom = *lo->metrics.recall;
    if (bottom > 0.0) {
      report.recall_disparity.ratio = top / bottom;
      report.recall_disparity.flagged = top / bottom >= options.disparity_threshold;
    } else {
      report.recall_disparity.flagged = top > 0.0;
    }
  }
  return report;
}

// Top-k cohort-wide selection mask under the rank order.
inline std::vector<char> top_k_mask(const Cohort& cohort, std::size_t k, const TieBreak& tie) {
  if (k > cohort.size()) {
    throw ValidationError("k=" + std::to_string(k) + " exceeds cohort size " + std::to_string(cohort.size()));
  }
  std::vector<char> mask(cohort.size(), 0);
  if (k == 0) return mask;
  std::vector<std::size_t> idx(cohort.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  RankOrder order{tie};
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(),
                   [&](std::size_t a, std::size_t b) { return order(cohort.examples[a], cohort.examples[b]); });
  for (std::size_t j = 0; j < k; ++j) mask[idx[j]] = 1;
  return mask;
}

inline AuditReport audit_top_k(const Cohort& cohort, std::string_view attribute, std::size_t k,
                               const TieBreak& tie = {}, const AuditOptions& options = {}) {
  cohort.attribute_index(attribute);
  return audit_selection(cohort, attribute, top_k_mask(cohort, k, tie), options, "top_k");
}

namespace detail {
inline nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}
}  // namespace detail

inline nlohmann::json to_json(const GroupMetricSet& m) {
  nlohmann::json j = nlohmann::json::object();
  for (auto metric : kAllMetrics) j[std::string(metric_name(metric))] = detail::opt(m.get(metric));
  j["selected"] = m.selected;
  return j;
}

inline nlohmann::json to_json(const AuditReport& r) {
  nlohmann::json j;
  j["attribute"] = r.attribute;
  j["selection"] = r.selection;
  j["k"] = r.k;
  j["reference_group"] = r.reference_group;
  j["groups"] = nlohmann::json::array();
  for (const auto& g : r.groups) {
    nlohmann::json gj;
    gj["group"] = g.stats.group;
    gj["n"] = g.stats.n;
    gj["positives"] = g.stats.positives;
    gj["prevalence"] = g.stats.prevalence;
    gj["tp"] = g.confusion.tp;
    gj["fp"] = g.confusion.fp;
    gj["fn"] = g.confusion.fn;
    gj["tn"] = g.confusion.tn;
    gj["metrics"] = to_json(g.metrics);
    nlohmann::json ratios = nlohmann::json::object();
    for (const auto& [name, value] : g.ratios) ratios[name] = detail::opt(value);
    gj["ratios"] = std::move(ratios);
    j["groups"].push_back(std::move(gj));
  }
  j["overall_precision"] = detail::opt(r.overall_precision);
  j["recall_disparity"] = {{"max_group", r.recall_disparity.max_group},
                           {"min_group", r.recall_disparity.min_group},
                           {"ratio", detail::opt(r.recall_disparity.ratio)},
                           {"flagged", r.recall_disparity.flagged}};
  return j;
}

}  // namespace fairsel
