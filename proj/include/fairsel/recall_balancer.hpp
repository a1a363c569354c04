#pragma once

// Group-specific selection quotas that balance within-group recall, either
// equally across groups or in proportion to group prevalence, under a recall
// target or a total list-size budget.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fairsel/data_model.hpp"
#include "fairsel/error.hpp"
#include "fairsel/group_metrics.hpp"
#include "fairsel/ranking.hpp"

namespace fairsel {

struct CurveEntry {
  std::size_t n = 0;              // within-group depth, 1-based
  std::size_t cum_positives = 0;  // positives among the top n
  double rolling_recall = 0.0;    // cum_positives / Y_g, or 0 when Y_g == 0
};

struct RollingRecallCurve {
  GroupStats stats;
  std::vector<CurveEntry> entries;  // n = 1..N_g, no gaps
  std::vector<std::size_t> order;   // cohort indices in rank order (empty if built from loose examples)

  const std::string& group() const { return stats.group; }
  std::size_t size() const { return entries.size(); }
  bool has_positives() const { return stats.positives > 0; }

  double recall_at(std::size_t n) const { return n == 0 ? 0.0 : entries[n - 1].rolling_recall; }
  std::size_t positives_at(std::size_t n) const { return n == 0 ? 0 : entries[n - 1].cum_positives; }

  // max n such that R_{g,n} <= target; 0 when even the first entry exceeds it.
  std::size_t max_depth_at_or_below(double target) const {
    auto it = std::upper_bound(entries.begin(), entries.end(), target,
                               [](double t, const CurveEntry& e) { return t < e.rolling_recall; });
    return static_cast<std::size_t>(it - entries.begin());
  }
};

namespace detail {

inline RollingRecallCurve curve_from_labels(std::string group, const std::vector<int>& labels_in_rank_order) {
  if (labels_in_rank_order.empty()) throw ValidationError("cannot build a recall curve for empty group '" + group + "'");
  std::size_t positives = 0;
  for (int l : labels_in_rank_order) positives += static_cast<std::size_t>(l);
  RollingRecallCurve curve;
  curve.stats = make_group_stats(std::move(group), labels_in_rank_order.size(), positives);
  curve.entries.reserve(labels_in_rank_order.size());
  std::size_t cum = 0;
  for (std::size_t i = 0; i < labels_in_rank_order.size(); ++i) {
    cum += static_cast<std::size_t>(labels_in_rank_order[i]);
    double r = positives ? static_cast<double>(cum) / static_cast<double>(positives) : 0.0;
    curve.entries.push_back({i + 1, cum, r});
  }
  return curve;
}

}  // namespace detail

inline RollingRecallCurve rolling_recall_curve(std::string group, std::vector<ScoredExample> examples,
                                               const TieBreak& tie = {}) {
  std::sort(examples.begin(), examples.end(), RankOrder{tie});
  std::vector<int> labels;
  labels.reserve(examples.size());
  for (const auto& e : examples) labels.push_back(e.label);
  return detail::curve_from_labels(std::move(group), labels);
}

// One curve per category of `attribute`, in category-name order.
inline std::vector<RollingRecallCurve> build_curves(const Cohort& cohort, std::string_view attribute,
                                                    const TieBreak& tie = {}) {
  auto parts = ranked_partition(cohort, attribute, tie);
  std::vector<RollingRecallCurve> curves;
  curves.reserve(parts.size());
  for (auto& [group, members] : parts) {
    std::vector<int> labels;
    labels.reserve(members.size());
    for (auto i : members) labels.push_back(cohort.examples[i].label);
    auto curve = detail::curve_from_labels(group, labels);
    curve.order = std::move(members);
    curves.push_back(std::move(curve));
  }
  return curves;
}

enum class BalanceMode { equalized, proportional, unadjusted };
enum class ConstraintKind { list_size, recall_target, reference_recall };
enum class SearchStrategy { fixed_step, exact_breakpoint };

inline std::string_view to_string(BalanceMode m) {
  switch (m) {
    case BalanceMode::equalized: return "equalized";
    case BalanceMode::proportional: return "proportional";
    case BalanceMode::unadjusted: return "unadjusted";
  }
  return "?";
}
inline std::string_view to_string(ConstraintKind c) {
  switch (c) {
    case ConstraintKind::list_size: return "list_size";
    case ConstraintKind::recall_target: return "recall_target";
    case ConstraintKind::reference_recall: return "reference_recall";
  }
  return "?";
}
inline std::string_view to_string(SearchStrategy s) {
  return s == SearchStrategy::fixed_step ? "fixed_step" : "exact_breakpoint";
}

inline constexpr double kDefaultStep = 1e-4;

struct BalanceSpec {
  BalanceMode mode = BalanceMode::equalized;
  ConstraintKind constraint = ConstraintKind::list_size;
  std::size_t list_size = 0;  // K, for list_size
  double recall = 0.0;        // R or R_ref, for the recall constraints
  std::optional<std::string> reference_group;
  double step = kDefaultStep;
  SearchStrategy search = SearchStrategy::fixed_step;
  TieBreak tie;
  bool trim = false;
  bool fit_to_budget = false;  // proportional list_size: cut an overshooting plan back to exactly K
  std::optional<std::vector<std::string>> group_tie_order;

  void validate() const {
    if (mode == BalanceMode::unadjusted) throw ValidationError("balance mode must be equalized or proportional");
    if (mode == BalanceMode::proportional && !reference_group) {
      throw ValidationError("proportional mode requires a reference group");
    }
    if (mode == BalanceMode::equalized && reference_group) {
      throw ValidationError("reference group is only meaningful in proportional mode");
    }
    if (mode == BalanceMode::equalized && constraint == ConstraintKind::reference_recall) {
      throw ValidationError("a reference recall constraint requires proportional mode");
    }
    if (mode == BalanceMode::proportional && constraint == ConstraintKind::recall_target) {
      throw ValidationError("proportional mode takes a reference recall, not a recall target");
    }
    if (constraint != ConstraintKind::list_size && !(recall >= 0.0 && recall <= 1.0)) {
      throw ValidationError("recall must lie in [0, 1]");
    }
    if (!(step > 0.0) || !std::isfinite(step)) throw ValidationError("step size must be positive");
  }
};

struct GroupQuota {
  std::string group;
  std::size_t n = 0;
  std::size_t positives = 0;
  std::size_t k = 0;
  std::optional<double> target_recall;
  double achieved_recall = 0.0;
  std::optional<double> ratio;  // r_g, proportional mode
  bool capped = false;          // r_g * x exceeded 1
};

struct SelectionPlan {
  BalanceSpec spec;
  std::vector<GroupQuota> groups;
  std::size_t total = 0;
  std::optional<std::size_t> requested_k;
  std::optional<double> search_x;       // proportional list_size: final x
  std::optional<std::size_t> k_all;     // proportional list_size: sum of quotas at x before any fitting
  std::optional<double> undershoot_x;   // exact_breakpoint: last x with k_all < K
  std::optional<std::vector<std::size_t>> undershoot_quotas;
  std::optional<std::size_t> undershoot_total;
  bool trimmed = false;
  std::vector<std::string> warnings;
  std::optional<std::vector<std::string>> selected_ids;

  const GroupQuota& quota(std::string_view group) const {
    for (const auto& q : groups) {
      if (q.group == group) return q;
    }
    throw ValidationError("no group '" + std::string(group) + "' in plan");
  }
  std::size_t k(std::string_view group) const { return quota(group).k; }
};

// Merged-list element for the size-constrained equalized branch.
struct MergedEntry {
  std::string group;
  std::size_t n = 0;
  double rolling_recall = 0.0;
  std::size_t m = 0;  // cumulative position in the merged list, 1-based
};

struct ProportionalSearchState {
  double x = 0.0;
  std::size_t k_all = 0;
};

namespace detail {

inline void finish_plan(SelectionPlan& plan, const std::vector<RollingRecallCurve>& curves) {
  plan.total = 0;
  for (std::size_t g = 0; g < curves.size(); ++g) {
    auto& q = plan.groups[g];
    q.achieved_recall = curves[g].recall_at(q.k);
    plan.total += q.k;
  }
}

inline SelectionPlan empty_plan(const std::vector<RollingRecallCurve>& curves, const BalanceSpec& spec) {
  if (curves.empty()) throw DataError("no groups to balance");
  SelectionPlan plan;
  plan.spec = spec;
  for (const auto& c : curves) {
    GroupQuota q;
    q.group = c.group();
    q.n = c.stats.n;
    q.positives = c.stats.positives;
    plan.groups.push_back(std::move(q));
    if (!c.has_positives() && spec.mode != BalanceMode::unadjusted) {
      plan.warnings.push_back("group '" + c.group() + "' has no observed positives; quota forced to 0");
    }
  }
  return plan;
}

inline std::size_t index_of(const std::vector<RollingRecallCurve>& curves, std::string_view group) {
  for (std::size_t g = 0; g < curves.size(); ++g) {
    if (curves[g].group() == group) return g;
  }
  throw ValidationError("unknown group '" + std::string(group) + "'");
}

// Rank used to break cross-group ties in merged orders: explicit order if given,
// otherwise Y_g descending then category name.
inline std::vector<std::size_t> group_tie_rank(const std::vector<RollingRecallCurve>& curves,
                                               const std::optional<std::vector<std::string>>& explicit_order) {
  std::vector<std::size_t> by(curves.size());
  for (std::size_t g = 0; g < by.size(); ++g) by[g] = g;
  if (explicit_order) {
    std::vector<std::size_t> pos(curves.size(), std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < explicit_order->size(); ++i) pos[index_of(curves, (*explicit_order)[i])] = i;
    for (std::size_t g = 0; g < curves.size(); ++g) {
      if (pos[g] == std::numeric_limits<std::size_t>::max()) {
        throw ValidationError("group tie order omits group '" + curves[g].group() + "'");
      }
    }
    return pos;
  }
  std::sort(by.begin(), by.end(), [&](std::size_t a, std::size_t b) {
    if (curves[a].stats.positives != curves[b].stats.positives) {
      return curves[a].stats.positives > curves[b].stats.positives;
    }
    return curves[a].group() < curves[b].group();
  });
  std::vector<std::size_t> rank(curves.size());
  for (std::size_t i = 0; i < by.size(); ++i) rank[by[i]] = i;
  return rank;
}

inline std::size_t selectable_total(const std::vector<RollingRecallCurve>& curves) {
  std::size_t total = 0;
  for (const auto& c : curves) {
    if (c.has_positives()) total += c.size();
  }
  return total;
}

inline void check_budget(const std::vector<RollingRecallCurve>& curves, std::size_t K) {
  std::size_t all = 0;
  for (const auto& c : curves) all += c.size();
  if (K > all) {
    throw ValidationError("K=" + std::to_string(K) + " exceeds the cohort size " + std::to_string(all));
  }
  const std::size_t selectable = selectable_total(curves);
  if (K > selectable) {
    throw BalanceError("K=" + std::to_string(K) + " exceeds the " + std::to_string(selectable) +
                       " examples in groups with observed positives");
  }
}

struct ProportionalSetup {
  std::size_t ref = 0;
  std::vector<double> ratios;  // r_g = P_g / P_ref
};

inline ProportionalSetup proportional_setup(const std::vector<RollingRecallCurve>& curves,
                                            std::string_view reference_group) {
  ProportionalSetup s;
  s.ref = index_of(curves, reference_group);
  const double p_ref = curves[s.ref].stats.prevalence;
  if (!(p_ref > 0.0)) {
    throw BalanceError("reference group '" + std::string(reference_group) +
                       "' has zero prevalence; prevalence ratios are undefined");
  }
  for (const auto& c : curves) s.ratios.push_back(c.stats.prevalence / p_ref);
  return s;
}

// Quota at reference-recall level x: max n with R_{g,n} <= r_g * x.
inline std::size_t proportional_quota(const RollingRecallCurve& curve, double ratio, double x) {
  if (!curve.has_positives()) return 0;
  return curve.max_depth_at_or_below(ratio * x);
}

inline std::size_t proportional_total(const std::vector<RollingRecallCurve>& curves,
                                      const std::vector<double>& ratios, double x) {
  std::size_t total = 0;
  for (std::size_t g = 0; g < curves.size(); ++g) total += proportional_quota(curves[g], ratios[g], x);
  return total;
}

inline void set_proportional_quotas(SelectionPlan& plan, const std::vector<RollingRecallCurve>& curves,
                                    const std::vector<double>& ratios, double x) {
  for (std::size_t g = 0; g < curves.size(); ++g) {
    auto& q = plan.groups[g];
    q.ratio = ratios[g];
    const double raw = ratios[g] * x;
    q.capped = raw > 1.0;
    q.target_recall = std::min(1.0, raw);
    q.k = proportional_quota(curves[g], ratios[g], x);
  }
  finish_plan(plan, curves);
}

// Smallest double x with ratio * x >= value.
inline double crossing_point(double value, double ratio) {
  double x = value / ratio;
  while (ratio * x < value) x = std::nextafter(x, std::numeric_limits<double>::infinity());
  for (;;) {
    double lower = std::nextafter(x, -std::numeric_limits<double>::infinity());
    if (ratio * lower >= value) x = lower;
    else break;
  }
  return x;
}

}  // namespace detail

inline SelectionPlan balance_equalized_by_recall(const std::vector<RollingRecallCurve>& curves, double R) {
  if (!(R >= 0.0 && R <= 1.0)) throw ValidationError("recall target must lie in [0, 1]");
  BalanceSpec spec;
  spec.mode = BalanceMode::equalized;
  spec.constraint = ConstraintKind::recall_target;
  spec.recall = R;
  auto plan = detail::empty_plan(curves, spec);
  for (std::size_t g = 0; g < curves.size(); ++g) {
    auto& q = plan.groups[g];
    q.target_recall = R;
    q.k = curves[g].has_positives() ? curves[g].max_depth_at_or_below(R) : 0;
  }
  detail::finish_plan(plan, curves);
  return plan;
}

// Full merged order over groups with observed positives, sorted by (R, n, group tie rank).
inline std::vector<MergedEntry> merged_order(const std::vector<RollingRecallCurve>& curves,
                                             const std::optional<std::vector<std::string>>& group_tie_order = {}) {
  auto rank = detail::group_tie_rank(curves, group_tie_order);
  struct Ref {
    std::size_t g, n;
    double r;
  };
  std::vector<Ref> refs;
  for (std::size_t g = 0; g < curves.size(); ++g) {
    if (!curves[g].has_positives()) continue;
    for (const auto& e : curves[g].entries) refs.push_back({g, e.n, e.rolling_recall});
  }
  std::sort(refs.begin(), refs.end(), [&](const Ref& a, const Ref& b) {
    if (a.r != b.r) return a.r < b.r;
    if (a.n != b.n) return a.n < b.n;
    return rank[a.g] < rank[b.g];
  });
  std::vector<MergedEntry> out;
  out.reserve(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    out.push_back({curves[refs[i].g].group(), refs[i].n, refs[i].r, i + 1});
  }
  return out;
}

// First K entries of the merged order; k_g is the deepest n of group g in that prefix.
inline SelectionPlan balance_equalized_by_size(const std::vector<RollingRecallCurve>& curves, std::size_t K,
                                               const std::optional<std::vector<std::string>>& group_tie_order = {}) {
  BalanceSpec spec;
  spec.mode = BalanceMode::equalized;
  spec.constraint = ConstraintKind::list_size;
  spec.list_size = K;
  spec.group_tie_order = group_tie_order;
  auto plan = detail::empty_plan(curves, spec);
  plan.requested_k = K;
  detail::check_budget(curves, K);
  auto rank = detail::group_tie_rank(curves, group_tie_order);

  // Each group's entries are already in (R, n) order, so a K-step heap merge suffices.
  struct Head {
    double r;
    std::size_t n, rank, g;
  };
  auto after = [](const Head& a, const Head& b) {
    if (a.r != b.r) return a.r > b.r;
    if (a.n != b.n) return a.n > b.n;
    return a.rank > b.rank;
  };
  std::priority_queue<Head, std::vector<Head>, decltype(after)> heads(after);
  for (std::size_t g = 0; g < curves.size(); ++g) {
    if (curves[g].has_positives()) heads.push({curves[g].entries[0].rolling_recall, 1, rank[g], g});
  }
  for (std::size_t m = 0; m < K; ++m) {
    Head h = heads.top();
    heads.pop();
    plan.groups[h.g].k = h.n;
    if (h.n < curves[h.g].size()) {
      heads.push({curves[h.g].entries[h.n].rolling_recall, h.n + 1, h.rank, h.g});
    }
  }
  detail::finish_plan(plan, curves);
  return plan;
}

inline SelectionPlan balance_proportional_by_ref_recall(const std::vector<RollingRecallCurve>& curves,
                                                        std::string_view reference_group, double R_ref) {
  if (!(R_ref >= 0.0 && R_ref <= 1.0)) throw ValidationError("reference recall must lie in [0, 1]");
  BalanceSpec spec;
  spec.mode = BalanceMode::proportional;
  spec.constraint = ConstraintKind::reference_recall;
  spec.recall = R_ref;
  spec.reference_group = std::string(reference_group);
  auto plan = detail::empty_plan(curves, spec);
  auto setup = detail::proportional_setup(curves, reference_group);
  detail::set_proportional_quotas(plan, curves, setup.ratios, R_ref);
  return plan;
}

struct ProportionalSearchOptions {
  double step = kDefaultStep;
  SearchStrategy search = SearchStrategy::fixed_step;
  bool fit_to_budget = false;
  std::optional<std::vector<std::string>> group_tie_order;
  std::vector<ProportionalSearchState>* trace = nullptr;  // fixed_step path, for inspection
};

namespace detail {

// Keeps the first K selected entries ordered by (R / r_g, n, group tie rank).
inline void fit_plan_to_budget(SelectionPlan& plan, const std::vector<RollingRecallCurve>& curves,
                               const std::vector<double>& ratios, std::size_t K,
                               const std::optional<std::vector<std::string>>& group_tie_order) {
  if (plan.total <= K) return;
  auto rank = group_tie_rank(curves, group_tie_order);
  struct Ref {
    double key;
    std::size_t n, g;
  };
  std::vector<Ref> refs;
  refs.reserve(plan.total);
  for (std::size_t g = 0; g < curves.size(); ++g) {
    for (std::size_t n = 1; n <= plan.groups[g].k; ++n) {
      refs.push_back({curves[g].recall_at(n) / ratios[g], n, g});
    }
  }
  std::sort(refs.begin(), refs.end(), [&](const Ref& a, const Ref& b) {
    if (a.key != b.key) return a.key < b.key;
    if (a.n != b.n) return a.n < b.n;
    return rank[a.g] < rank[b.g];
  });
  for (auto& q : plan.groups) q.k = 0;
  for (std::size_t i = 0; i < K; ++i) plan.groups[refs[i].g].k = std::max(plan.groups[refs[i].g].k, refs[i].n);
  finish_plan(plan, curves);
}

}  // namespace detail

inline SelectionPlan balance_proportional_by_size(const std::vector<RollingRecallCurve>& curves,
                                                  std::string_view reference_group, std::size_t K,
                                                  const ProportionalSearchOptions& options = {}) {
  BalanceSpec spec;
  spec.mode = BalanceMode::proportional;
  spec.constraint = ConstraintKind::list_size;
  spec.list_size = K;
  spec.reference_group = std::string(reference_group);
  spec.step = options.step;
  spec.search = options.search;
  spec.fit_to_budget = options.fit_to_budget;
  spec.group_tie_order = options.group_tie_order;
  if (!(options.step > 0.0) || !std::isfinite(options.step)) throw ValidationError("step size must be positive");

  auto plan = detail::empty_plan(curves, spec);
  plan.requested_k = K;
  auto setup = detail::proportional_setup(curves, reference_group);
  detail::check_budget(curves, K);
  const auto& ratios = setup.ratios;
  const double x0 = curves[setup.ref].entries.front().rolling_recall;

  double x = x0;
  if (options.search == SearchStrategy::fixed_step) {
    std::size_t k_all = detail::proportional_total(curves, ratios, x);
    if (options.trace) options.trace->push_back({x, k_all});
    while (k_all < K) {
      const double next = x + options.step;
      if (next == x) throw ValidationError("step size too small to advance the search");
      x = next;
      k_all = detail::proportional_total(curves, ratios, x);
      if (options.trace) options.trace->push_back({x, k_all});
    }
  } else {
    std::vector<double> candidates{x0};
    for (std::size_t g = 0; g < curves.size(); ++g) {
      if (!curves[g].has_positives() || ratios[g] == 0.0) continue;
      double last = -1.0;
      for (const auto& e : curves[g].entries) {
        if (e.rolling_recall == last) continue;
        last = e.rolling_recall;
        const double c = detail::crossing_point(e.rolling_recall, ratios[g]);
        if (c > x0) candidates.push_back(c);
      }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    auto it = std::partition_point(candidates.begin(), candidates.end(), [&](double c) {
      return detail::proportional_total(curves, ratios, c) < K;
    });
    if (it == candidates.end()) throw BalanceError("budget K is unreachable by the proportional search");
    x = *it;
    if (it != candidates.begin()) {
      const double under = *std::prev(it);
      std::vector<std::size_t> quotas;
      std::size_t total = 0;
      for (std::size_t g = 0; g < curves.size(); ++g) {
        quotas.push_back(detail::proportional_quota(curves[g], ratios[g], under));
        total += quotas.back();
      }
      plan.undershoot_x = under;
      plan.undershoot_quotas = std::move(quotas);
      plan.undershoot_total = total;
    }
  }

  detail::set_proportional_quotas(plan, curves, ratios, x);
  plan.search_x = x;
  plan.k_all = plan.total;
  if (plan.total > K) {
    plan.warnings.push_back("proportional search overshoots the budget: k_all=" + std::to_string(plan.total) +
                            " > K=" + std::to_string(K));
    if (options.fit_to_budget) detail::fit_plan_to_budget(plan, curves, ratios, K, options.group_tie_order);
  }
  return plan;
}

// Reduce each quota to the shallowest depth with the same rolling recall.
inline SelectionPlan trim_trailing_negatives(SelectionPlan plan, const std::vector<RollingRecallCurve>& curves) {
  if (plan.groups.size() != curves.size()) throw ValidationError("plan and curves describe different groups");
  for (std::size_t g = 0; g < curves.size(); ++g) {
    auto& q = plan.groups[g];
    if (q.group != curves[g].group()) throw ValidationError("plan and curves describe different groups");
    const std::size_t positives = curves[g].positives_at(q.k);
    if (positives == 0) {
      q.k = 0;
      continue;
    }
    // First entry reaching `positives` cumulative positives.
    auto it = std::lower_bound(curves[g].entries.begin(), curves[g].entries.begin() + static_cast<std::ptrdiff_t>(q.k),
                               positives,
                               [](const CurveEntry& e, std::size_t p) { return e.cum_positives < p; });
    q.k = it->n;
  }
  detail::finish_plan(plan, curves);
  plan.trimmed = true;
  plan.spec.trim = true;
  return plan;
}

inline SelectionPlan balance(const std::vector<RollingRecallCurve>& curves, const BalanceSpec& spec) {
  spec.validate();
  SelectionPlan plan;
  if (spec.mode == BalanceMode::equalized) {
    plan = spec.constraint == ConstraintKind::list_size
               ? balance_equalized_by_size(curves, spec.list_size, spec.group_tie_order)
               : balance_equalized_by_recall(curves, spec.recall);
  } else if (spec.constraint == ConstraintKind::reference_recall) {
    plan = balance_proportional_by_ref_recall(curves, *spec.reference_group, spec.recall);
  } else {
    ProportionalSearchOptions options;
    options.step = spec.step;
    options.search = spec.search;
    options.fit_to_budget = spec.fit_to_budget;
    options.group_tie_order = spec.group_tie_order;
    plan = balance_proportional_by_size(curves, *spec.reference_group, spec.list_size, options);
  }
  auto warnings = std::move(plan.warnings);
  auto requested = plan.requested_k;
  if (spec.trim) plan = trim_trailing_negatives(std::move(plan), curves);
  plan.spec = spec;
  plan.warnings = std::move(warnings);
  plan.requested_k = requested;
  return plan;
}

// Quotas of an unadjusted cohort-wide top-K selection, expressed as a plan.
inline SelectionPlan top_k_plan(const Cohort& cohort, const std::vector<RollingRecallCurve>& curves, std::size_t K,
                                const TieBreak& tie) {
  BalanceSpec spec;
  spec.mode = BalanceMode::unadjusted;
  spec.constraint = ConstraintKind::list_size;
  spec.list_size = K;
  spec.tie = tie;
  auto plan = detail::empty_plan(curves, spec);
  plan.requested_k = K;
  auto mask = top_k_mask(cohort, K, tie);
  for (std::size_t g = 0; g < curves.size(); ++g) {
    std::size_t k = 0;
    for (auto i : curves[g].order) k += static_cast<std::size_t>(mask[i] != 0);
    plan.groups[g].k = k;
  }
  detail::finish_plan(plan, curves);
  return plan;
}

// Entity ids of the top k_g members of each group, groups in plan order.
inline std::vector<std::string> realize_selection(const SelectionPlan& plan, const Cohort& cohort,
                                                  std::string_view attribute, const TieBreak& tie) {
  auto parts = ranked_partition(cohort, attribute, tie);
  if (parts.size() != plan.groups.size()) {
    throw ValidationError("plan groups do not match the categories of '" + std::string(attribute) + "'");
  }
  std::vector<std::string> ids;
  ids.reserve(plan.total);
  for (const auto& q : plan.groups) {
    auto it = parts.find(q.group);
    if (it == parts.end() || it->second.size() != q.n) {
      throw ValidationError("plan group '" + q.group + "' does not match the cohort");
    }
    for (std::size_t j = 0; j < q.k; ++j) ids.push_back(cohort.examples[it->second[j]].entity_id);
  }
  return ids;
}

// Selection mask for a plan, using curves built with the plan's tie rule.
inline std::vector<char> plan_mask(const SelectionPlan& plan, const std::vector<RollingRecallCurve>& curves,
                                   std::size_t cohort_size) {
  std::vector<char> mask(cohort_size, 0);
  for (std::size_t g = 0; g < curves.size(); ++g) {
    if (curves[g].order.size() != curves[g].size()) throw ValidationError("curve carries no cohort ordering");
    for (std::size_t j = 0; j < plan.groups[g].k; ++j) mask[curves[g].order[j]] = 1;
  }
  return mask;
}

inline nlohmann::json to_json(const SelectionPlan& plan) {
  using nlohmann::json;
  json j;
  j["mode"] = to_string(plan.spec.mode);
  json constraint;
  constraint["type"] = to_string(plan.spec.constraint);
  if (plan.spec.constraint == ConstraintKind::list_size) constraint["value"] = plan.spec.list_size;
  else constraint["value"] = plan.spec.recall;
  j["constraint"] = std::move(constraint);
  j["reference_group"] = plan.spec.reference_group ? json(*plan.spec.reference_group) : json(nullptr);
  j["step_size"] = plan.spec.step;
  j["search_strategy"] = to_string(plan.spec.search);
  j["tie_break"] = plan.spec.tie.name();
  j["seed"] = plan.spec.tie.seed;
  j["trimmed"] = plan.trimmed;
  j["fit_to_budget"] = plan.spec.fit_to_budget;
  j["groups"] = json::array();
  for (const auto& q : plan.groups) {
    json g;
    g["group"] = q.group;
    g["n"] = q.n;
    g["positives"] = q.positives;
    g["k_g"] = q.k;
    g["target_recall"] = detail::opt(q.target_recall);
    g["achieved_recall"] = q.achieved_recall;
    g["r_g"] = detail::opt(q.ratio);
    g["capped"] = q.capped;
    j["groups"].push_back(std::move(g));
  }
  j["total"] = plan.total;
  j["requested_K"] = plan.requested_k ? json(*plan.requested_k) : json(nullptr);
  j["search_x"] = detail::opt(plan.search_x);
  j["k_all"] = plan.k_all ? json(*plan.k_all) : json(nullptr);
  if (plan.undershoot_quotas) {
    json u;
    u["x"] = *plan.undershoot_x;
    u["total"] = *plan.undershoot_total;
    u["k_g"] = json::object();
    for (std::size_t g = 0; g < plan.groups.size(); ++g) u["k_g"][plan.groups[g].group] = (*plan.undershoot_quotas)[g];
    j["undershoot"] = std::move(u);
  } else {
    j["undershoot"] = nullptr;
  }
  j["warnings"] = plan.warnings;
  if (plan.selected_ids) j["selected_ids"] = *plan.selected_ids;
  return j;
}

}  // namespace fairsel
