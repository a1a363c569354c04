#pragma once

// Synthetic scored cohorts with exact per-group positive counts.
//
// Scores are drawn from a pair of unit-interval Beta families driven by the
// group's separability s >= 0:
//   positives ~ Beta(1 + s, 1)   (density (1+s) x^s)
//   negatives ~ Beta(1, 1 + s)   (density (1+s) (1-x)^s)
// Both are sampled by exact inversion, so output depends only on the 64-bit
// Mersenne Twister stream. s = 0 gives identical uniform distributions; the
// expected AUC is 1 - (1+s) B(s+2, s+1), increasing from 0.5 towards 1.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairsel/data_model.hpp"
#include "fairsel/error.hpp"
#include "fairsel/util.hpp"

namespace fairsel {

struct SynthGroup {
  std::string category;
  std::size_t n = 0;
  double prevalence = 0.0;
  double separability = 0.0;
};

struct SynthSpec {
  std::string attribute = "group";
  std::vector<SynthGroup> groups;
  std::optional<Date> as_of_date;
  std::optional<std::string> model_id;
  std::uint64_t seed = 0;
  std::optional<int> quantize_levels;  // coarsen scores to force ties

  void validate() const {
    if (attribute.empty()) throw ValidationError("synth spec: attribute name is empty");
    if (groups.empty()) throw ValidationError("synth spec: no groups");
    std::set<std::string> seen;
    for (const auto& g : groups) {
      if (g.category.empty()) throw ValidationError("synth spec: empty category name");
      if (!seen.insert(g.category).second) throw ValidationError("synth spec: duplicate category '" + g.category + "'");
      if (!(g.prevalence >= 0.0 && g.prevalence <= 1.0)) {
        throw ValidationError("synth spec: prevalence of '" + g.category + "' outside [0, 1]");
      }
      if (!(g.separability >= 0.0) || !std::isfinite(g.separability)) {
        throw ValidationError("synth spec: separability of '" + g.category + "' must be >= 0");
      }
    }
    if (quantize_levels && *quantize_levels < 1) throw ValidationError("synth spec: quantize levels must be >= 1");
  }

  static SynthSpec from_json(const nlohmann::json& j) {
    SynthSpec spec;
    try {
      spec.attribute = j.value("attribute", spec.attribute);
      spec.seed = j.value("seed", std::uint64_t{0});
      if (j.contains("as_of_date") && !j["as_of_date"].is_null()) {
        spec.as_of_date = require_date(j["as_of_date"].get<std::string>());
      }
      if (j.contains("model_id") && !j["model_id"].is_null()) spec.model_id = j["model_id"].get<std::string>();
      if (j.contains("quantize") && !j["quantize"].is_null()) spec.quantize_levels = j["quantize"].get<int>();
      for (const auto& g : j.at("groups")) {
        spec.groups.push_back({g.at("category").get<std::string>(), g.at("n").get<std::size_t>(),
                               g.at("prevalence").get<double>(), g.value("separability", 0.0)});
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("synth spec: ") + e.what());
    }
    spec.validate();
    return spec;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["attribute"] = attribute;
    j["seed"] = seed;
    j["as_of_date"] = as_of_date ? nlohmann::json(format_date(*as_of_date)) : nlohmann::json(nullptr);
    j["model_id"] = model_id ? nlohmann::json(*model_id) : nlohmann::json(nullptr);
    j["quantize"] = quantize_levels ? nlohmann::json(*quantize_levels) : nlohmann::json(nullptr);
    j["groups"] = nlohmann::json::array();
    for (const auto& g : groups) {
      j["groups"].push_back(
          {{"category", g.category}, {"n", g.n}, {"prevalence", g.prevalence}, {"separability", g.separability}});
    }
    return j;
  }
};

inline std::size_t expected_positives(const SynthGroup& g) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(g.n) * g.prevalence));
}

inline double expected_auc(double separability) {
  const double s = separability;
  const double log_beta = std::lgamma(s + 2.0) + std::lgamma(s + 1.0) - std::lgamma(2.0 * s + 3.0);
  return 1.0 - (1.0 + s) * std::exp(log_beta);
}

namespace detail {

class SynthStream {
 public:
  explicit SynthStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace detail

inline Cohort generate_population(const SynthSpec& spec) {
  spec.validate();
  Cohort cohort;
  cohort.attributes = {spec.attribute};
  std::size_t total = 0;
  for (const auto& g : spec.groups) total += g.n;
  cohort.examples.reserve(total);

  for (const auto& g : spec.groups) {
    // Independent sub-stream per category: group order does not change any group's draws.
    detail::SynthStream rng(splitmix64(spec.seed ^ fnv1a(g.category)));
    const std::size_t positives = expected_positives(g);
    std::vector<int> labels(g.n, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(positives), 1);
    for (std::size_t i = g.n; i > 1; --i) std::swap(labels[i - 1], labels[rng.below(i)]);

    const double shape = 1.0 + g.separability;
    for (std::size_t i = 0; i < g.n; ++i) {
      const double u = rng.uniform();
      double score = labels[i] ? std::pow(u, 1.0 / shape) : 1.0 - std::pow(u, 1.0 / shape);
      if (spec.quantize_levels) {
        const double levels = static_cast<double>(*spec.quantize_levels);
        score = std::floor(score * levels) / levels;
      }
      ScoredExample ex;
      char id[32];
      std::snprintf(id, sizeof id, "-%07zu", i);
      ex.entity_id = g.category + id;
      ex.score = score;
      ex.label = labels[i];
      ex.group_values = {g.category};
      ex.as_of_date = spec.as_of_date;
      ex.model_id = spec.model_id;
      cohort.examples.push_back(std::move(ex));
    }
  }
  if (cohort.examples.empty()) throw ValidationError("synth spec produces an empty cohort");
  cohort.provenance = {"synthetic(seed=" + std::to_string(spec.seed) + ")", detail::now_iso8601()};
  summarize(cohort);
  return cohort;
}

// Five-group population shaped like a large urban misdemeanor cohort: overall
// prevalence 4.4% and one large group whose scores rank its positives poorly.
inline SynthSpec desk_scale_spec(std::uint64_t seed = 2017) {
  SynthSpec spec;
  spec.attribute = "race";
  spec.seed = seed;
  spec.as_of_date = Date{std::chrono::year{2017}, std::chrono::January, std::chrono::day{1}};
  spec.model_id = "desk";
  spec.groups = {
      {"black", 9000, 0.06, 1.3},       // 540 positives
      {"hispanic", 20000, 0.042, 0.6},  // 840
      {"other", 4000, 0.035, 1.4},      // 140
      {"unknown", 5000, 0.04, 1.0},     // 200
      {"white", 12000, 0.04, 1.3},      // 480
  };
  return spec;
}

}  // namespace fairsel
