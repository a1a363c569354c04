#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairsel/data_model.hpp"
#include "fairsel/util.hpp"

namespace fairsel {

// How equal scores are ordered. by_entity_id is fully deterministic; seeded_random
// draws a per-entity key from (seed, entity_id), so it is replayable and does not
// depend on input row order.
struct TieBreak {
  enum class Kind { by_entity_id, seeded_random };
  Kind kind = Kind::by_entity_id;
  std::uint64_t seed = 0;

  static TieBreak by_entity_id() { return {}; }
  static TieBreak seeded(std::uint64_t seed) { return {Kind::seeded_random, seed}; }

  std::uint64_t key(const std::string& entity_id) const {
    return splitmix64(seed ^ fnv1a(entity_id));
  }

  std::string name() const { return kind == Kind::by_entity_id ? "entity-id" : "seeded"; }

  friend bool operator==(const TieBreak&, const TieBreak&) = default;
};

// Descending score, then the tie rule.
struct RankOrder {
  TieBreak tie;

  bool operator()(const ScoredExample& a, const ScoredExample& b) const {
    if (a.score != b.score) return a.score > b.score;
    if (tie.kind == TieBreak::Kind::seeded_random) {
      auto ka = tie.key(a.entity_id), kb = tie.key(b.entity_id);
      if (ka != kb) return ka < kb;
    }
    return a.entity_id < b.entity_id;
  }
};

inline void rank_indices(const Cohort& cohort, std::vector<std::size_t>& indices, const TieBreak& tie) {
  if (tie.kind == TieBreak::Kind::seeded_random) {
    // Precompute keys; hashing inside the comparator dominates on large cohorts.
    struct Keyed {
      double score;
      std::uint64_t key;
      std::size_t index;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(indices.size());
    for (auto i : indices) {
      const auto& e = cohort.examples[i];
      keyed.push_back({e.score, tie.key(e.entity_id), i});
    }
    std::sort(keyed.begin(), keyed.end(), [&](const Keyed& a, const Keyed& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.key != b.key) return a.key < b.key;
      return cohort.examples[a.index].entity_id < cohort.examples[b.index].entity_id;
    });
    for (std::size_t j = 0; j < keyed.size(); ++j) indices[j] = keyed[j].index;
    return;
  }
  std::sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = cohort.examples[a];
    const auto& eb = cohort.examples[b];
    if (ea.score != eb.score) return ea.score > eb.score;
    return ea.entity_id < eb.entity_id;
  });
}

// All example indices in rank order.
inline std::vector<std::size_t> ranked_indices(const Cohort& cohort, const TieBreak& tie) {
  std::vector<std::size_t> idx(cohort.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rank_indices(cohort, idx, tie);
  return idx;
}

// Partition with each group's indices in rank order.
inline GroupPartition ranked_partition(const Cohort& cohort, std::string_view attribute, const TieBreak& tie) {
  auto parts = partition_by_group(cohort, attribute);
  for (auto& [group, members] : parts) rank_indices(cohort, members, tie);
  return parts;
}

}  // namespace fairsel
