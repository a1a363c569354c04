// Load a score file, audit the top k, and balance recall across groups.
//
//   quickstart samples/data/toy.csv 3

#include <cstdlib>
#include <iostream>

#include "fairsel/fairsel.hpp"

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: quickstart <scores.csv> <k>\n";
    return 1;
  }
  using namespace fairsel;
  auto cohort = load_score_file(argv[1], IngestConfig{});
  const std::string attribute = cohort.attributes.at(0);
  const std::size_t k = std::strtoul(argv[2], nullptr, 10);

  auto audit = audit_top_k(cohort, attribute, k);
  std::cout << "top-" << k << " recall by " << attribute << ":\n";
  for (const auto& g : audit.groups) {
    std::cout << "  " << g.stats.group << "  " << (g.metrics.recall ? format_double(*g.metrics.recall) : "n/a")
              << "\n";
  }

  auto curves = build_curves(cohort, attribute);
  auto plan = balance_equalized_by_size(curves, k);
  std::cout << "equalized quotas:\n";
  for (const auto& q : plan.groups) {
    std::cout << "  " << q.group << "  k=" << q.k << "  recall=" << format_double(q.achieved_recall) << "\n";
  }
  for (const auto& id : realize_selection(plan, cohort, attribute, {})) std::cout << id << "\n";
}
