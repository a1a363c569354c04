// Build the five-scenario trade-off menu on the synthetic desk-scale cohort.

#include <cstdio>

#include "fairsel/fairsel.hpp"

int main() {
  using namespace fairsel;
  auto cohort = generate_population(desk_scale_spec());
  auto menu = build_tradeoff_menu(cohort, "race", 150, "white");

  std::printf("%-28s %6s %9s\n", "scenario", "total", "precision");
  for (const auto& s : menu.scenarios) {
    std::printf("%-28s %6zu %9.4f\n", std::string(to_string(s.label)).c_str(), s.result.total,
                s.result.overall_precision.value_or(0.0));
    if (s.trimmed) {
      std::printf("%-28s %6zu %9.4f\n", (std::string(to_string(s.label)) + " (trimmed)").c_str(), s.trimmed->total,
                  s.trimmed->overall_precision.value_or(0.0));
    }
  }
}
