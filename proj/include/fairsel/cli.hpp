#pragma once

// Command-line front end. run() returns the process exit status:
// 0 success, 1 validation/usage error, 2 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairsel/api_server.hpp"
#include "fairsel/data_model.hpp"
#include "fairsel/error.hpp"
#include "fairsel/fairness_tree.hpp"
#include "fairsel/group_metrics.hpp"
#include "fairsel/recall_balancer.hpp"
#include "fairsel/reporting.hpp"
#include "fairsel/synth_data.hpp"
#include "fairsel/temporal_eval.hpp"

namespace fairsel::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitData = 2;

namespace detail {

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline IngestConfig ingest_config(const std::string& config_path) {
  if (config_path.empty()) return IngestConfig{};
  return IngestConfig::from_json(read_json_file(config_path));
}

inline std::string ask(std::istream& in, std::ostream& out, const std::string& prompt) {
  out << prompt << std::flush;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("no answer given for: " + prompt);
  return fairsel::detail::trim(line);
}

}  // namespace detail

struct Streams {
  std::ostream& out;
  std::ostream& err;
  std::istream& in;
};

inline int run(const std::vector<std::string>& args, Streams io) {
  CLI::App app{"Group fairness audits and recall-balanced selection quotas", "fairsel"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_path;
  std::string format_name = "json";
  app.add_option_function<std::uint64_t>(
         "--seed", [&](std::uint64_t v) { seed = v; seed_given = true; }, "Seed for seeded tie-breaks and synthesis")
      ->type_name("UINT");
  app.add_option("--out", out_path, "Write output here instead of stdout");
  app.add_option("--format", format_name, "Output format")->check(CLI::IsMember({"json", "csv", "plotdata"}));

  // shared data-input options
  std::string input, config_path, attribute, reference, tie_name = "entity-id";
  auto add_input = [&](CLI::App* sub, bool required = true) {
    auto* opt = sub->add_option("--input", input, "Score file (CSV)");
    if (required) opt->required();
    sub->add_option("--config", config_path, "Ingest config JSON");
    sub->add_option("--attribute", attribute, "Group attribute (default: first declared)");
    sub->add_option("--tie-break", tie_name, "Tie rule for equal scores")
        ->check(CLI::IsMember({"entity-id", "seeded"}));
  };

  // audit
  auto* audit = app.add_subcommand("audit", "Per-group metrics at the unadjusted top-k");
  add_input(audit);
  std::size_t k = 0;
  audit->add_option("--k", k, "Selection size")->required();
  audit->add_option("--reference-group", reference, "Group for disparity ratios (default: largest)");

  // balance
  auto* bal = app.add_subcommand("balance", "Recall-balancing quotas per group");
  add_input(bal);
  std::string mode = "equalized", search = "fixed-step";
  std::optional<std::size_t> bal_k;
  std::optional<double> recall, ref_recall;
  double step = kDefaultStep;
  bool trim = false, fit = false;
  bal->add_option("--mode", mode)->check(CLI::IsMember({"equalized", "proportional"}));
  auto* k_opt = bal->add_option("--k", bal_k, "Total list size K");
  auto* r_opt = bal->add_option("--recall", recall, "Equalized recall target R");
  auto* rr_opt = bal->add_option("--ref-recall", ref_recall, "Reference-group recall (proportional)");
  k_opt->excludes(r_opt)->excludes(rr_opt);
  r_opt->excludes(rr_opt);
  bal->add_option("--reference-group", reference, "Reference group (proportional)");
  bal->add_option("--step", step, "Step size for the fixed-step search");
  bal->add_option("--search", search)->check(CLI::IsMember({"fixed-step", "exact"}));
  bal->add_flag("--trim", trim, "Trim trailing negatives on recall plateaus");
  bal->add_flag("--fit-to-budget", fit, "Cut an overshooting proportional plan back to exactly K");

  // tradeoff
  auto* trade = app.add_subcommand("tradeoff", "Five-scenario equity/efficiency menu");
  add_input(trade);
  std::size_t trade_k = 0;
  std::string trade_search = "fixed-step";
  double trade_step = kDefaultStep;
  trade->add_option("--k", trade_k, "Current program size")->required();
  trade->add_option("--reference-group", reference, "Reference group (default: largest)");
  trade->add_option("--step", trade_step, "Step size for the proportional search");
  trade->add_option("--search", trade_search)->check(CLI::IsMember({"fixed-step", "exact"}));

  // tree
  auto* tree = app.add_subcommand("tree", "Recommend a parity metric for a program");
  std::string nature, scale, focus, rules_path;
  std::optional<double> fraction;
  tree->add_option("--nature", nature)->check(CLI::IsMember({"punitive", "assistive"}));
  tree->add_option("--scale", scale)->check(CLI::IsMember({"small", "substantial"}));
  tree->add_option("--focus", focus)
      ->check(CLI::IsMember({"everyone", "intervened", "served", "not-intervened", "unserved", "need", "unwarranted"}));
  tree->add_option("--rules", rules_path, "Alternative rule table (JSON)");
  tree->add_option("--selection-fraction", fraction, "k/N from an audit, for small-program hints");

  // temporal-eval
  auto* temporal = app.add_subcommand("temporal-eval", "Inter-temporal precision@k and model ranking");
  std::vector<std::string> inputs;
  std::string start, end, rule_name = "mean-minus-lambda-stddev";
  int interval = 6, window = 6;
  std::size_t tk = 150;
  std::optional<double> lambda;
  bool lenient = false;
  temporal->add_option("--inputs", inputs, "Score files (one per model, or with a model_id column)")->required();
  temporal->add_option("--config", config_path, "Ingest config JSON");
  temporal->add_option("--start", start)->required();
  temporal->add_option("--end", end)->required();
  temporal->add_option("--interval-months", interval);
  temporal->add_option("--label-window-months", window);
  temporal->add_option("--k", tk);
  temporal->add_option("--rule", rule_name)
      ->check(CLI::IsMember({"mean-minus-lambda-stddev", "best-mean", "min-regret"}));
  temporal->add_option("--lambda", lambda);
  temporal->add_flag("--lenient", lenient, "Evaluate short lists on all rows instead of failing");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic score file");
  std::string spec_path;
  bool desk = false;
  auto* spec_opt = synth->add_option("--spec", spec_path, "SynthSpec JSON");
  synth->add_flag("--desk-scale", desk, "Use the built-in 50,000-row five-group spec")->excludes(spec_opt);

  // serve
  auto* srv = app.add_subcommand("serve", "HTTP API over a loaded cohort");
  add_input(srv);
  int port = 8080;
  std::string host = "127.0.0.1", static_dir, cors = "*";
  srv->add_option("--port", port);
  srv->add_option("--host", host);
  srv->add_option("--static", static_dir, "Directory of built UI assets");
  srv->add_option("--cors-origin", cors);

  std::vector<const char*> argv{"fairsel"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    io.out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    io.out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    io.err << "error: " << e.what() << "\n" << app.help();
    return kExitValidation;
  }

  auto emit = [&](const std::string& content) {
    if (out_path.empty()) io.out << content;
    else write_text(out_path, content);
  };

  try {
    const auto format = parse_format(format_name);
    const TieBreak tie = tie_name == "seeded" ? TieBreak::seeded(seed) : TieBreak::by_entity_id();
    auto load = [&] {
      auto cohort = load_score_file(input, detail::ingest_config(config_path));
      if (attribute.empty()) {
        if (cohort.attributes.empty()) throw ValidationError("the score file declares no group attributes");
        attribute = cohort.attributes.front();
      } else {
        cohort.attribute_index(attribute);
      }
      return cohort;
    };

    if (*audit) {
      auto cohort = load();
      AuditOptions ao;
      if (!reference.empty()) ao.reference_group = reference;
      emit(render(audit_top_k(cohort, attribute, k, tie, ao), format));
    } else if (*bal) {
      auto cohort = load();
      BalanceSpec spec;
      spec.mode = mode == "proportional" ? BalanceMode::proportional : BalanceMode::equalized;
      if (bal_k) {
        spec.constraint = ConstraintKind::list_size;
        spec.list_size = *bal_k;
      } else if (recall) {
        spec.constraint = ConstraintKind::recall_target;
        spec.recall = *recall;
      } else if (ref_recall) {
        spec.constraint = ConstraintKind::reference_recall;
        spec.recall = *ref_recall;
      } else {
        throw ValidationError("balance needs one of --k, --recall, --ref-recall");
      }
      if (!reference.empty()) spec.reference_group = reference;
      spec.step = step;
      spec.search = search == "exact" ? SearchStrategy::exact_breakpoint : SearchStrategy::fixed_step;
      spec.trim = trim;
      spec.fit_to_budget = fit;
      spec.tie = tie;
      spec.validate();
      if (format == OutputFormat::json) {
        emit(dump(balance_document(cohort, attribute, spec)));
      } else {
        auto plan = balance(build_curves(cohort, attribute, tie), spec);
        if (format == OutputFormat::csv) {
          emit(render_plan_csv(plan));
        } else {
          std::ostringstream os;
          csv::write_row(os, {"scenario", "group", "metric", "value"});
          for (const auto& q : plan.groups) {
            fairsel::detail::plot_row(os, to_string(spec.mode), q.group, "count", static_cast<double>(q.k));
            fairsel::detail::plot_row(os, to_string(spec.mode), q.group, "recall", q.achieved_recall);
            fairsel::detail::plot_row(os, to_string(spec.mode), q.group, "target_recall", q.target_recall);
          }
          emit(os.str());
        }
      }
    } else if (*trade) {
      auto cohort = load();
      if (reference.empty()) {
        reference = default_reference_group(group_stats(cohort, partition_by_group(cohort, attribute)));
      }
      TradeoffOptions to;
      to.tie = tie;
      to.step = trade_step;
      to.search = trade_search == "exact" ? SearchStrategy::exact_breakpoint : SearchStrategy::fixed_step;
      emit(render(build_tradeoff_menu(cohort, attribute, trade_k, reference, to), format));
    } else if (*tree) {
      FairnessContext ctx;
      if (nature.empty()) {
        nature = detail::ask(io.in, io.err, "Is the program punitive or assistive? ");
        if (parse_nature(nature) == Nature::assistive) {
          scale = detail::ask(io.in, io.err, "Can it serve only a small fraction of need (small) or more (substantial)? ");
        }
        const bool small = parse_nature(nature) == Nature::assistive && parse_scale(scale) == Scale::small_fraction_of_need;
        if (!small) {
          focus = detail::ask(io.in, io.err,
                              parse_nature(nature) == Nature::punitive
                                  ? "Whose errors matter: everyone, intervened, or unwarranted? "
                                  : "Whose errors matter: everyone, unserved, or need? ");
        }
      }
      ctx.nature = parse_nature(nature);
      if (!scale.empty()) ctx.scale = parse_scale(scale);
      if (!focus.empty()) ctx.focus = parse_focus(focus);
      RecommendOptions ro;
      ro.selection_fraction = fraction;
      auto table = rules_path.empty() ? RuleTable::standard() : RuleTable::from_json(detail::read_json_file(rules_path));
      emit(dump(to_json(recommend_metric(ctx, table, ro), ctx)));
    } else if (*temporal) {
      TemporalConfig cfg;
      cfg.start = require_date(start);
      cfg.end = require_date(end);
      cfg.interval_months = interval;
      cfg.label_window_months = window;
      cfg.k = tk;
      cfg.validate();
      auto rule = SelectionRule::parse(rule_name, lambda);
      auto ingest = detail::ingest_config(config_path);
      if (!ingest.attribute_cols) ingest.attribute_cols = std::vector<std::string>{};
      Cohort all;
      for (const auto& path : inputs) {
        auto part = load_score_file(path, ingest);
        const auto stem = std::filesystem::path(path).stem().string();
        for (auto& e : part.examples) {
          if (!e.model_id) e.model_id = stem;
          e.group_values.clear();
        }
        all.examples.insert(all.examples.end(), std::make_move_iterator(part.examples.begin()),
                            std::make_move_iterator(part.examples.end()));
      }
      emit(render(run_temporal_eval(all, cfg, rule, lenient), format));
    } else if (*synth) {
      SynthSpec spec;
      if (desk) spec = desk_scale_spec();
      else if (!spec_path.empty()) spec = SynthSpec::from_json(detail::read_json_file(spec_path));
      else throw ValidationError("synth needs --spec or --desk-scale");
      if (seed_given) spec.seed = seed;
      std::ostringstream os;
      write_score_file(generate_population(spec), os);
      emit(os.str());
    } else if (*srv) {
      auto cohort = load();
      api::ServeOptions so;
      so.host = host;
      so.port = port;
      so.cors_origin = cors;
      if (!static_dir.empty()) so.static_dir = static_dir;
      io.err << "serving " << cohort.size() << " rows on http://" << host << ":" << port << "\n";
      api::serve(api::make_snapshot(std::move(cohort)), so);
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DataError& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, Streams{std::cout, std::cerr, std::cin});
}

}  // namespace fairsel::cli
