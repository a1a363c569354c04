#pragma once

// Read-only JSON API over one loaded cohort. Request handling is a pure
// function of (snapshot, request) so it can be exercised without sockets;
// serve() binds it to cpp-httplib.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "fairsel/data_model.hpp"
#include "fairsel/error.hpp"
#include "fairsel/group_metrics.hpp"
#include "fairsel/recall_balancer.hpp"
#include "fairsel/reporting.hpp"

namespace fairsel::api {

struct DatasetSnapshot {
  std::shared_ptr<const Cohort> cohort;
  std::string version;
  std::string summary_body;  // GET /api/dataset, rendered once
};

inline DatasetSnapshot make_snapshot(Cohort cohort) {
  DatasetSnapshot snap;
  auto shared = std::make_shared<const Cohort>(std::move(cohort));
  auto summary = dataset_summary(*shared);
  snap.version = shared->provenance.source + "@" + shared->provenance.ingested_at;
  summary["version"] = snap.version;
  snap.summary_body = dump(summary);
  snap.cohort = std::move(shared);
  return snap;
}

struct Request {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> params;
  std::string body;
};

struct Response {
  int status = 200;
  std::string body;
};

namespace detail {

inline Response error(int status, const std::string& message) {
  return {status, dump(nlohmann::json{{"error", message}, {"status", status}})};
}

inline std::optional<std::string> param(const Request& req, const std::string& name) {
  auto it = req.params.find(name);
  if (it == req.params.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

inline std::size_t parse_count(const std::string& name, const std::string& text) {
  std::size_t value = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || p != text.data() + text.size()) {
    throw ValidationError(name + " must be a non-negative integer, got '" + text + "'");
  }
  return value;
}

inline double parse_real(const std::string& name, const std::string& text) {
  auto v = parse_double(text);
  if (!v || !std::isfinite(*v)) throw ValidationError(name + " must be a number, got '" + text + "'");
  return *v;
}

inline TieBreak parse_tie(const std::optional<std::string>& kind, std::optional<std::uint64_t> seed) {
  if (!kind || *kind == "entity-id" || *kind == "by_entity_id") {
    return TieBreak::by_entity_id();
  }
  if (*kind == "seeded" || *kind == "seeded_random") return TieBreak::seeded(seed.value_or(0));
  throw ValidationError("tie_break must be 'entity-id' or 'seeded'");
}

inline std::string attribute_or_default(const Cohort& cohort, const std::optional<std::string>& attribute) {
  if (attribute) {
    cohort.attribute_index(*attribute);
    return *attribute;
  }
  if (cohort.attributes.empty()) throw ValidationError("the dataset declares no group attributes");
  return cohort.attributes.front();
}

inline TieBreak tie_from_params(const Request& req) {
  auto seed = param(req, "seed");
  return parse_tie(param(req, "tie_break"),
                   seed ? std::optional<std::uint64_t>(parse_count("seed", *seed)) : std::nullopt);
}

}  // namespace detail

// Build a BalanceSpec from the POST /api/balance body. Accepted layouts:
//   {"mode", "k" | "recall" | "ref_recall", "reference_group", "step", "search", "trim", "tie_break", "seed"}
// with constraint fields optionally nested under "constraint" and tuning fields under "options".
inline BalanceSpec balance_spec_from_json(const nlohmann::json& body) {
  if (!body.is_object()) throw ValidationError("request body must be a JSON object");
  nlohmann::json flat = body;
  for (const char* nested : {"constraint", "options"}) {
    if (body.contains(nested) && body[nested].is_object()) {
      for (auto it = body[nested].begin(); it != body[nested].end(); ++it) flat[it.key()] = it.value();
    }
  }
  BalanceSpec spec;
  try {
    const std::string mode = flat.value("mode", std::string("equalized"));
    if (mode == "equalized") spec.mode = BalanceMode::equalized;
    else if (mode == "proportional") spec.mode = BalanceMode::proportional;
    else throw ValidationError("mode must be 'equalized' or 'proportional'");

    int constraints = 0;
    if (flat.contains("k") && !flat["k"].is_null()) {
      if (!flat["k"].is_number_unsigned()) throw ValidationError("k must be a non-negative integer");
      spec.constraint = ConstraintKind::list_size;
      spec.list_size = flat["k"].get<std::size_t>();
      ++constraints;
    }
    if (flat.contains("recall") && !flat["recall"].is_null()) {
      spec.constraint = ConstraintKind::recall_target;
      spec.recall = flat["recall"].get<double>();
      ++constraints;
    }
    if (flat.contains("ref_recall") && !flat["ref_recall"].is_null()) {
      spec.constraint = ConstraintKind::reference_recall;
      spec.recall = flat["ref_recall"].get<double>();
      ++constraints;
    }
    if (constraints != 1) throw ValidationError("give exactly one of k, recall, ref_recall");
    if (flat.contains("reference_group") && !flat["reference_group"].is_null()) {
      spec.reference_group = flat["reference_group"].get<std::string>();
    }
    if (flat.contains("step")) spec.step = flat["step"].get<double>();
    if (flat.contains("search")) {
      const auto s = flat["search"].get<std::string>();
      if (s == "fixed-step" || s == "fixed_step") spec.search = SearchStrategy::fixed_step;
      else if (s == "exact" || s == "exact_breakpoint") spec.search = SearchStrategy::exact_breakpoint;
      else throw ValidationError("search must be 'fixed-step' or 'exact'");
    }
    spec.trim = flat.value("trim", false);
    spec.fit_to_budget = flat.value("fit_to_budget", false);
    std::optional<std::string> tie;
    if (flat.contains("tie_break")) tie = flat["tie_break"].get<std::string>();
    std::optional<std::uint64_t> seed;
    if (flat.contains("seed")) seed = flat["seed"].get<std::uint64_t>();
    spec.tie = detail::parse_tie(tie, seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid balance request: ") + e.what());
  }
  spec.validate();
  return spec;
}

inline Response handle_request(const DatasetSnapshot& snap, const Request& req) {
  const Cohort& cohort = *snap.cohort;
  try {
    if (req.path == "/api/dataset") {
      if (req.method != "GET") return detail::error(405, "use GET");
      return {200, snap.summary_body};
    }
    if (req.path == "/api/audit") {
      if (req.method != "GET") return detail::error(405, "use GET");
      auto attribute = detail::attribute_or_default(cohort, detail::param(req, "attribute"));
      auto k_text = detail::param(req, "k");
      if (!k_text) throw ValidationError("k is required");
      AuditOptions ao;
      ao.reference_group = detail::param(req, "reference");
      auto report = audit_top_k(cohort, attribute, detail::parse_count("k", *k_text), detail::tie_from_params(req), ao);
      return {200, render(report, OutputFormat::json)};
    }
    if (req.path == "/api/balance") {
      if (req.method != "POST") return detail::error(405, "use POST");
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body.empty() ? std::string("{}") : req.body);
      } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("malformed JSON body: ") + e.what());
      }
      auto spec = balance_spec_from_json(body);
      std::optional<std::string> attr;
      if (body.contains("attribute") && body["attribute"].is_string()) attr = body["attribute"].get<std::string>();
      auto attribute = detail::attribute_or_default(cohort, attr);
      return {200, dump(balance_document(cohort, attribute, spec))};
    }
    if (req.path == "/api/tradeoff") {
      if (req.method != "GET") return detail::error(405, "use GET");
      auto attribute = detail::attribute_or_default(cohort, detail::param(req, "attribute"));
      auto k_text = detail::param(req, "k");
      if (!k_text) throw ValidationError("k is required");
      auto reference = detail::param(req, "reference");
      if (!reference) reference = default_reference_group(group_stats(cohort, partition_by_group(cohort, attribute)));
      TradeoffOptions to;
      to.tie = detail::tie_from_params(req);
      if (auto s = detail::param(req, "step")) to.step = detail::parse_real("step", *s);
      if (auto s = detail::param(req, "search")) {
        if (*s == "exact") to.search = SearchStrategy::exact_breakpoint;
        else if (*s != "fixed-step") throw ValidationError("search must be 'fixed-step' or 'exact'");
      }
      auto menu = build_tradeoff_menu(cohort, attribute, detail::parse_count("k", *k_text), *reference, to);
      return {200, render(menu, OutputFormat::json)};
    }
    if (req.path == "/api/curve") {
      if (req.method != "GET") return detail::error(405, "use GET");
      auto attribute = detail::attribute_or_default(cohort, detail::param(req, "attribute"));
      auto get = [&](const char* name, std::size_t fallback) {
        auto v = detail::param(req, name);
        return v ? detail::parse_count(name, *v) : fallback;
      };
      const std::size_t kmin = get("kmin", 1);
      const std::size_t kmax = get("kmax", std::min<std::size_t>(cohort.size(), 1000));
      const std::size_t stride = get("stride", 1);
      return {200, dump(sweep_top_k(cohort, attribute, kmin, kmax, stride, detail::tie_from_params(req)))};
    }
    return detail::error(404, "unknown endpoint '" + req.path + "'");
  } catch (const ValidationError& e) {
    return detail::error(400, e.what());
  } catch (const DataError& e) {
    return detail::error(422, e.what());
  }
}

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "*";
  std::optional<std::string> static_dir;  // built UI assets
};

inline void install_routes(httplib::Server& server, std::shared_ptr<const DatasetSnapshot> snap,
                           const ServeOptions& options) {
  auto bridge = [snap, origin = options.cors_origin](const httplib::Request& hreq, httplib::Response& hres) {
    Request req;
    req.method = hreq.method;
    req.path = hreq.path;
    for (const auto& [k, v] : hreq.params) req.params[k] = v;
    req.body = hreq.body;
    auto res = handle_request(*snap, req);
    hres.status = res.status;
    hres.set_header("Access-Control-Allow-Origin", origin);
    hres.set_content(res.body, "application/json");
  };
  server.Get(R"(/api/.*)", bridge);
  server.Post(R"(/api/.*)", bridge);
  server.Options(R"(/api/.*)", [origin = options.cors_origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  if (options.static_dir && !server.set_mount_point("/", *options.static_dir)) {
    throw DataError("static asset directory '" + *options.static_dir + "' does not exist");
  }
}

// Blocks until the server stops.
inline void serve(DatasetSnapshot snapshot, const ServeOptions& options) {
  httplib::Server server;
  install_routes(server, std::make_shared<const DatasetSnapshot>(std::move(snapshot)), options);
  if (!server.listen(options.host, options.port)) {
    throw DataError("cannot listen on " + options.host + ":" + std::to_string(options.port));
  }
}

}  // namespace fairsel::api
