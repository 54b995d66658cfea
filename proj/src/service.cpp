#include "riskfuse/service.hpp"

#include <algorithm>

#include "httplib.h"
#include "riskfuse/errors.hpp"
#include "riskfuse/manifest.hpp"

namespace riskfuse {

RequestError::RequestError(std::vector<FieldIssue> issues)
    : ValidationError(issues.empty() ? "invalid request" : issues.front().path + ": " + issues.front().message),
      issues_(std::move(issues)) {}

namespace {

[[noreturn]] void fail(std::string path, std::string message, std::optional<int> member = std::nullopt) {
  throw RequestError({{std::move(path), std::move(message), member}});
}

// Re-throws a ValidationError raised while parsing `field` as a field issue.
template <class F>
auto field_guard(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const RequestError&) {
    throw;
  } catch (const ValidationError& e) {
    std::string path = field;
    if (e.member_id()) path += ".members[id=" + std::to_string(*e.member_id()) + "]";
    fail(path, e.what(), e.member_id());
  } catch (const json::exception& e) {
    fail(field, e.what());
  }
}

std::vector<int> parse_taus(const json& v, const std::string& path) {
  std::vector<int> taus;
  if (v.is_number_integer()) {
    taus.push_back(v.get<int>());
  } else if (v.is_array() && !v.empty()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) fail(path + "[" + std::to_string(i) + "]", "must be an integer");
      taus.push_back(v[i].get<int>());
    }
  } else {
    fail(path, "must be an integer or a non-empty array of integers");
  }
  for (std::size_t i = 0; i < taus.size(); ++i)
    if (taus[i] < 1 || taus[i] > kMaxAge) fail(path + "[" + std::to_string(i) + "]", "horizon must be in 1..94");
  return taus;
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    fail("$", std::string("body is not valid JSON: ") + e.what());
  }
}

json error_body(const RequestError& e) {
  json fields = json::array();
  for (const auto& f : e.issues()) {
    json j{{"path", f.path}, {"message", f.message}};
    if (f.member_id) j["member_id"] = *f.member_id;
    fields.push_back(std::move(j));
  }
  return {{"schema_version", kServiceSchemaVersion}, {"error", "validation"}, {"message", e.what()}, {"fields", fields}};
}

ServiceResponse respond(int status, const json& body) { return {status, dump17(body)}; }

template <class F>
ServiceResponse guarded(F&& f) {
  try {
    return f();
  } catch (const RequestError& e) {
    return respond(400, error_body(e));
  } catch (const ValidationError& e) {
    return respond(400, error_body(RequestError({{"$", e.what(), e.member_id()}})));
  } catch (const EligibilityError& e) {
    return respond(422, {{"schema_version", kServiceSchemaVersion}, {"error", "eligibility"}, {"message", e.what()}});
  } catch (const DomainError& e) {
    return respond(422, {{"schema_version", kServiceSchemaVersion}, {"error", "domain"}, {"message", e.what()}});
  } catch (const Error& e) {
    return respond(500, {{"schema_version", kServiceSchemaVersion}, {"error", e.kind()}, {"message", e.what()}});
  } catch (const std::exception& e) {
    return respond(500, {{"schema_version", kServiceSchemaVersion}, {"error", "internal"}, {"message", e.what()}});
  }
}

json find_member(json& pedigree, int id, const std::string& path) {
  auto& members = pedigree.at("members");
  for (std::size_t i = 0; i < members.size(); ++i)
    if (members[i].value("id", -1) == id) return json(i);
  fail(path, "no member with id " + std::to_string(id));
}

// Applies one what-if delta to a copy of the base request document.
json apply_delta(json request, const json& delta, const std::string& path) {
  if (!delta.is_object()) fail(path, "delta must be an object");
  const auto op = delta.value("op", std::string());
  auto& pedigree = request["pedigree"];
  if (!pedigree.is_object() || !pedigree.contains("members") || !pedigree["members"].is_array())
    fail("base.pedigree", "must be an object with a members array");
  auto& members = pedigree["members"];
  auto need = [&](const char* key) -> const json& {
    auto it = delta.find(key);
    if (it == delta.end()) fail(path + "." + key, "missing");
    return *it;
  };
  auto need_int = [&](const char* key) {
    const json& v = need(key);
    if (!v.is_number_integer()) fail(path + "." + key, "must be an integer");
    return v.get<int>();
  };

  if (op == "add_relative") {
    json relative = need("relative");
    if (!relative.is_object()) fail(path + ".relative", "must be an object");
    if (!relative.contains("id")) {
      int next = 0;
      for (const auto& m : members) next = std::max(next, m.value("id", 0) + 1);
      relative["id"] = next;
    }
    members.push_back(std::move(relative));
  } else if (op == "remove_relative") {
    const int id = need_int("id");
    const auto i = find_member(pedigree, id, path + ".id").get<std::size_t>();
    if (i == 0) fail(path + ".id", "the proband cannot be removed");
    members.erase(members.begin() + static_cast<std::ptrdiff_t>(i));
  } else if (op == "update_relative") {
    const int id = need_int("id");
    const json& fields = need("fields");
    if (!fields.is_object()) fail(path + ".fields", "must be an object");
    if (fields.contains("id")) fail(path + ".fields.id", "member ids cannot change");
    const auto i = find_member(pedigree, id, path + ".id").get<std::size_t>();
    members[i].merge_patch(fields);
  } else if (op == "set_risk_factor") {
    const json& field = need("field");
    if (!field.is_string()) fail(path + ".field", "must be a string");
    if (field.get<std::string>() == "affected_first_degree")
      fail(path + ".field", "affected_first_degree follows the pedigree; edit relatives instead");
    if (!request["risk_factors"].is_object()) request["risk_factors"] = json::object();
    request["risk_factors"][field.get<std::string>()] = need("value");
  } else if (op == "set_tau") {
    request["taus"] = need("taus");
  } else if (op == "set_age") {
    request["age"] = need_int("age");
  } else {
    fail(path + ".op", "unknown delta '" + op +
                           "' (expected add_relative, remove_relative, update_relative, set_risk_factor, set_tau or "
                           "set_age)");
  }
  // X4 is re-derived from the edited pedigree
  if (request["risk_factors"].is_object()) request["risk_factors"].erase("affected_first_degree");
  return request;
}

}  // namespace

ScoreRequest parse_score_request(const json& body) {
  if (!body.is_object()) fail("$", "request must be a JSON object");
  if (auto v = body.find("schema_version"); v != body.end() && *v != kServiceSchemaVersion)
    fail("schema_version", "unsupported schema version");
  ScoreRequest r;
  auto ped = body.find("pedigree");
  if (ped == body.end() || !ped->is_object()) fail("pedigree", "required object");
  r.pedigree = *ped;
  if (auto rf = body.find("risk_factors"); rf != body.end() && !rf->is_null()) {
    if (!rf->is_object()) fail("risk_factors", "must be an object");
    r.risk_factors = *rf;
  } else {
    r.risk_factors = json::object();
  }
  if (auto a = body.find("age"); a != body.end() && !a->is_null()) {
    if (!a->is_number_integer()) fail("age", "must be an integer");
    r.age = a->get<int>();
    if (*r.age < 1 || *r.age > kMaxAge) fail("age", "must be in 1..94");
  }
  if (auto t = body.find("taus"); t != body.end()) {
    r.taus = parse_taus(*t, "taus");
  } else if (auto t1 = body.find("tau"); t1 != body.end()) {
    r.taus = parse_taus(*t1, "tau");
  } else {
    fail("taus", "required");
  }
  if (auto m = body.find("models"); m != body.end() && !m->is_null()) {
    if (!m->is_array()) fail("models", "must be an array of model names");
    for (std::size_t i = 0; i < m->size(); ++i) {
      if (!(*m)[i].is_string()) fail("models[" + std::to_string(i) + "]", "must be a string");
      r.models.push_back((*m)[i].get<std::string>());
    }
  }
  return r;
}

ScoringService::ScoringService(const ParameterSet& params, std::vector<ModelSpec> extra_models)
    : params_(params), scorer_(params) {
  for (const char* name : {"brcapro", "bcrat", "combined_m"}) models_.push_back(builtin_model(name));
  for (auto& m : extra_models) models_.push_back(std::move(m));
}

json ScoringService::score_json(const ScoreRequest& request) const {
  auto parsed = field_guard("pedigree", [&] { return parse_pedigree(request.pedigree); });
  const Pedigree& pedigree = parsed.pedigree;
  const auto rf = field_guard("risk_factors", [&] { return parse_risk_factors(request.risk_factors, &pedigree); });

  std::vector<const ModelSpec*> chosen;
  if (request.models.empty()) {
    for (const auto& m : models_) chosen.push_back(&m);
  } else {
    for (std::size_t i = 0; i < request.models.size(); ++i) {
      auto it = std::find_if(models_.begin(), models_.end(), [&](const ModelSpec& m) { return m.name == request.models[i]; });
      if (it == models_.end()) fail("models[" + std::to_string(i) + "]", "unknown model '" + request.models[i] + "'");
      chosen.push_back(&*it);
    }
  }

  const auto prepared = scorer_.prepare(pedigree, rf, request.age);
  json results = json::array(), ineligible = json::array();
  for (const auto* m : chosen)
    for (int tau : request.taus) {
      if (auto why = scorer_.ineligibility(*m, prepared, tau)) {
        ineligible.push_back({{"model", m->name}, {"tau", tau}, {"reason", *why}});
        continue;
      }
      results.push_back({{"model", m->name}, {"tau", tau}, {"risk", scorer_.score(*m, prepared, tau)}});
    }
  return {{"schema_version", kServiceSchemaVersion},
          {"parameter_set", params_.name + "@" + params_.version},
          {"proband_id", pedigree.proband().id},
          {"age", prepared.age},
          {"taus", request.taus},
          {"risk_factors", serialize_risk_factors(rf)},
          {"results", std::move(results)},
          {"ineligible", std::move(ineligible)},
          {"warnings", parsed.warnings}};
}

ServiceResponse ScoringService::health() const {
  return respond(200, {{"status", "ok"}, {"version", kToolVersion}});
}

ServiceResponse ScoringService::models() const {
  json list = json::array();
  for (const auto& m : models_) {
    json j{{"name", m.name}, {"uses_relative_hazard", m.uses_relative_hazard()}};
    switch (m.kind) {
      case ModelKind::brcapro: j["kind"] = "mendelian"; break;
      case ModelKind::bcrat: j["kind"] = "relative_hazard"; break;
      case ModelKind::combined_m: j["kind"] = "combined"; break;
      case ModelKind::ensemble:
        j["kind"] = "ensemble";
        j["ensemble_kind"] = m.ensemble->kind == EnsembleKind::fixed_horizon ? "fixed_horizon" : "time_varying";
        j["tau_grid"] = m.ensemble->tau_grid;
        break;
    }
    list.push_back(std::move(j));
  }
  return respond(200, {{"schema_version", kServiceSchemaVersion},
                       {"parameter_set", {{"name", params_.name}, {"version", params_.version}, {"checksums", params_.checksums}}},
                       {"models", std::move(list)}});
}

ServiceResponse ScoringService::score(const std::string& body) const {
  return guarded([&] {
    const auto request = parse_score_request(parse_body(body));
    auto out = score_json(request);
    // explicitly requested models must all be servable
    if (!request.models.empty() && !out["ineligible"].empty()) {
      return respond(422, {{"schema_version", kServiceSchemaVersion},
                           {"error", "eligibility"},
                           {"message", "requested model is not applicable to this proband"},
                           {"ineligible", out["ineligible"]}});
    }
    return respond(200, out);
  });
}

ServiceResponse ScoringService::whatif(const std::string& body) const {
  return guarded([&] {
    const json doc = parse_body(body);
    if (!doc.is_object()) fail("$", "request must be a JSON object");
    auto base_it = doc.find("base");
    if (base_it == doc.end()) fail("base", "required object");
    json deltas = doc.value("deltas", json::array());
    if (!deltas.is_array()) fail("deltas", "must be an array");

    const ScoreRequest base_request = [&] {
      try {
        return parse_score_request(*base_it);
      } catch (const RequestError& e) {
        auto issues = e.issues();
        for (auto& f : issues) f.path = "base." + f.path;
        throw RequestError(std::move(issues));
      }
    }();
    json baseline = [&] {
      try {
        return score_json(base_request);
      } catch (const RequestError& e) {
        auto issues = e.issues();
        for (auto& f : issues) f.path = "base." + f.path;
        throw RequestError(std::move(issues));
      }
    }();
    if (!base_request.models.empty() && !baseline["ineligible"].empty()) {
      return respond(422, {{"schema_version", kServiceSchemaVersion},
                           {"error", "eligibility"},
                           {"message", "requested model is not applicable to this proband"},
                           {"ineligible", baseline["ineligible"]}});
    }

    json rows = json::array();
    rows.push_back({{"label", "baseline"}, {"delta", nullptr}, {"response", baseline}});
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      const std::string path = "deltas[" + std::to_string(i) + "]";
      const json edited = apply_delta(*base_it, deltas[i], path);
      json response;
      try {
        response = score_json(parse_score_request(edited));
      } catch (const RequestError& e) {
        auto issues = e.issues();
        for (auto& f : issues) f.path = path + "." + f.path;
        throw RequestError(std::move(issues));
      }
      json difference = json::array();
      for (const auto& r : response["results"])
        for (const auto& b : baseline["results"])
          if (b["model"] == r["model"] && b["tau"] == r["tau"])
            difference.push_back({{"model", r["model"]},
                                  {"tau", r["tau"]},
                                  {"difference", r["risk"].get<double>() - b["risk"].get<double>()}});
      const std::string label =
          deltas[i].contains("label") && deltas[i]["label"].is_string() ? deltas[i]["label"].get<std::string>()
                                                                        : deltas[i].value("op", std::string("delta"));
      rows.push_back({{"label", label}, {"delta", deltas[i]}, {"response", std::move(response)}, {"difference", difference}});
    }
    return respond(200, {{"schema_version", kServiceSchemaVersion}, {"rows", std::move(rows)}});
  });
}

ServiceResponse ScoringService::handle(const std::string& method, const std::string& path, const std::string& body) const {
  struct Route {
    const char* path;
    const char* method;
  };
  static constexpr Route routes[] = {{"/health", "GET"}, {"/models", "GET"}, {"/score", "POST"}, {"/whatif", "POST"}};
  for (const auto& r : routes) {
    if (path != r.path) continue;
    if (method != r.method)
      return respond(405, {{"schema_version", kServiceSchemaVersion}, {"error", "method_not_allowed"},
                           {"message", std::string("use ") + r.method + " " + r.path}});
    if (path == "/health") return health();
    if (path == "/models") return models();
    if (path == "/score") return score(body);
    return whatif(body);
  }
  return respond(404, {{"schema_version", kServiceSchemaVersion}, {"error", "not_found"}, {"message", path}});
}

void run_server(const ScoringService& service, const std::string& host, int port) {
  httplib::Server server;
  auto bind = [&](const std::string& method) {
    return [&service, method](const httplib::Request& req, httplib::Response& res) {
      const auto out = service.handle(method, req.path, req.body);
      res.status = out.status;
      res.set_content(out.body, "application/json");
    };
  };
  for (const char* p : {"/health", "/models", "/score", "/whatif"}) {
    server.Get(p, bind("GET"));
    server.Post(p, bind("POST"));
  }
  if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace riskfuse
