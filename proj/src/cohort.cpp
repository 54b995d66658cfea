#include "riskfuse/cohort.hpp"

#include "riskfuse/errors.hpp"
#include "riskfuse/json_io.hpp"

namespace riskfuse {

std::string_view to_string(EventType e) {
  switch (e) {
    case EventType::breast: return "breast";
    case EventType::death: return "death";
    default: return "none";
  }
}

EventType event_from_string(std::string_view s) {
  if (s == "breast") return EventType::breast;
  if (s == "death") return EventType::death;
  if (s == "none") return EventType::none;
  throw ValidationError("unknown event type '" + std::string(s) + "'");
}

json cohort_record_to_json(const CohortRecord& r) {
  json j;
  j["id"] = r.id;
  j["pedigree"] = serialize_pedigree(r.pedigree);
  j["risk_factors"] = serialize_risk_factors(r.risk_factors);
  j["baseline_age"] = r.baseline_age;
  j["follow_up"] = r.follow_up;
  j["event"] = std::string(to_string(r.event));
  if (!r.split.empty()) j["split"] = r.split;
  if (!r.center.empty()) j["center"] = r.center;
  if (!r.latent_genotypes.empty()) j["latent_genotypes"] = r.latent_genotypes;
  return j;
}

CohortRecord cohort_record_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("cohort record must be an object");
  for (const char* key : {"id", "pedigree", "follow_up", "event"})
    if (!j.contains(key)) throw ValidationError(std::string("cohort record missing '") + key + "'");
  auto parsed = parse_pedigree(j.at("pedigree"));
  std::string id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
  auto rf = parse_risk_factors(j.value("risk_factors", json::object()), &parsed.pedigree);
  CohortRecord r{id, std::move(parsed.pedigree), rf, 0, 0.0, EventType::none, {}, {}, {}};
  r.baseline_age = j.value("baseline_age", r.pedigree.proband().current_age_or_death_age);
  if (!j.at("follow_up").is_number()) throw ValidationError("follow_up must be a number");
  r.follow_up = j.at("follow_up").get<double>();
  if (!(r.follow_up >= 0.0)) throw ValidationError("follow_up must be non-negative");
  r.event = event_from_string(j.at("event").get<std::string>());
  r.split = j.value("split", std::string());
  r.center = j.value("center", std::string());
  if (j.contains("latent_genotypes")) r.latent_genotypes = j.at("latent_genotypes").get<std::vector<int>>();
  return r;
}

std::vector<CohortRecord> read_cohort(const std::filesystem::path& file) {
  std::vector<CohortRecord> out;
  auto docs = read_ndjson(file);
  out.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    try {
      out.push_back(cohort_record_from_json(docs[i]));
    } catch (const Error& e) {
      throw ValidationError(file.string() + " record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::string cohort_to_ndjson(std::span<const CohortRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += dump17(cohort_record_to_json(r));
    out += '\n';
  }
  return out;
}

bool case_by(const CohortRecord& r, double tau) { return r.event == EventType::breast && r.follow_up <= tau; }

bool status_known(const CohortRecord& r, double tau) {
  return r.follow_up >= tau || r.event != EventType::none;
}

StratumKey make_stratum_key(std::string_view name, const StratumRules& rules) {
  if (name.empty() || name == "none") return [](const CohortRecord&) { return std::string(); };
  if (name == "center") return [](const CohortRecord& r) { return r.center; };
  if (name == "family_history")
    return [rules](const CohortRecord& r) { return std::string(to_string(stratify_family_history(r.pedigree, rules))); };
  throw ValidationError("unknown strata key '" + std::string(name) + "' (expected none, center or family_history)");
}

}  // namespace riskfuse
