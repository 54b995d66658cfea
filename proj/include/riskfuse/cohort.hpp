#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskfuse/pedigree.hpp"

namespace riskfuse {

enum class EventType { none, breast, death };
std::string_view to_string(EventType e);
EventType event_from_string(std::string_view s);

/// One proband with follow-up. `follow_up` is measured in years from the
/// baseline age; an event of type none means censored (or still event-free)
/// at `follow_up`.
struct CohortRecord {
  std::string id;
  Pedigree pedigree;
  RiskFactors risk_factors;
  int baseline_age = 0;
  double follow_up = 0.0;
  EventType event = EventType::none;
  std::string split;   // "train", "validation" or empty
  std::string center;  // optional censoring stratum
  std::vector<int> latent_genotypes;  // simulation only, parallel to pedigree members
};

json cohort_record_to_json(const CohortRecord& r);
CohortRecord cohort_record_from_json(const json& j);

std::vector<CohortRecord> read_cohort(const std::filesystem::path& file);
std::string cohort_to_ndjson(std::span<const CohortRecord> records);

/// Breast cancer observed within tau years of baseline.
bool case_by(const CohortRecord& r, double tau);
/// Outcome at tau is known: a case, a death before tau, or followed through tau.
bool status_known(const CohortRecord& r, double tau);

/// Censoring-stratum key function.
using StratumKey = std::function<std::string(const CohortRecord&)>;

/// "none", "center" or "family_history" (with the given rules).
StratumKey make_stratum_key(std::string_view name, const StratumRules& rules);

}  // namespace riskfuse
