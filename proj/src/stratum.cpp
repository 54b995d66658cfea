#include "riskfuse/errors.hpp"
#include "riskfuse/pedigree.hpp"

namespace riskfuse {

std::string_view to_string(Stratum s) { return s == Stratum::strong ? "strong" : "less"; }

namespace {

CancerSite parse_site(const json& rule) {
  auto it = rule.find("cancer");
  if (it == rule.end() || !it->is_string()) throw ValidationError("stratum rule needs a 'cancer' string");
  auto s = it->get<std::string>();
  if (s == "breast") return CancerSite::breast;
  if (s == "ovarian") return CancerSite::ovarian;
  throw ValidationError("unknown cancer '" + s + "' in stratum rule");
}

int int_field(const json& rule, const char* key, int fallback, bool required) {
  auto it = rule.find(key);
  if (it == rule.end()) {
    if (required) throw ValidationError(std::string("stratum rule needs integer '") + key + "'");
    return fallback;
  }
  if (!it->is_number_integer()) throw ValidationError(std::string("stratum rule field '") + key + "' must be an integer");
  return it->get<int>();
}

}  // namespace

StratumRules parse_stratum_rules(const json& document) {
  if (!document.is_object()) throw ValidationError("stratum rules must be an object");
  StratumRules out;
  out.version = int_field(document, "version", 1, false);
  auto it = document.find("rules");
  if (it == document.end() || !it->is_array()) throw ValidationError("stratum rules need a 'rules' array");
  for (const auto& r : *it) {
    if (!r.is_object() || !r.contains("kind") || !r["kind"].is_string())
      throw ValidationError("stratum rule needs a 'kind' string");
    StratumRule rule;
    auto kind = r["kind"].get<std::string>();
    rule.cancer = parse_site(r);
    rule.max_degree = int_field(r, "max_degree", 2, false);
    if (kind == "any_cancer") {
      rule.kind = StratumRule::Kind::any_cancer;
    } else if (kind == "onset_at_most") {
      rule.kind = StratumRule::Kind::onset_at_most;
      rule.age = int_field(r, "age", 0, true);
    } else if (kind == "count_at_least") {
      rule.kind = StratumRule::Kind::count_at_least;
      rule.count = int_field(r, "count", 0, true);
    } else {
      throw ValidationError("unknown stratum rule kind '" + kind + "'");
    }
    out.rules.push_back(rule);
  }
  return out;
}

StratumRules default_stratum_rules() {
  StratumRules r;
  r.rules.push_back({StratumRule::Kind::any_cancer, CancerSite::ovarian, 0, 0, 2});
  r.rules.push_back({StratumRule::Kind::onset_at_most, CancerSite::breast, 50, 0, 2});
  r.rules.push_back({StratumRule::Kind::count_at_least, CancerSite::breast, 0, 2, 2});
  return r;
}

Stratum stratify_family_history(const Pedigree& p, const StratumRules& rules) {
  for (const auto& rule : rules.rules) {
    int hits = 0;
    for (const auto& m : p.members()) {
      int degree = relation_degree(m.relation);
      if (degree == 0 || degree > rule.max_degree) continue;
      const auto& onset = rule.cancer == CancerSite::breast ? m.breast_cancer : m.ovarian_cancer;
      if (!onset) continue;
      switch (rule.kind) {
        case StratumRule::Kind::any_cancer:
          return Stratum::strong;
        case StratumRule::Kind::onset_at_most:
          if (*onset <= rule.age) return Stratum::strong;
          break;
        case StratumRule::Kind::count_at_least:
          if (++hits >= rule.count) return Stratum::strong;
          break;
      }
    }
  }
  return Stratum::less;
}

}  // namespace riskfuse
