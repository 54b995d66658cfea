#include "riskfuse/pedigree.hpp"

#include <algorithm>
#include <set>

#include "riskfuse/errors.hpp"

namespace riskfuse {

namespace {

struct RelationInfo {
  Relation relation;
  std::string_view name;
  int degree;
  Sex sex;
};

constexpr std::array<RelationInfo, 15> kRelations{{
    {Relation::proband, "proband", 0, Sex::female},
    {Relation::mother, "mother", 1, Sex::female},
    {Relation::father, "father", 1, Sex::male},
    {Relation::sister, "sister", 1, Sex::female},
    {Relation::brother, "brother", 1, Sex::male},
    {Relation::daughter, "daughter", 1, Sex::female},
    {Relation::son, "son", 1, Sex::male},
    {Relation::maternal_grandmother, "maternal_grandmother", 2, Sex::female},
    {Relation::maternal_grandfather, "maternal_grandfather", 2, Sex::male},
    {Relation::paternal_grandmother, "paternal_grandmother", 2, Sex::female},
    {Relation::paternal_grandfather, "paternal_grandfather", 2, Sex::male},
    {Relation::maternal_aunt, "maternal_aunt", 2, Sex::female},
    {Relation::maternal_uncle, "maternal_uncle", 2, Sex::male},
    {Relation::paternal_aunt, "paternal_aunt", 2, Sex::female},
    {Relation::paternal_uncle, "paternal_uncle", 2, Sex::male},
}};

const RelationInfo& info(Relation r) { return kRelations[static_cast<std::size_t>(r)]; }

constexpr std::array<std::string_view, 6> kRaceNames{"white",    "black",           "hispanic",
                                                     "asian",    "native_american", "unknown"};
constexpr std::array<std::string_view, 4> kTestNames{"BRCA1+", "BRCA2+", "both+", "negative"};

bool is_singleton(Relation r) {
  switch (r) {
    case Relation::proband:
    case Relation::mother:
    case Relation::father:
    case Relation::maternal_grandmother:
    case Relation::maternal_grandfather:
    case Relation::paternal_grandmother:
    case Relation::paternal_grandfather:
      return true;
    default:
      return false;
  }
}

void check_age_field(const Relative& m, const std::optional<int>& v, std::string_view field) {
  if (!v) return;
  if (*v < 1 || *v > kMaxAge)
    throw ValidationError(std::string(field) + " must lie in [1, 94]", m.id);
  if (*v > m.current_age_or_death_age)
    throw ValidationError(std::string(field) + " exceeds current_age_or_death_age", m.id);
}

void validate_member(const Relative& m) {
  if (m.current_age_or_death_age < 1 || m.current_age_or_death_age > kMaxAge)
    throw ValidationError("current_age_or_death_age must lie in [1, 94]", m.id);
  if (m.sex != info(m.relation).sex)
    throw ValidationError("sex does not match relation " + std::string(info(m.relation).name), m.id);
  check_age_field(m, m.breast_cancer, "breast_cancer");
  check_age_field(m, m.ovarian_cancer, "ovarian_cancer");
  check_age_field(m, m.prophylactic_mastectomy_age, "prophylactic_mastectomy_age");
  check_age_field(m, m.prophylactic_oophorectomy_age, "prophylactic_oophorectomy_age");
  if (m.sex == Sex::male && (m.ovarian_cancer || m.prophylactic_oophorectomy_age))
    throw ValidationError("ovarian fields are not allowed for males", m.id);
  if (m.breast_cancer && m.prophylactic_mastectomy_age && *m.breast_cancer > *m.prophylactic_mastectomy_age)
    throw ValidationError("breast_cancer onset after prophylactic mastectomy", m.id);
  if (m.ovarian_cancer && m.prophylactic_oophorectomy_age &&
      *m.ovarian_cancer > *m.prophylactic_oophorectomy_age)
    throw ValidationError("ovarian_cancer onset after prophylactic oophorectomy", m.id);
}

// --- JSON field helpers ----------------------------------------------------

const json& require(const json& obj, const char* key, std::optional<int> id) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(std::string("missing field '") + key + "'", id);
  return *it;
}

int as_int(const json& v, const char* key, std::optional<int> id) {
  if (!v.is_number_integer())
    throw ValidationError(std::string("field '") + key + "' must be an integer", id);
  return v.get<int>();
}

std::string as_string(const json& v, const char* key, std::optional<int> id) {
  if (!v.is_string()) throw ValidationError(std::string("field '") + key + "' must be a string", id);
  return v.get<std::string>();
}

std::optional<int> optional_int(const json& obj, const char* key, std::optional<int> id) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return as_int(*it, key, id);
}

std::optional<int> clamp_age(std::optional<int> v, const char* key, int id, std::vector<std::string>& warnings) {
  if (v && *v > kMaxAge) {
    warnings.push_back("member " + std::to_string(id) + ": " + key + " " + std::to_string(*v) +
                       " clamped to 94");
    return kMaxAge;
  }
  return v;
}

Relative parse_member(const json& m, std::vector<std::string>& warnings) {
  if (!m.is_object()) throw ValidationError("member entries must be objects");
  std::optional<int> id;
  if (auto it = m.find("id"); it != m.end() && it->is_number_integer()) id = it->get<int>();
  Relative r;
  r.id = as_int(require(m, "id", id), "id", id);

  auto rel_name = as_string(require(m, "relation", id), "relation", id);
  auto rel = relation_from_string(rel_name);
  if (!rel) throw ValidationError("unknown relation '" + rel_name + "'", id);
  r.relation = *rel;

  auto sex = as_string(require(m, "sex", id), "sex", id);
  if (sex == "female")
    r.sex = Sex::female;
  else if (sex == "male")
    r.sex = Sex::male;
  else
    throw ValidationError("unknown sex '" + sex + "'", id);

  r.current_age_or_death_age =
      *clamp_age(as_int(require(m, "current_age_or_death_age", id), "current_age_or_death_age", id),
                 "current_age_or_death_age", r.id, warnings);

  const json& alive = require(m, "alive", id);
  if (!alive.is_boolean()) throw ValidationError("field 'alive' must be a boolean", id);
  r.alive = alive.get<bool>();

  r.breast_cancer = clamp_age(optional_int(m, "breast_cancer", id), "breast_cancer", r.id, warnings);
  r.ovarian_cancer = clamp_age(optional_int(m, "ovarian_cancer", id), "ovarian_cancer", r.id, warnings);
  r.prophylactic_mastectomy_age =
      clamp_age(optional_int(m, "prophylactic_mastectomy_age", id), "prophylactic_mastectomy_age", r.id, warnings);
  r.prophylactic_oophorectomy_age = clamp_age(optional_int(m, "prophylactic_oophorectomy_age", id),
                                              "prophylactic_oophorectomy_age", r.id, warnings);

  if (auto it = m.find("genetic_test"); it != m.end() && !it->is_null()) {
    auto t = as_string(*it, "genetic_test", id);
    auto pos = std::find(kTestNames.begin(), kTestNames.end(), t);
    if (pos == kTestNames.end()) throw ValidationError("unknown genetic_test '" + t + "'", id);
    r.genetic_test = static_cast<GeneticTest>(pos - kTestNames.begin());
  }

  if (auto it = m.find("ethnicity_flags"); it != m.end() && !it->is_null()) {
    if (!it->is_object()) throw ValidationError("field 'ethnicity_flags' must be an object", id);
    if (auto a = it->find("ashkenazi"); a != it->end()) {
      if (!a->is_boolean()) throw ValidationError("field 'ashkenazi' must be a boolean", id);
      r.ashkenazi = a->get<bool>();
    }
  }

  if (auto it = m.find("race"); it != m.end() && !it->is_null()) {
    auto name = as_string(*it, "race", id);
    auto race = race_from_string(name);
    if (!race) throw ValidationError("unknown race '" + name + "'", id);
    r.race = *race;
  }
  return r;
}

}  // namespace

std::string_view to_string(Relation r) { return info(r).name; }
std::string_view to_string(Sex s) { return s == Sex::female ? "female" : "male"; }
std::string_view to_string(Race r) { return kRaceNames[static_cast<std::size_t>(r)]; }
std::string_view to_string(GeneticTest t) { return kTestNames[static_cast<std::size_t>(t)]; }

std::optional<Relation> relation_from_string(std::string_view s) {
  for (const auto& ri : kRelations)
    if (ri.name == s) return ri.relation;
  return std::nullopt;
}

std::optional<Race> race_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kRaceNames.size(); ++i)
    if (kRaceNames[i] == s) return static_cast<Race>(i);
  return std::nullopt;
}

int relation_degree(Relation r) { return info(r).degree; }
Sex relation_sex(Relation r) { return info(r).sex; }

Pedigree::Pedigree(std::vector<Relative> members) : members_(std::move(members)) {
  if (members_.empty()) throw ValidationError("pedigree has no members");
  std::set<int> ids;
  std::array<int, kRelations.size()> seen{};
  for (const auto& m : members_) {
    if (!ids.insert(m.id).second) throw ValidationError("duplicate member id", m.id);
    validate_member(m);
    auto& count = seen[static_cast<std::size_t>(m.relation)];
    if (++count > 1 && is_singleton(m.relation)) {
      if (m.relation == Relation::proband) throw ValidationError("pedigree has more than one proband", m.id);
      throw ValidationError("more than one " + std::string(to_string(m.relation)), m.id);
    }
  }
  if (seen[0] == 0) throw ValidationError("pedigree has no proband");
  auto proband = std::find_if(members_.begin(), members_.end(),
                              [](const Relative& m) { return m.relation == Relation::proband; });
  if (proband != members_.begin()) std::rotate(members_.begin(), proband, proband + 1);
  const auto& p = members_.front();
  if (!p.alive) throw ValidationError("proband must be alive", p.id);
}

std::vector<const Relative*> Pedigree::with_relation(Relation r) const {
  std::vector<const Relative*> out;
  for (const auto& m : members_)
    if (m.relation == r) out.push_back(&m);
  return out;
}

ParsedPedigree parse_pedigree(const json& document) {
  if (!document.is_object()) throw ValidationError("pedigree document must be an object");
  if (auto it = document.find("schema_version"); it != document.end()) {
    if (!it->is_number_integer() || it->get<int>() != kPedigreeSchemaVersion)
      throw ValidationError("unsupported pedigree schema_version");
  }
  auto it = document.find("members");
  if (it == document.end()) throw ValidationError("missing field 'members'");
  if (!it->is_array()) throw ValidationError("field 'members' must be an array");
  std::vector<std::string> warnings;
  std::vector<Relative> members;
  members.reserve(it->size());
  for (const auto& m : *it) members.push_back(parse_member(m, warnings));
  return ParsedPedigree{Pedigree(std::move(members)), std::move(warnings)};
}

ParsedPedigree parse_pedigree(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("pedigree is not valid JSON: ") + e.what());
  }
  return parse_pedigree(doc);
}

json serialize_pedigree(const Pedigree& p) {
  json members = json::array();
  for (const auto& m : p.members()) {
    json j;
    j["id"] = m.id;
    j["relation"] = to_string(m.relation);
    j["sex"] = to_string(m.sex);
    j["current_age_or_death_age"] = m.current_age_or_death_age;
    j["alive"] = m.alive;
    if (m.breast_cancer) j["breast_cancer"] = *m.breast_cancer;
    if (m.ovarian_cancer) j["ovarian_cancer"] = *m.ovarian_cancer;
    if (m.genetic_test) j["genetic_test"] = to_string(*m.genetic_test);
    if (m.prophylactic_mastectomy_age) j["prophylactic_mastectomy_age"] = *m.prophylactic_mastectomy_age;
    if (m.prophylactic_oophorectomy_age) j["prophylactic_oophorectomy_age"] = *m.prophylactic_oophorectomy_age;
    j["ethnicity_flags"] = {{"ashkenazi", m.ashkenazi}};
    j["race"] = to_string(m.race);
    members.push_back(std::move(j));
  }
  return json{{"schema_version", kPedigreeSchemaVersion}, {"members", std::move(members)}};
}

int count_affected_first_degree(const Pedigree& p) {
  int n = 0;
  for (const auto& m : p.members()) {
    bool first_degree_female =
        m.relation == Relation::mother || m.relation == Relation::sister || m.relation == Relation::daughter;
    if (first_degree_female && m.breast_cancer) ++n;
  }
  return n;
}

bool is_known_carrier(const Pedigree& p) {
  const auto& t = p.proband().genetic_test;
  return t && *t != GeneticTest::negative;
}

// ---------------------------------------------------------------------------

namespace {

std::optional<int> int_or_unknown(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (it->is_string() && it->get<std::string>() == "unknown") return std::nullopt;
  if (!it->is_number_integer()) throw ValidationError(std::string("field '") + key + "' must be an integer");
  return it->get<int>();
}

}  // namespace

RiskFactors parse_risk_factors(const json& doc, const Pedigree* pedigree) {
  if (!doc.is_object()) throw ValidationError("risk-factor document must be an object");
  RiskFactors rf;
  rf.age_at_menarche = int_or_unknown(doc, "age_at_menarche");
  if (rf.age_at_menarche && (*rf.age_at_menarche < 5 || *rf.age_at_menarche > 30))
    throw ValidationError("age_at_menarche out of range");

  if (auto b = int_or_unknown(doc, "num_biopsies")) {
    if (*b < 0) throw ValidationError("num_biopsies must be non-negative");
    rf.num_biopsies = *b == 0 ? BiopsyCount::zero : *b == 1 ? BiopsyCount::one : BiopsyCount::two_or_more;
  }

  if (auto it = doc.find("age_first_live_birth"); it != doc.end() && !it->is_null()) {
    if (it->is_string() && it->get<std::string>() == "nulliparous") {
      rf.age_first_live_birth.reset();
    } else {
      if (!it->is_number_integer()) throw ValidationError("field 'age_first_live_birth' must be an integer");
      rf.age_first_live_birth = it->get<int>();
      if (*rf.age_first_live_birth < 10 || *rf.age_first_live_birth > 60)
        throw ValidationError("age_first_live_birth out of range");
    }
  }

  if (auto h = int_or_unknown(doc, "atypical_hyperplasia")) {
    if (*h != 0 && *h != 1) throw ValidationError("atypical_hyperplasia must be 0, 1 or unknown");
    rf.atypical_hyperplasia = *h == 1 ? Hyperplasia::yes : Hyperplasia::no;
  }

  auto x4 = int_or_unknown(doc, "affected_first_degree");
  if (x4 && *x4 < 0) throw ValidationError("affected_first_degree must be non-negative");
  if (pedigree) {
    int derived = count_affected_first_degree(*pedigree);
    if (x4 && *x4 != derived)
      throw ValidationError("affected_first_degree " + std::to_string(*x4) + " disagrees with pedigree count " +
                            std::to_string(derived));
    rf.affected_first_degree = derived;
  } else {
    if (!x4) throw ValidationError("missing field 'affected_first_degree'");
    rf.affected_first_degree = *x4;
  }
  return rf;
}

json serialize_risk_factors(const RiskFactors& rf) {
  json j;
  j["age_at_menarche"] = rf.age_at_menarche ? json(*rf.age_at_menarche) : json("unknown");
  switch (rf.num_biopsies) {
    case BiopsyCount::zero: j["num_biopsies"] = 0; break;
    case BiopsyCount::one: j["num_biopsies"] = 1; break;
    case BiopsyCount::two_or_more: j["num_biopsies"] = 2; break;
    case BiopsyCount::unknown: j["num_biopsies"] = "unknown"; break;
  }
  j["age_first_live_birth"] = rf.age_first_live_birth ? json(*rf.age_first_live_birth) : json("nulliparous");
  j["affected_first_degree"] = rf.affected_first_degree;
  switch (rf.atypical_hyperplasia) {
    case Hyperplasia::no: j["atypical_hyperplasia"] = 0; break;
    case Hyperplasia::yes: j["atypical_hyperplasia"] = 1; break;
    case Hyperplasia::unknown: j["atypical_hyperplasia"] = "unknown"; break;
  }
  return j;
}

}  // namespace riskfuse
