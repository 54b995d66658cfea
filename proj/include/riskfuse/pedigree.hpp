#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "riskfuse/json_io.hpp"

namespace riskfuse {

/// Oldest age supported by the penetrance tables; larger ages are clamped.
inline constexpr int kMaxAge = 94;
inline constexpr int kPedigreeSchemaVersion = 1;

enum class Relation {
  proband,
  mother,
  father,
  sister,
  brother,
  daughter,
  son,
  maternal_grandmother,
  maternal_grandfather,
  paternal_grandmother,
  paternal_grandfather,
  maternal_aunt,
  maternal_uncle,
  paternal_aunt,
  paternal_uncle,
};

enum class Sex { female, male };

enum class Race { white, black, hispanic, asian, native_american, unknown };

enum class GeneticTest { brca1_positive, brca2_positive, both_positive, negative };

std::string_view to_string(Relation r);
std::string_view to_string(Sex s);
std::string_view to_string(Race r);
std::string_view to_string(GeneticTest t);
std::optional<Relation> relation_from_string(std::string_view s);
std::optional<Race> race_from_string(std::string_view s);

/// 0 for the proband, 1 for parents/siblings/children, 2 for grandparents/aunts/uncles.
int relation_degree(Relation r);
Sex relation_sex(Relation r);

struct Relative {
  int id = 0;
  Relation relation = Relation::proband;
  Sex sex = Sex::female;
  int current_age_or_death_age = 1;
  bool alive = true;
  std::optional<int> breast_cancer;
  std::optional<int> ovarian_cancer;
  std::optional<GeneticTest> genetic_test;
  std::optional<int> prophylactic_mastectomy_age;
  std::optional<int> prophylactic_oophorectomy_age;
  bool ashkenazi = false;
  Race race = Race::unknown;

  bool operator==(const Relative&) const = default;
};

/// Validated, immutable family of first- and second-degree relatives.
/// Member 0 is always the proband.
class Pedigree {
 public:
  /// Validates every invariant; throws ValidationError naming the member.
  explicit Pedigree(std::vector<Relative> members);

  const Relative& proband() const { return members_.front(); }
  std::span<const Relative> members() const { return members_; }
  std::size_t size() const { return members_.size(); }

  /// Members with the given relation, in document order.
  std::vector<const Relative*> with_relation(Relation r) const;

  bool operator==(const Pedigree&) const = default;

 private:
  std::vector<Relative> members_;
};

struct ParsedPedigree {
  Pedigree pedigree;
  std::vector<std::string> warnings;
};

ParsedPedigree parse_pedigree(const json& document);
ParsedPedigree parse_pedigree(std::string_view text);
json serialize_pedigree(const Pedigree& p);

/// Number of female first-degree relatives (mother, sisters, daughters) with breast cancer.
int count_affected_first_degree(const Pedigree& p);

/// True when the proband carries a positive BRCA1/2 test result.
bool is_known_carrier(const Pedigree& p);

// ---------------------------------------------------------------------------
// Relative-hazard covariates

enum class BiopsyCount { zero, one, two_or_more, unknown };
enum class Hyperplasia { no, yes, unknown };

struct RiskFactors {
  std::optional<int> age_at_menarche;               // X1; nullopt = unknown
  BiopsyCount num_biopsies = BiopsyCount::unknown;  // X2
  std::optional<int> age_first_live_birth;          // X3; nullopt = nulliparous
  int affected_first_degree = 0;                    // X4
  Hyperplasia atypical_hyperplasia = Hyperplasia::unknown;  // X5

  /// X3 as used by the relative-hazard model: nulliparous women count as 25.
  int first_birth_covariate() const { return age_first_live_birth.value_or(25); }

  bool operator==(const RiskFactors&) const = default;
};

/// Parse a risk-factor document. When `affected_first_degree` is absent and a
/// pedigree is supplied, X4 is derived from it; when both are present they must agree.
RiskFactors parse_risk_factors(const json& document, const Pedigree* pedigree = nullptr);
json serialize_risk_factors(const RiskFactors& rf);

// ---------------------------------------------------------------------------
// Family-history stratification

enum class Stratum { strong, less };
std::string_view to_string(Stratum s);

enum class CancerSite { breast, ovarian };

/// One trigger; the history is "strong" when any trigger fires.
struct StratumRule {
  enum class Kind { any_cancer, onset_at_most, count_at_least };
  Kind kind = Kind::any_cancer;
  CancerSite cancer = CancerSite::breast;
  int age = 0;         // onset_at_most
  int count = 0;       // count_at_least
  int max_degree = 2;  // relatives considered
};

struct StratumRules {
  int version = 1;
  std::vector<StratumRule> rules;
};

StratumRules parse_stratum_rules(const json& document);
/// Any ovarian cancer; breast onset <= 50; >= 2 breast cancers among relatives.
StratumRules default_stratum_rules();
Stratum stratify_family_history(const Pedigree& p, const StratumRules& rules);

}  // namespace riskfuse
