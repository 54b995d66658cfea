#include "doctest.h"

#include "oracles.hpp"
#include "riskfuse/errors.hpp"
#include "riskfuse/pedigree.hpp"

using namespace riskfuse;

namespace {

json family_doc() { return json::parse(read_text_file(RISKFUSE_TEST_DATA "/family.json")); }

std::optional<int> failing_member(const json& doc) {
  try {
    parse_pedigree(doc);
  } catch (const ValidationError& e) {
    return e.member_id().value_or(-1);
  }
  return std::nullopt;
}

}  // namespace

TEST_SUITE("pedigree") {
  TEST_CASE("parse and serialize round trip") {
    auto parsed = parse_pedigree(family_doc());
    CHECK(parsed.warnings.empty());
    CHECK(parsed.pedigree.size() == 5);
    CHECK(parsed.pedigree.proband().ashkenazi);
    auto again = parse_pedigree(serialize_pedigree(parsed.pedigree));
    CHECK(again.pedigree == parsed.pedigree);
  }

  TEST_CASE("random pedigrees survive serialization") {
    Rng rng = substream(7, 0);
    for (int i = 0; i < 200; ++i) {
      auto p = oracle::random_pedigree(rng, 15);
      CHECK(parse_pedigree(serialize_pedigree(p)).pedigree == p);
    }
  }

  TEST_CASE("validation names the offending member") {
    auto doc = family_doc();
    doc["members"][2]["breast_cancer"] = 60;  // older than the sister
    CHECK(failing_member(doc) == 3);

    doc = family_doc();
    doc["members"][1]["sex"] = "male";
    CHECK(failing_member(doc) == 2);

    doc = family_doc();
    doc["members"][4]["id"] = 3;
    CHECK(failing_member(doc) == 3);

    doc = family_doc();
    doc["members"][3]["relation"] = "cousin";
    CHECK(failing_member(doc) == 4);

    doc = family_doc();
    doc["members"][0]["alive"] = false;
    CHECK(failing_member(doc) == 1);

    doc = family_doc();
    doc["members"][1]["relation"] = "proband";
    CHECK(failing_member(doc).has_value());

    doc = family_doc();
    doc["members"].push_back({{"id", 9}, {"relation", "mother"}, {"sex", "female"},
                              {"current_age_or_death_age", 60}, {"alive", true}});
    CHECK(failing_member(doc) == 9);

    doc = family_doc();
    doc["members"][3]["prophylactic_oophorectomy_age"] = 50;  // before the ovarian onset
    CHECK(failing_member(doc) == 4);

    doc = family_doc();
    doc["members"][0].erase("alive");
    CHECK(failing_member(doc) == 1);

    CHECK_THROWS_AS(parse_pedigree(std::string_view("{not json")), ValidationError);
    CHECK_THROWS_AS(parse_pedigree(json{{"members", json::array()}}), ValidationError);
  }

  TEST_CASE("ages above 94 are clamped with a warning") {
    auto doc = family_doc();
    doc["members"][1]["current_age_or_death_age"] = 101;
    auto parsed = parse_pedigree(doc);
    CHECK(parsed.pedigree.members()[1].current_age_or_death_age == kMaxAge);
    REQUIRE(parsed.warnings.size() == 1);
    CHECK(parsed.warnings[0].find("member 2") != std::string::npos);
  }

  TEST_CASE("affected first-degree count comes from the pedigree") {
    auto p = parse_pedigree(family_doc()).pedigree;
    CHECK(count_affected_first_degree(p) == 2);  // the aunt is second degree
    auto rf = parse_risk_factors(json::parse(read_text_file(RISKFUSE_TEST_DATA "/risk_factors.json")), &p);
    CHECK(rf.affected_first_degree == 2);
    CHECK(rf.age_at_menarche == 12);
    CHECK(rf.num_biopsies == BiopsyCount::one);

    json conflicting = serialize_risk_factors(rf);
    conflicting["affected_first_degree"] = 1;
    CHECK_THROWS_AS(parse_risk_factors(conflicting, &p), ValidationError);
    CHECK(parse_risk_factors(serialize_risk_factors(rf)) == rf);

    json missing = serialize_risk_factors(rf);
    missing.erase("affected_first_degree");
    CHECK_THROWS_AS(parse_risk_factors(missing), ValidationError);
  }

  TEST_CASE("nulliparous women enter as first birth 25") {
    RiskFactors rf;
    CHECK(rf.first_birth_covariate() == 25);
    auto parsed = parse_risk_factors(json{{"age_first_live_birth", "nulliparous"}, {"affected_first_degree", 0}});
    CHECK_FALSE(parsed.age_first_live_birth.has_value());
  }

  TEST_CASE("known carrier status") {
    auto doc = family_doc();
    auto p = parse_pedigree(doc).pedigree;
    CHECK_FALSE(is_known_carrier(p));
    doc["members"][0]["genetic_test"] = "negative";
    CHECK_FALSE(is_known_carrier(parse_pedigree(doc).pedigree));
    doc["members"][0]["genetic_test"] = "BRCA2+";
    CHECK(is_known_carrier(parse_pedigree(doc).pedigree));
  }

  TEST_CASE("family-history strata") {
    const auto rules = default_stratum_rules();
    auto base = [] {
      return std::vector<Relative>{Relative{.id = 1, .current_age_or_death_age = 40}};
    };
    auto add = [](std::vector<Relative> m, Relation r, std::optional<int> breast, std::optional<int> ovarian) {
      Relative x{.id = static_cast<int>(m.size()) + 1, .relation = r, .sex = relation_sex(r),
                 .current_age_or_death_age = 70, .alive = true};
      x.breast_cancer = breast;
      x.ovarian_cancer = ovarian;
      m.push_back(x);
      return m;
    };
    CHECK(stratify_family_history(Pedigree(base()), rules) == Stratum::less);
    CHECK(stratify_family_history(Pedigree(add(base(), Relation::mother, 60, {})), rules) == Stratum::less);
    CHECK(stratify_family_history(Pedigree(add(base(), Relation::mother, 50, {})), rules) == Stratum::strong);
    CHECK(stratify_family_history(Pedigree(add(base(), Relation::paternal_aunt, {}, 65)), rules) == Stratum::strong);
    auto two = add(add(base(), Relation::mother, 62, {}), Relation::maternal_aunt, 68, {});
    CHECK(stratify_family_history(Pedigree(two), rules) == Stratum::strong);

    auto parsed = parse_stratum_rules(json::parse(R"({"version": 2, "rules": [
        {"kind": "count_at_least", "cancer": "breast", "count": 3, "max_degree": 1}]})"));
    CHECK(parsed.version == 2);
    CHECK(stratify_family_history(Pedigree(two), parsed) == Stratum::less);
    CHECK_THROWS_AS(parse_stratum_rules(json::parse(R"({"rules": [{"kind": "weird", "cancer": "breast"}]})")),
                    ValidationError);
  }
}
