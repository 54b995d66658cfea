#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "riskfuse/cohort_sim.hpp"
#include "riskfuse/errors.hpp"
#include "riskfuse/pipeline.hpp"
#include "riskfuse/scoring.hpp"

using namespace riskfuse;

namespace {

std::vector<CohortRecord> small_cohort(int n) {
  auto j = json::parse(read_text_file(RISKFUSE_SOURCE_DIR "/configs/paper_sim.json"));
  j["n"] = n;
  j["train_size"] = n;
  return simulate_cohort(parse_sim_config(j), oracle::params()).records;
}

}  // namespace

TEST_SUITE("scoring") {
  TEST_CASE("cohort scoring: parallel equals serial") {
    auto cohort = small_cohort(300);
    Scorer scorer(oracle::params());
    std::vector<ModelSpec> models{builtin_model("brcapro"), builtin_model("bcrat"), builtin_model("combined_m")};
    std::vector<int> taus{1, 5, 10};
    auto par = score_cohort(cohort, models, taus, scorer);
    auto ser = score_cohort_serial(cohort, models, taus, scorer);
    REQUIRE(par.values.size() == ser.values.size());
    for (std::size_t i = 0; i < par.values.size(); ++i)
      for (std::size_t k = 0; k < par.values[i].size(); ++k) {
        const double a = par.values[i][k], b = ser.values[i][k];
        CHECK(((std::isnan(a) && std::isnan(b)) || a == b));
      }
  }

  TEST_CASE("eligibility rules") {
    Scorer scorer(oracle::params());
    std::vector<Relative> members{Relative{.id = 1, .current_age_or_death_age = 45}};
    Pedigree plain(members);
    RiskFactors x;
    auto p = scorer.prepare(plain, x);
    CHECK_FALSE(scorer.ineligibility(builtin_model("bcrat"), p, 5));
    CHECK(scorer.ineligibility(builtin_model("bcrat"), p, 0));
    CHECK(scorer.ineligibility(builtin_model("bcrat"), p, 46));      // past 90
    CHECK_FALSE(scorer.ineligibility(builtin_model("brcapro"), p, 46));
    CHECK(scorer.ineligibility(builtin_model("brcapro"), p, 50));   // past 94

    auto young = scorer.prepare(plain, x, 18);
    CHECK(scorer.ineligibility(builtin_model("bcrat"), young, 5));
    CHECK_FALSE(scorer.ineligibility(builtin_model("combined_m"), young, 5));

    members[0].genetic_test = GeneticTest::brca1_positive;
    Pedigree carrier(members);
    auto c = scorer.prepare(carrier, x);
    CHECK(scorer.ineligibility(builtin_model("bcrat"), c, 5));
    CHECK_THROWS_AS(scorer.score(builtin_model("bcrat"), c, 5), EligibilityError);
    CHECK(scorer.score(builtin_model("brcapro"), c, 5) ==
          genotype_future_risk(Genotype::brca1, 45, 5, oracle::params().penetrance, Race::white));
    CHECK(scorer.score(builtin_model("combined_m"), c, 5) == scorer.score(builtin_model("brcapro"), c, 5));

    members[0].genetic_test.reset();
    members[0].breast_cancer = 40;
    Pedigree affected(members);
    CHECK(scorer.ineligibility(builtin_model("brcapro"), scorer.prepare(affected, x), 5));
  }

  TEST_CASE("model names") {
    CHECK(builtin_model("combined_m").kind == ModelKind::combined_m);
    CHECK_THROWS_AS(builtin_model("gail"), ValidationError);
    CHECK_THROWS_AS(model_from_cli_name("ensemble:"), ValidationError);
    CHECK_THROWS_AS(model_from_cli_name("ensemble:/nonexistent/model.json"), Error);
    CHECK(builtin_model("bcrat").uses_relative_hazard());
    CHECK_FALSE(builtin_model("combined_m").uses_relative_hazard());
  }

  TEST_CASE("ensemble fitting pipeline on a small cohort") {
    auto cohort = small_cohort(2000);
    Scorer scorer(oracle::params());
    EnsembleFitRequest req;
    auto fit = fit_ensemble_from_cohort(cohort, scorer, req);
    CHECK(fit.model.coefficients.size() == 4);
    CHECK(fit.records + fit.excluded == cohort.size());
    CHECK(fit.model.tau_grid == std::vector<int>{5});

    req.kind = EnsembleKind::time_varying;
    req.taus = {1, 2, 3, 4, 5};
    auto tv = fit_ensemble_from_cohort(cohort, scorer, req);
    CHECK(tv.model.coefficients.size() == 8);

    ModelSpec spec{"ensemble:test", ModelKind::ensemble, std::make_shared<FittedEnsemble>(fit.model)};
    auto p = scorer.prepare(cohort[0].pedigree, cohort[0].risk_factors, cohort[0].baseline_age);
    if (!scorer.ineligibility(spec, p, 5)) {
      const double v = scorer.score(spec, p, 5);
      CHECK(v == predict_ensemble(fit.model, scorer.brcapro(p, 5), scorer.bcrat(p, 5), 5));
    }
    CHECK(scorer.ineligibility(spec, p, 4));
  }
}
