#include "doctest.h"

#include "oracles.hpp"
#include "riskfuse/cohort_sim.hpp"
#include "riskfuse/errors.hpp"

using namespace riskfuse;

namespace {

SimConfig config(int n, std::uint64_t seed = 20240611) {
  auto j = json::parse(read_text_file(RISKFUSE_SOURCE_DIR "/configs/paper_sim.json"));
  j["n"] = n;
  j["seed"] = seed;
  j["train_size"] = n / 2;
  return parse_sim_config(j);
}

}  // namespace

TEST_SUITE("cohort_sim") {
  TEST_CASE("config round trip and validation") {
    auto c = config(100);
    auto back = parse_sim_config(sim_config_to_json(c));
    CHECK(sim_config_to_json(back) == sim_config_to_json(c));
    auto j = sim_config_to_json(c);
    j["baseline_age"]["probabilities"][0] = 0.5;
    CHECK_THROWS_AS(parse_sim_config(j), ValidationError);
  }

  TEST_CASE("n = 10 cohort matches the golden file") {
    // same config the CLI uses for `simulate --n 10`
    auto j = json::parse(read_text_file(RISKFUSE_SOURCE_DIR "/configs/paper_sim.json"));
    j["n"] = 10;
    auto sim = simulate_cohort(parse_sim_config(j), oracle::params());
    CHECK(cohort_to_ndjson(sim.records) == read_text_file(RISKFUSE_TEST_DATA "/sim_n10.ndjson"));
  }

  TEST_CASE("parallel simulation equals the serial reference") {
    auto c = config(400, 99);
    auto par = simulate_cohort(c, oracle::params());
    auto ser = simulate_cohort_serial(c, oracle::params());
    CHECK(cohort_to_ndjson(par.records) == cohort_to_ndjson(ser.records));
    CHECK(par.summary.to_json() == ser.summary.to_json());
  }

  TEST_CASE("summary is consistent with the records") {
    auto sim = simulate_cohort(config(1000, 5), oracle::params());
    const auto& s = sim.summary;
    CHECK(s.retained == 1000);
    CHECK(sim.records.size() == 1000);
    CHECK(s.attempts == s.retained + s.excluded_baseline);
    std::size_t cases = 0, train = 0, carriers = 0;
    for (const auto& r : sim.records) {
      cases += r.event == EventType::breast;
      train += r.split == "train";
      carriers += r.latent_genotypes.front() != 0;
      CHECK_FALSE(r.pedigree.proband().breast_cancer.has_value());
      CHECK(r.follow_up > 0.0);
      CHECK(r.follow_up <= 5.0);
      CHECK(r.risk_factors.affected_first_degree == count_affected_first_degree(r.pedigree));
      CHECK(r.latent_genotypes.size() == r.pedigree.size());
    }
    CHECK(cases == s.cases);
    CHECK(train == 500);
    CHECK(carriers == s.carriers);
    CHECK(s.train_cases + s.validation_cases == s.cases);
  }

  TEST_CASE("records survive JSON") {
    auto sim = simulate_cohort(config(50, 8), oracle::params());
    for (const auto& r : sim.records) {
      auto back = cohort_record_from_json(json::parse(dump17(cohort_record_to_json(r))));
      CHECK(back.pedigree == r.pedigree);
      CHECK(back.risk_factors == r.risk_factors);
      CHECK(back.follow_up == r.follow_up);
      CHECK(back.event == r.event);
      CHECK(back.latent_genotypes == r.latent_genotypes);
    }
  }

  TEST_CASE("outcome draws under degenerate hazards") {
    std::vector<double> zero(kMaxAge, 0.0), one(kMaxAge, 1.0);
    Rng rng = substream(1, 2);
    auto o = simulate_outcome(zero, zero, 40, 5, rng);
    CHECK(o.event == EventType::none);
    CHECK(o.follow_up == 5.0);
    o = simulate_outcome(one, zero, 40, 5, rng);
    CHECK(o.event == EventType::breast);
    CHECK(o.follow_up == 1.0);
    o = simulate_outcome(zero, one, 40, 5, rng);
    CHECK(o.event == EventType::death);
    CHECK(o.follow_up == 1.0);
  }

  TEST_CASE("attempt streams are independent of n") {
    auto small = simulate_cohort(config(30, 77), oracle::params());
    auto large = simulate_cohort(config(60, 77), oracle::params());
    for (std::size_t i = 0; i < 30; ++i) CHECK(cohort_record_to_json(small.records[i])["pedigree"] ==
                                               cohort_record_to_json(large.records[i])["pedigree"]);
  }
}
