#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "riskfuse/cohort.hpp"
#include "riskfuse/params.hpp"
#include "riskfuse/rng.hpp"

namespace riskfuse {

/// Categorical distribution over integers (e.g. number of sisters).
struct Categorical {
  std::vector<int> values;
  std::vector<double> probabilities;

  int sample(Rng& rng) const;
  void validate(const std::string& what) const;
};

/// Normal(mean, sd) rounded to whole years and truncated to [min, max].
struct RoundedNormal {
  double mean = 0.0;
  double sd = 1.0;
  int min = 1;
  int max = kMaxAge;

  int sample(Rng& rng) const;
};

/// Relative counts per proband; absent entries mean zero relatives.
enum class SimRelativeGroup { sisters, brothers, daughters, sons, maternal_aunts, maternal_uncles, paternal_aunts,
                              paternal_uncles };

struct SimConfig {
  std::uint64_t seed = 1;
  int n = 1000;
  int tau = 5;
  std::size_t train_size = 0;  // first retained probands labelled "train"
  bool ashkenazi = true;
  Race race = Race::white;
  std::optional<AlleleFrequencies> allele_frequencies;  // default: table value for the ethnicity
  std::map<SimRelativeGroup, Categorical> structure;
  Categorical baseline_age;
  RoundedNormal parent_child_gap{27.0, 6.0, 14, 50};
  RoundedNormal death_age{80.0, 15.0, 1, kMaxAge};
  Categorical menarche;     // age in years; -1 = unknown
  Categorical biopsies;     // 0, 1, 2 (two or more); -1 = unknown
  Categorical hyperplasia;  // 0, 1; -1 = unknown

  void validate() const;
};

SimConfig parse_sim_config(const json& j);
json sim_config_to_json(const SimConfig& c);

struct SimMember {
  Relation relation = Relation::proband;
  Sex sex = Sex::female;
  int age = 1;          // age today had the member lived
  int death_age = 200;  // age at death (proband: never before baseline)
  Genotype genotype = Genotype::noncarrier;
  std::optional<int> breast_cancer;
  std::optional<int> ovarian_cancer;

  int observed_age() const { return std::min({age, death_age, kMaxAge}); }
};

struct FamilySkeleton {
  std::vector<SimMember> members;  // index 0 = proband
  Genotype spouse_genotype = Genotype::noncarrier;
  std::optional<int> first_birth_age;  // proband's age at first (born) child
};

/// Structure, ages and genotypes. Grandparents and the proband's partner are founders.
FamilySkeleton simulate_family(const SimConfig& cfg, AlleleFrequencies freqs, Rng& rng);

/// Baseline cancers drawn from the crude penetrance over ages 1..age;
/// onsets after the death age are removed.
void assign_phenotypes(FamilySkeleton& family, const PenetranceTable& table, Race race, Rng& rng);

struct SimOutcome {
  double follow_up = 0.0;
  EventType event = EventType::none;
};

/// Yearly competing-risk draws over (a, a + tau] under the combined model:
/// modified non-carrier hazard or the carrier hazard, plus mortality.
SimOutcome simulate_outcome(Genotype g, int age, const RiskFactors& x, int tau, const ParameterSet& params, Race race,
                            Rng& rng, const CombineOptions& options = {});

/// Same law from explicit yearly hazards (index 0 = age 1).
SimOutcome simulate_outcome(std::span<const double> breast_hazard, std::span<const double> mortality, int age, int tau,
                            Rng& rng);

struct SimSummary {
  std::size_t retained = 0;
  std::size_t attempts = 0;
  std::size_t excluded_baseline = 0;
  std::size_t cases = 0;
  std::size_t deaths = 0;
  std::size_t carriers = 0;
  std::size_t train = 0, train_cases = 0;
  std::size_t validation = 0, validation_cases = 0;

  json to_json() const;
};

struct SimulatedCohort {
  std::vector<CohortRecord> records;
  SimSummary summary;
};

/// Attempt i uses substream(seed, i); excluded attempts are skipped, so the
/// output is a deterministic function of (seed, config). Parallel over attempts.
SimulatedCohort simulate_cohort(const SimConfig& cfg, const ParameterSet& params);
/// Serial reference for simulate_cohort.
SimulatedCohort simulate_cohort_serial(const SimConfig& cfg, const ParameterSet& params);

/// One attempt; nullopt when the proband has breast cancer at baseline.
std::optional<CohortRecord> simulate_proband(const SimConfig& cfg, const ParameterSet& params, std::uint64_t attempt);

}  // namespace riskfuse
