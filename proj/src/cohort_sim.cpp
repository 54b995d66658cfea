#include "riskfuse/cohort_sim.hpp"

#include <cmath>
#include <exception>
#include <numeric>

#include "riskfuse/errors.hpp"
#include "riskfuse/penetrance_mod.hpp"

namespace riskfuse {

namespace {

double standard_normal(Rng& rng) {
  // Box-Muller on our own uniforms keeps draws identical across standard libraries
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

template <class Probs>
int sample_index(const Probs& p, Rng& rng) {
  double u = uniform01(rng);
  double cum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cum += p[i];
    if (u < cum) return static_cast<int>(i);
  }
  // rounding slack: last category with positive mass
  for (std::size_t i = p.size(); i-- > 0;)
    if (p[i] > 0.0) return static_cast<int>(i);
  return 0;
}

Genotype founder_genotype(const std::array<double, 4>& prior, Rng& rng) {
  return static_cast<Genotype>(sample_index(prior, rng));
}

Genotype child_genotype(Genotype mother, Genotype father, Rng& rng) {
  std::array<double, 4> p{};
  for (auto g : kGenotypes) p[index(g)] = transmission(g, mother, father);
  return static_cast<Genotype>(sample_index(p, rng));
}

std::optional<int> sample_onset(std::span<const double> pen, int through, Rng& rng) {
  double u = uniform01(rng);
  double cum = 0.0;
  for (int t = 1; t <= through; ++t) {
    cum += pen[t - 1];
    if (u < cum) return t;
  }
  return std::nullopt;
}

Categorical categorical_from_json(const json& j, const std::string& what) {
  Categorical c;
  if (!j.is_object() || !j.contains("values")) throw ValidationError(what + ": needs 'values'");
  for (const auto& v : j.at("values")) {
    if (v.is_string() && v.get<std::string>() == "unknown")
      c.values.push_back(-1);
    else if (v.is_number_integer())
      c.values.push_back(v.get<int>());
    else
      throw ValidationError(what + ": values must be integers or \"unknown\"");
  }
  if (j.contains("probabilities")) {
    c.probabilities = j.at("probabilities").get<std::vector<double>>();
  } else if (j.contains("weights")) {
    c.probabilities = j.at("weights").get<std::vector<double>>();
    double total = std::accumulate(c.probabilities.begin(), c.probabilities.end(), 0.0);
    if (!(total > 0.0)) throw ValidationError(what + ": weights must have positive total");
    for (double& p : c.probabilities) p /= total;
  } else {
    throw ValidationError(what + ": needs 'probabilities' or 'weights'");
  }
  c.validate(what);
  return c;
}

json categorical_to_json(const Categorical& c) {
  json values = json::array();
  for (int v : c.values) values.push_back(v < 0 ? json("unknown") : json(v));
  return {{"values", values}, {"probabilities", c.probabilities}};
}

RoundedNormal rounded_normal_from_json(const json& j, RoundedNormal fallback) {
  fallback.mean = j.value("mean", fallback.mean);
  fallback.sd = j.value("sd", fallback.sd);
  fallback.min = j.value("min", fallback.min);
  fallback.max = j.value("max", fallback.max);
  return fallback;
}

const std::map<std::string, SimRelativeGroup>& group_names() {
  static const std::map<std::string, SimRelativeGroup> names{
      {"sisters", SimRelativeGroup::sisters},
      {"brothers", SimRelativeGroup::brothers},
      {"daughters", SimRelativeGroup::daughters},
      {"sons", SimRelativeGroup::sons},
      {"maternal_aunts", SimRelativeGroup::maternal_aunts},
      {"maternal_uncles", SimRelativeGroup::maternal_uncles},
      {"paternal_aunts", SimRelativeGroup::paternal_aunts},
      {"paternal_uncles", SimRelativeGroup::paternal_uncles},
  };
  return names;
}

}  // namespace

int Categorical::sample(Rng& rng) const { return values[sample_index(probabilities, rng)]; }

void Categorical::validate(const std::string& what) const {
  if (values.empty() || values.size() != probabilities.size())
    throw ValidationError(what + ": values and probabilities must be non-empty and of equal length");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw ValidationError(what + ": negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError(what + ": probabilities must sum to 1");
}

int RoundedNormal::sample(Rng& rng) const {
  // rejection keeps the truncated law; rounding before the bounds check
  for (int tries = 0; tries < 1000; ++tries) {
    int v = static_cast<int>(std::lround(mean + sd * standard_normal(rng)));
    if (v >= min && v <= max) return v;
  }
  return std::clamp(static_cast<int>(std::lround(mean)), min, max);
}

void SimConfig::validate() const {
  if (n < 1) throw ValidationError("simulation size n must be at least 1");
  if (tau < 1) throw ValidationError("simulation horizon tau must be at least 1");
  for (const auto& [g, c] : structure) {
    c.validate("structure");
    for (int v : c.values)
      if (v < 0) throw ValidationError("relative counts must be non-negative");
  }
  baseline_age.validate("baseline_age");
  for (int a : baseline_age.values)
    if (a < 1 || a + tau > kMaxAge) throw ValidationError("baseline ages must satisfy 1 <= a and a + tau <= 94");
  for (const auto* rn : {&parent_child_gap, &death_age})
    if (!(rn->sd > 0.0) || rn->min > rn->max) throw ValidationError("normal parameters need sd > 0 and min <= max");
  menarche.validate("menarche");
  biopsies.validate("biopsies");
  hyperplasia.validate("hyperplasia");
}

SimConfig parse_sim_config(const json& j) {
  if (!j.is_object()) throw ValidationError("simulation config must be an object");
  SimConfig c;
  c.seed = j.value("seed", c.seed);
  c.n = j.value("n", c.n);
  c.tau = j.value("tau", c.tau);
  c.train_size = j.value("train_size", c.train_size);
  c.ashkenazi = j.value("ashkenazi", c.ashkenazi);
  if (j.contains("race")) {
    auto r = race_from_string(j.at("race").get<std::string>());
    if (!r) throw ValidationError("unknown race in simulation config");
    c.race = *r;
  }
  if (j.contains("allele_frequencies"))
    c.allele_frequencies = AlleleFrequencies{j.at("allele_frequencies").at("brca1").get<double>(),
                                             j.at("allele_frequencies").at("brca2").get<double>()};
  if (j.contains("structure")) {
    for (const auto& [name, dist] : j.at("structure").items()) {
      auto it = group_names().find(name);
      if (it == group_names().end()) throw ValidationError("unknown relative group '" + name + "'");
      c.structure[it->second] = categorical_from_json(dist, "structure." + name);
    }
  }
  if (!j.contains("baseline_age")) throw ValidationError("simulation config needs 'baseline_age'");
  c.baseline_age = categorical_from_json(j.at("baseline_age"), "baseline_age");
  if (j.contains("parent_child_gap")) c.parent_child_gap = rounded_normal_from_json(j.at("parent_child_gap"), c.parent_child_gap);
  if (j.contains("death_age")) c.death_age = rounded_normal_from_json(j.at("death_age"), c.death_age);
  const json cov = j.value("covariates", json::object());
  auto cov_or = [&](const char* key, Categorical fallback) {
    return cov.contains(key) ? categorical_from_json(cov.at(key), std::string("covariates.") + key) : fallback;
  };
  c.menarche = cov_or("menarche", {{-1}, {1.0}});
  c.biopsies = cov_or("biopsies", {{-1}, {1.0}});
  c.hyperplasia = cov_or("hyperplasia", {{-1}, {1.0}});
  c.validate();
  return c;
}

json sim_config_to_json(const SimConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["n"] = c.n;
  j["tau"] = c.tau;
  j["train_size"] = c.train_size;
  j["ashkenazi"] = c.ashkenazi;
  j["race"] = std::string(to_string(c.race));
  if (c.allele_frequencies)
    j["allele_frequencies"] = {{"brca1", c.allele_frequencies->brca1}, {"brca2", c.allele_frequencies->brca2}};
  json s = json::object();
  for (const auto& [name, g] : group_names())
    if (auto it = c.structure.find(g); it != c.structure.end()) s[name] = categorical_to_json(it->second);
  j["structure"] = s;
  j["baseline_age"] = categorical_to_json(c.baseline_age);
  j["parent_child_gap"] = {{"mean", c.parent_child_gap.mean}, {"sd", c.parent_child_gap.sd},
                           {"min", c.parent_child_gap.min}, {"max", c.parent_child_gap.max}};
  j["death_age"] = {{"mean", c.death_age.mean}, {"sd", c.death_age.sd}, {"min", c.death_age.min},
                    {"max", c.death_age.max}};
  j["covariates"] = {{"menarche", categorical_to_json(c.menarche)},
                     {"biopsies", categorical_to_json(c.biopsies)},
                     {"hyperplasia", categorical_to_json(c.hyperplasia)}};
  return j;
}

// --- generation ---------------------------------------------------------------

FamilySkeleton simulate_family(const SimConfig& cfg, AlleleFrequencies freqs, Rng& rng) {
  const auto prior = founder_prior(freqs);
  auto count = [&](SimRelativeGroup g) {
    auto it = cfg.structure.find(g);
    return it == cfg.structure.end() ? 0 : it->second.sample(rng);
  };
  // structure first, in a fixed order
  const int n_sisters = count(SimRelativeGroup::sisters);
  const int n_brothers = count(SimRelativeGroup::brothers);
  const int n_daughters = count(SimRelativeGroup::daughters);
  const int n_sons = count(SimRelativeGroup::sons);
  const int n_m_aunts = count(SimRelativeGroup::maternal_aunts);
  const int n_m_uncles = count(SimRelativeGroup::maternal_uncles);
  const int n_p_aunts = count(SimRelativeGroup::paternal_aunts);
  const int n_p_uncles = count(SimRelativeGroup::paternal_uncles);

  FamilySkeleton fam;
  const int a = cfg.baseline_age.sample(rng);
  auto gap = [&] { return cfg.parent_child_gap.sample(rng); };
  auto death = [&] { return cfg.death_age.sample(rng); };

  // birth years generation by generation: parents, grandparents, then the rest
  const int mother_age = a + gap();
  const int father_age = a + gap();
  const int mgm_age = mother_age + gap(), mgf_age = mother_age + gap();
  const int pgm_age = father_age + gap(), pgf_age = father_age + gap();

  SimMember proband{Relation::proband, Sex::female, a, 200, Genotype::noncarrier, {}, {}};
  SimMember mgm{Relation::maternal_grandmother, Sex::female, mgm_age, death(), founder_genotype(prior, rng), {}, {}};
  SimMember mgf{Relation::maternal_grandfather, Sex::male, mgf_age, death(), founder_genotype(prior, rng), {}, {}};
  SimMember pgm{Relation::paternal_grandmother, Sex::female, pgm_age, death(), founder_genotype(prior, rng), {}, {}};
  SimMember pgf{Relation::paternal_grandfather, Sex::male, pgf_age, death(), founder_genotype(prior, rng), {}, {}};
  SimMember mother{Relation::mother, Sex::female, mother_age, death(), child_genotype(mgm.genotype, mgf.genotype, rng), {}, {}};
  SimMember father{Relation::father, Sex::male, father_age, death(), child_genotype(pgm.genotype, pgf.genotype, rng), {}, {}};
  proband.genotype = child_genotype(mother.genotype, father.genotype, rng);
  fam.spouse_genotype = founder_genotype(prior, rng);

  fam.members = {proband, mother, father, mgm, mgf, pgm, pgf};

  auto add_children = [&](int n, Relation rel, int parent_age, Genotype gm, Genotype gf) {
    for (int i = 0; i < n; ++i) {
      int age = parent_age - gap();
      int d = death();
      Genotype g = child_genotype(gm, gf, rng);
      if (age < 1) continue;  // not yet born
      fam.members.push_back({rel, relation_sex(rel), age, d, g, {}, {}});
    }
  };
  add_children(n_sisters, Relation::sister, mother_age, mother.genotype, father.genotype);
  add_children(n_brothers, Relation::brother, mother_age, mother.genotype, father.genotype);
  add_children(n_m_aunts, Relation::maternal_aunt, mgm_age, mgm.genotype, mgf.genotype);
  add_children(n_m_uncles, Relation::maternal_uncle, mgm_age, mgm.genotype, mgf.genotype);
  add_children(n_p_aunts, Relation::paternal_aunt, pgm_age, pgm.genotype, pgf.genotype);
  add_children(n_p_uncles, Relation::paternal_uncle, pgm_age, pgm.genotype, pgf.genotype);
  const std::size_t first_child = fam.members.size();
  add_children(n_daughters, Relation::daughter, a, proband.genotype, fam.spouse_genotype);
  add_children(n_sons, Relation::son, a, proband.genotype, fam.spouse_genotype);
  for (std::size_t i = first_child; i < fam.members.size(); ++i) {
    int birth_age = a - fam.members[i].age;
    if (!fam.first_birth_age || birth_age < *fam.first_birth_age) fam.first_birth_age = birth_age;
  }
  return fam;
}

void assign_phenotypes(FamilySkeleton& family, const PenetranceTable& table, Race race, Rng& rng) {
  for (auto& m : family.members) {
    const int through = std::min(m.age, kMaxAge);
    m.breast_cancer = sample_onset(table.penetrance(CancerSite::breast, m.sex, m.genotype, race), through, rng);
    if (m.breast_cancer && *m.breast_cancer > m.death_age) m.breast_cancer.reset();
    if (m.sex == Sex::female) {
      m.ovarian_cancer = sample_onset(table.penetrance(CancerSite::ovarian, m.sex, m.genotype, race), through, rng);
      if (m.ovarian_cancer && *m.ovarian_cancer > m.death_age) m.ovarian_cancer.reset();
    }
  }
}

SimOutcome simulate_outcome(std::span<const double> breast_hazard, std::span<const double> mortality, int age, int tau,
                            Rng& rng) {
  if (age + tau > static_cast<int>(breast_hazard.size())) throw DomainError("outcome horizon beyond table support");
  for (int k = 1; k <= tau; ++k) {
    const int t = age + k;
    double u = uniform01(rng);
    double hb = breast_hazard[t - 1];
    if (u < hb) return {static_cast<double>(k), EventType::breast};
    if (u < hb + mortality[t - 1]) return {static_cast<double>(k), EventType::death};
  }
  return {static_cast<double>(tau), EventType::none};
}

SimOutcome simulate_outcome(Genotype g, int age, const RiskFactors& x, int tau, const ParameterSet& params, Race race,
                            Rng& rng, const CombineOptions& options) {
  auto hazard = params.penetrance.breast_hazard(g, race);
  auto mortality = params.penetrance.mortality(Sex::female, race);
  if (g != Genotype::noncarrier) return simulate_outcome(hazard, mortality, age, tau, rng);
  auto r0 = normalized_hazard_ratio_curve(x, params.relative_hazard.coefficients_for(race), params.normalization, race,
                                          options);
  std::vector<double> modified(hazard.size());
  for (std::size_t t = 0; t < hazard.size(); ++t) modified[t] = 1.0 - std::pow(1.0 - hazard[t], r0[t]);
  return simulate_outcome(modified, mortality, age, tau, rng);
}

std::optional<CohortRecord> simulate_proband(const SimConfig& cfg, const ParameterSet& params, std::uint64_t attempt) {
  Rng rng = substream(cfg.seed, attempt);
  const auto freqs = cfg.allele_frequencies.value_or(params.penetrance.allele_frequencies(cfg.ashkenazi));
  auto fam = simulate_family(cfg, freqs, rng);
  assign_phenotypes(fam, params.penetrance, cfg.race, rng);
  const auto& pb = fam.members.front();
  if (pb.breast_cancer) return std::nullopt;  // onset sampled only up to the baseline age

  std::vector<Relative> members;
  members.reserve(fam.members.size());
  std::vector<int> genotypes;
  int id = 1;
  for (const auto& m : fam.members) {
    Relative r;
    r.id = id++;
    r.relation = m.relation;
    r.sex = m.sex;
    r.current_age_or_death_age = std::max(1, m.observed_age());
    r.alive = m.relation == Relation::proband || m.age < m.death_age;
    r.breast_cancer = m.breast_cancer;
    r.ovarian_cancer = m.ovarian_cancer;
    r.ashkenazi = cfg.ashkenazi;
    r.race = cfg.race;
    members.push_back(r);
    genotypes.push_back(index(m.genotype));
  }
  Pedigree pedigree(std::move(members));

  RiskFactors x;
  int menarche = cfg.menarche.sample(rng);
  if (menarche >= 0) x.age_at_menarche = menarche;
  int biopsies = cfg.biopsies.sample(rng);
  x.num_biopsies = biopsies < 0 ? BiopsyCount::unknown
                   : biopsies == 0 ? BiopsyCount::zero
                   : biopsies == 1 ? BiopsyCount::one
                                   : BiopsyCount::two_or_more;
  int hyper = cfg.hyperplasia.sample(rng);
  x.atypical_hyperplasia = hyper < 0 ? Hyperplasia::unknown : hyper == 1 ? Hyperplasia::yes : Hyperplasia::no;
  x.age_first_live_birth = fam.first_birth_age;
  x.affected_first_degree = count_affected_first_degree(pedigree);

  auto outcome = simulate_outcome(pb.genotype, pb.age, x, cfg.tau, params, cfg.race, rng);
  CohortRecord rec{"sim-" + std::to_string(attempt), std::move(pedigree), x, 0, 0.0, EventType::none, {}, {}, {}};
  rec.baseline_age = pb.age;
  rec.follow_up = outcome.follow_up;
  rec.event = outcome.event;
  rec.latent_genotypes = std::move(genotypes);
  return rec;
}

json SimSummary::to_json() const {
  auto rate = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  return {{"retained", retained},
          {"attempts", attempts},
          {"excluded_baseline_breast_cancer", excluded_baseline},
          {"cases", cases},
          {"case_rate", rate(cases, retained)},
          {"deaths", deaths},
          {"proband_carriers", carriers},
          {"train", {{"n", train}, {"cases", train_cases}, {"case_rate", rate(train_cases, train)}}},
          {"validation", {{"n", validation}, {"cases", validation_cases}, {"case_rate", rate(validation_cases, validation)}}}};
}

namespace {

constexpr std::size_t kBlock = 2048;

void finish(SimulatedCohort& out, const SimConfig& cfg) {
  auto& s = out.summary;
  s.retained = out.records.size();
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    auto& r = out.records[i];
    const bool train = i < cfg.train_size;
    if (cfg.train_size > 0) r.split = train ? "train" : "validation";
    const bool is_case = r.event == EventType::breast;
    s.cases += is_case;
    s.deaths += r.event == EventType::death;
    s.carriers += r.latent_genotypes.front() != 0;
    if (train) {
      ++s.train;
      s.train_cases += is_case;
    } else {
      ++s.validation;
      s.validation_cases += is_case;
    }
  }
  s.excluded_baseline = s.attempts - s.retained;
}

template <bool Parallel>
SimulatedCohort run(const SimConfig& cfg, const ParameterSet& params) {
  cfg.validate();
  SimulatedCohort out;
  out.records.reserve(static_cast<std::size_t>(cfg.n));
  std::uint64_t next = 0;
  while (out.records.size() < static_cast<std::size_t>(cfg.n)) {
    std::vector<std::optional<CohortRecord>> block(kBlock);
    std::vector<std::exception_ptr> errors(kBlock);
    const auto m = static_cast<std::ptrdiff_t>(kBlock);
#pragma omp parallel for schedule(dynamic, 32) if (Parallel)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
      try {
        block[i] = simulate_proband(cfg, params, next + static_cast<std::uint64_t>(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (std::size_t i = 0; i < kBlock && out.records.size() < static_cast<std::size_t>(cfg.n); ++i) {
      if (errors[i]) std::rethrow_exception(errors[i]);
      ++out.summary.attempts;
      if (block[i]) out.records.push_back(std::move(*block[i]));
    }
    next += kBlock;
    if (next > 1000ULL * static_cast<std::uint64_t>(cfg.n) + kBlock)
      throw DomainError("simulation excludes nearly every proband; check the penetrance tables");
  }
  finish(out, cfg);
  return out;
}

}  // namespace

SimulatedCohort simulate_cohort(const SimConfig& cfg, const ParameterSet& params) { return run<true>(cfg, params); }

SimulatedCohort simulate_cohort_serial(const SimConfig& cfg, const ParameterSet& params) {
  return run<false>(cfg, params);
}

}  // namespace riskfuse
