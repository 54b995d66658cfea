#include "riskfuse/mendelian.hpp"

#include <cmath>

#include "riskfuse/errors.hpp"

namespace riskfuse {

namespace {

std::string site_name(CancerSite c) { return c == CancerSite::breast ? "breast" : "ovarian"; }

std::string race_key(std::optional<Race> r) { return r ? std::string(to_string(*r)) : std::string("all"); }

std::string penetrance_key(CancerSite c, Sex s, Genotype g, std::optional<Race> r) {
  return site_name(c) + ":" + std::string(to_string(s)) + ":" + std::to_string(index(g)) + ":" + race_key(r);
}

void check_curve(const std::vector<double>& curve, const std::string& what, bool is_mass_function) {
  if (curve.size() != static_cast<std::size_t>(kMaxAge))
    throw ParameterError(what + ": expected 94 ages, got " + std::to_string(curve.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (!(curve[i] >= 0.0 && curve[i] <= 1.0))
      throw ParameterError(what + ": value at age " + std::to_string(i + 1) + " outside [0, 1]");
    total += curve[i];
  }
  if (is_mass_function && total > 1.0 + 1e-12) throw ParameterError(what + ": cumulative penetrance exceeds 1");
}

}  // namespace

std::vector<double> hazard_from_penetrance(std::span<const double> pen, std::span<const double> mortality) {
  if (pen.size() != mortality.size()) throw ParameterError("penetrance and mortality lengths differ");
  std::vector<double> hazard(pen.size());
  double survival = 1.0;
  for (std::size_t i = 0; i < pen.size(); ++i) {
    if (!(survival > 0.0))
      throw ParameterError("penetrance inconsistent with mortality: survivor product not positive at age " +
                           std::to_string(i + 1));
    hazard[i] = pen[i] / survival;
    if (hazard[i] < 0.0 || hazard[i] + mortality[i] > 1.0 + 1e-12)
      throw ParameterError("hazard out of range at age " + std::to_string(i + 1));
    survival *= 1.0 - hazard[i] - mortality[i];
  }
  return hazard;
}

std::vector<double> penetrance_from_hazard(std::span<const double> hazard, std::span<const double> mortality) {
  if (hazard.size() != mortality.size()) throw ParameterError("hazard and mortality lengths differ");
  std::vector<double> pen(hazard.size());
  double survival = 1.0;
  for (std::size_t i = 0; i < hazard.size(); ++i) {
    pen[i] = hazard[i] * survival;
    survival *= 1.0 - hazard[i] - mortality[i];
  }
  return pen;
}

void PenetranceTable::set_penetrance(CancerSite cancer, Sex sex, Genotype g, std::optional<Race> race,
                                     std::vector<double> curve) {
  auto key = penetrance_key(cancer, sex, g, race);
  check_curve(curve, "penetrance " + key, true);
  penetrance_[key] = std::move(curve);
  finalized_ = false;
}

void PenetranceTable::set_mortality(Sex sex, std::optional<Race> race, std::vector<double> curve) {
  auto key = std::string(to_string(sex)) + ":" + race_key(race);
  check_curve(curve, "mortality " + key, false);
  mortality_[key] = std::move(curve);
  finalized_ = false;
}

void PenetranceTable::set_allele_frequencies(bool ashkenazi, AlleleFrequencies f) {
  for (double v : {f.brca1, f.brca2})
    if (!(v >= 0.0 && v < 0.5)) throw ParameterError("allele frequency outside [0, 0.5)");
  (ashkenazi ? ashkenazi_ : general_) = f;
}

const std::vector<double>* PenetranceTable::find(const std::map<std::string, std::vector<double>>& m,
                                                 const std::string& prefix, Race race) const {
  for (const auto& suffix : {std::string(to_string(race)), std::string("all"), std::string("white")}) {
    auto it = m.find(prefix + suffix);
    if (it != m.end()) return &it->second;
  }
  return nullptr;
}

void PenetranceTable::finalize() {
  if (!ashkenazi_ || !general_) throw ParameterError("allele frequencies missing for an ethnicity");
  breast_hazard_.clear();
  for (int r = 0; r <= static_cast<int>(Race::unknown); ++r) {
    auto race = static_cast<Race>(r);
    const auto* mort = find(mortality_, "female:", race);
    if (!mort) throw ParameterError("female mortality table missing for race " + std::string(to_string(race)));
    for (auto g : kGenotypes) {
      auto prefix = "breast:female:" + std::to_string(index(g)) + ":";
      const auto* pen = find(penetrance_, prefix, race);
      if (!pen) throw ParameterError("female breast penetrance missing for genotype " + std::to_string(index(g)));
      try {
        breast_hazard_[prefix + std::string(to_string(race))] = hazard_from_penetrance(*pen, *mort);
      } catch (const ParameterError& e) {
        throw ParameterError(prefix + std::string(to_string(race)) + ": " + e.what());
      }
    }
  }
  finalized_ = true;
}

std::span<const double> PenetranceTable::penetrance(CancerSite cancer, Sex sex, Genotype g, Race race) const {
  auto prefix = site_name(cancer) + ":" + std::string(to_string(sex)) + ":" + std::to_string(index(g)) + ":";
  const auto* v = find(penetrance_, prefix, race);
  if (!v) throw ParameterError("penetrance table missing: " + prefix + std::string(to_string(race)));
  return *v;
}

std::span<const double> PenetranceTable::mortality(Sex sex, Race race) const {
  const auto* v = find(mortality_, std::string(to_string(sex)) + ":", race);
  if (!v) throw ParameterError("mortality table missing for " + std::string(to_string(sex)));
  return *v;
}

std::span<const double> PenetranceTable::breast_hazard(Genotype g, Race race) const {
  if (!finalized_) throw ParameterError("penetrance table used before finalize()");
  auto it = breast_hazard_.find("breast:female:" + std::to_string(index(g)) + ":" + std::string(to_string(race)));
  if (it == breast_hazard_.end()) throw ParameterError("breast hazard missing");
  return it->second;
}

AlleleFrequencies PenetranceTable::allele_frequencies(bool ashkenazi) const {
  const auto& f = ashkenazi ? ashkenazi_ : general_;
  if (!f) throw ParameterError("allele frequencies missing");
  return *f;
}

// ---------------------------------------------------------------------------

std::array<double, 4> founder_prior(AlleleFrequencies f) {
  double q1 = 1.0 - (1.0 - f.brca1) * (1.0 - f.brca1);
  double q2 = 1.0 - (1.0 - f.brca2) * (1.0 - f.brca2);
  return {(1 - q1) * (1 - q2), q1 * (1 - q2), (1 - q1) * q2, q1 * q2};
}

namespace {

double locus_transmission(bool child, bool mother, bool father) {
  double p_none = (mother ? 0.5 : 1.0) * (father ? 0.5 : 1.0);
  return child ? 1.0 - p_none : p_none;
}

}  // namespace

double transmission(Genotype child, Genotype mother, Genotype father) {
  return locus_transmission(carries_brca1(child), carries_brca1(mother), carries_brca1(father)) *
         locus_transmission(carries_brca2(child), carries_brca2(mother), carries_brca2(father));
}

namespace {

double site_likelihood(std::span<const double> pen, std::optional<int> onset, int observed_through) {
  if (onset) return pen[*onset - 1];
  double cum = 0.0;
  for (int t = 1; t <= observed_through; ++t) cum += pen[t - 1];
  return std::max(0.0, 1.0 - cum);
}

bool test_allows(GeneticTest t, Genotype g) {
  switch (t) {
    case GeneticTest::brca1_positive: return g == Genotype::brca1;
    case GeneticTest::brca2_positive: return g == Genotype::brca2;
    case GeneticTest::both_positive: return g == Genotype::both;
    case GeneticTest::negative: return g == Genotype::noncarrier;
  }
  return true;
}

}  // namespace

std::array<double, 4> phenotype_likelihood(const Relative& m, Race race, const PenetranceTable& table) {
  std::array<double, 4> lik{};
  for (auto g : kGenotypes) {
    if (m.genetic_test && !test_allows(*m.genetic_test, g)) {
      lik[index(g)] = 0.0;
      continue;
    }
    int breast_through = m.current_age_or_death_age;
    if (m.prophylactic_mastectomy_age) breast_through = std::min(breast_through, *m.prophylactic_mastectomy_age);
    double l = site_likelihood(table.penetrance(CancerSite::breast, m.sex, g, race), m.breast_cancer, breast_through);
    if (m.sex == Sex::female) {
      int ovarian_through = m.current_age_or_death_age;
      if (m.prophylactic_oophorectomy_age)
        ovarian_through = std::min(ovarian_through, *m.prophylactic_oophorectomy_age);
      l *= site_likelihood(table.penetrance(CancerSite::ovarian, m.sex, g, race), m.ovarian_cancer, ovarian_through);
    }
    lik[index(g)] = l;
  }
  return lik;
}

Race effective_race(const Relative& member, const Pedigree& p) {
  if (member.race != Race::unknown) return member.race;
  if (p.proband().race != Race::unknown) return p.proband().race;
  return Race::white;
}

double future_risk(std::span<const double> hazard, std::span<const double> mortality, int a, int tau) {
  if (a < 1 || tau < 0) throw DomainError("age must be >= 1 and horizon >= 0");
  if (a + tau > static_cast<int>(hazard.size()) || hazard.size() != mortality.size())
    throw DomainError("horizon a + tau = " + std::to_string(a + tau) + " beyond table support");
  double risk = 0.0;
  double survival = 1.0;
  for (int t = a + 1; t <= a + tau; ++t) {
    risk += hazard[t - 1] * survival;
    survival *= 1.0 - hazard[t - 1] - mortality[t - 1];
  }
  return risk;
}

double genotype_future_risk(Genotype g, int a, int tau, const PenetranceTable& table, Race race) {
  return future_risk(table.breast_hazard(g, race), table.mortality(Sex::female, race), a, tau);
}

double brcapro_risk(const GenotypePosterior& posterior, int a, int tau, const PenetranceTable& table, Race race) {
  double risk = 0.0;
  for (auto g : kGenotypes) {
    if (posterior[g] == 0.0) continue;
    risk += posterior[g] * genotype_future_risk(g, a, tau, table, race);
  }
  return risk;
}

double brcapro_risk(const Pedigree& p, int a, int tau, const PenetranceTable& table) {
  if (p.proband().breast_cancer && *p.proband().breast_cancer <= a)
    throw DomainError("proband already has breast cancer at the projection age");
  return brcapro_risk(carrier_posterior(p, table), a, tau, table, effective_race(p.proband(), p));
}

}  // namespace riskfuse
