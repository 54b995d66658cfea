#include "riskfuse/penetrance_mod.hpp"

#include <cmath>

#include "riskfuse/errors.hpp"

namespace riskfuse {

double NormalizationTable::factor(Race race, AgeBand band) const {
  auto it = one_minus_ar.find(race);
  if (it == one_minus_ar.end()) it = one_minus_ar.find(Race::white);
  if (it == one_minus_ar.end()) throw ParameterError("normalization factor missing for race " +
                                                     std::string(to_string(race)));
  return it->second[static_cast<int>(band)];
}

NormalizationTable NormalizationTable::identity() {
  NormalizationTable t;
  for (int r = 0; r <= static_cast<int>(Race::unknown); ++r) t.one_minus_ar[static_cast<Race>(r)] = {1.0, 1.0};
  return t;
}

double normalized_relative_hazard(double age, const RiskFactors& x, const RelHazCoefficients& beta,
                                  const NormalizationTable& norm, Race race) {
  return relative_hazard(age, x, beta) * norm.factor(race, age_band(age));
}

double modified_future_risk(std::span<const double> hazard, std::span<const double> mortality,
                            std::span<const double> r0, int a, int tau) {
  if (a < 1 || tau < 0) throw DomainError("age must be >= 1 and horizon >= 0");
  if (a + tau > static_cast<int>(hazard.size()) || hazard.size() != mortality.size() || r0.size() != hazard.size())
    throw DomainError("horizon a + tau = " + std::to_string(a + tau) + " beyond table support");
  double risk = 0.0;
  double survival = 1.0;
  for (int t = a + 1; t <= a + tau; ++t) {
    double escape = std::pow(1.0 - hazard[t - 1], r0[t - 1]);
    risk += (1.0 - escape) * survival;
    double factor = escape - mortality[t - 1];
    if (!(factor > 0.0) && t < a + tau)
      throw ParameterError("modified survivor factor not positive at age " + std::to_string(t));
    survival *= factor;
  }
  return risk;
}

std::vector<double> normalized_hazard_ratio_curve(const RiskFactors& x, const RelHazCoefficients& beta,
                                                  const NormalizationTable& norm, Race race,
                                                  const CombineOptions& options) {
  RiskFactors used = x;
  if (!options.include_family_history) used.affected_first_degree = 0;
  const double young = normalized_relative_hazard(49.0, used, beta, norm, race);
  const double old = normalized_relative_hazard(50.0, used, beta, norm, race);
  std::vector<double> curve(kMaxAge);
  for (int t = 1; t <= kMaxAge; ++t) curve[t - 1] = t >= 50 ? old : young;
  return curve;
}

double modified_noncarrier_risk(int a, int tau, const RiskFactors& x, const PenetranceTable& table, Race race,
                                const RelHazCoefficients& beta, const NormalizationTable& norm,
                                const CombineOptions& options) {
  auto r0 = normalized_hazard_ratio_curve(x, beta, norm, race, options);
  return modified_future_risk(table.breast_hazard(Genotype::noncarrier, race), table.mortality(Sex::female, race), r0,
                              a, tau);
}

double combined_risk_m(const GenotypePosterior& posterior, const RiskFactors& x, int a, int tau,
                       const PenetranceTable& table, Race race, const RelHazCoefficients& beta,
                       const NormalizationTable& norm, const CombineOptions& options) {
  if (options.modify_carriers) throw ParameterError("carrier hazard modification is not implemented");
  double risk = 0.0;
  for (auto g : kGenotypes) {
    double w = posterior[g];
    if (w == 0.0) continue;
    double r = g == Genotype::noncarrier ? modified_noncarrier_risk(a, tau, x, table, race, beta, norm, options)
                                         : genotype_future_risk(g, a, tau, table, race);
    risk += w * r;
  }
  return risk;
}

double combined_risk_m(const Pedigree& p, const RiskFactors& x, int a, int tau, const PenetranceTable& table,
                       const RelHazCoefficients& beta, const NormalizationTable& norm, const CombineOptions& options) {
  if (p.proband().breast_cancer && *p.proband().breast_cancer <= a)
    throw DomainError("proband already has breast cancer at the projection age");
  return combined_risk_m(carrier_posterior(p, table), x, a, tau, table, effective_race(p.proband(), p), beta, norm,
                         options);
}

}  // namespace riskfuse
