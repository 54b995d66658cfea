#include "riskfuse/relative_hazard.hpp"

#include <algorithm>
#include <cmath>

#include "riskfuse/errors.hpp"

namespace riskfuse {

MenarcheCategory menarche_category(const RiskFactors& x) {
  if (!x.age_at_menarche || *x.age_at_menarche >= 14) return MenarcheCategory::ge14;
  if (*x.age_at_menarche >= 12) return MenarcheCategory::age12_13;
  return MenarcheCategory::lt12;
}

BiopsyCategory biopsy_category(const RiskFactors& x) {
  switch (x.num_biopsies) {
    case BiopsyCount::one: return BiopsyCategory::one;
    case BiopsyCount::two_or_more: return BiopsyCategory::two_plus;
    default: return BiopsyCategory::none;
  }
}

FirstBirthCategory first_birth_category(const RiskFactors& x) {
  int x3 = x.first_birth_covariate();
  if (x3 < 20) return FirstBirthCategory::lt20;
  if (x3 <= 24) return FirstBirthCategory::age20_24;
  if (x3 <= 29) return FirstBirthCategory::age25_29;
  return FirstBirthCategory::gt29;
}

RelativesCategory relatives_category(const RiskFactors& x) {
  if (x.affected_first_degree <= 0) return RelativesCategory::none;
  if (x.affected_first_degree == 1) return RelativesCategory::one;
  return RelativesCategory::two_plus;
}

double relative_hazard(AgeBand band, MenarcheCategory x1, BiopsyCategory x2, FirstBirthCategory x3,
                       RelativesCategory x4, Hyperplasia x5, const RelHazCoefficients& b) {
  const bool old = band == AgeBand::fifty_plus;
  const bool biopsy = x2 != BiopsyCategory::none;
  double lp = 0.0;
  if (x1 == MenarcheCategory::age12_13) lp += b(1);
  if (x1 == MenarcheCategory::lt12) lp += b(2);
  if (x2 == BiopsyCategory::one) lp += b(3);
  if (x2 == BiopsyCategory::two_plus) lp += b(4);
  if (old && x2 == BiopsyCategory::one) lp += b(5);
  if (old && biopsy) lp += b(6);

  static constexpr int kFirstBirthMain[] = {0, 7, 8, 9};
  static constexpr int kOneRelative[] = {0, 12, 13, 14};
  static constexpr int kTwoRelatives[] = {0, 15, 16, 17};
  const int fb = static_cast<int>(x3);
  if (fb > 0) lp += b(kFirstBirthMain[fb]);
  if (x4 == RelativesCategory::one) {
    lp += b(10);
    if (fb > 0) lp += b(kOneRelative[fb]);
  } else if (x4 == RelativesCategory::two_plus) {
    lp += b(11);
    if (fb > 0) lp += b(kTwoRelatives[fb]);
  }

  if (biopsy && x5 == Hyperplasia::no) lp += b(18);
  if (biopsy && x5 == Hyperplasia::yes) lp += b(19);
  return std::exp(lp);
}

double relative_hazard(double age, const RiskFactors& x, const RelHazCoefficients& beta) {
  return relative_hazard(age_band(age), menarche_category(x), biopsy_category(x), first_birth_category(x),
                         relatives_category(x), x.atypical_hyperplasia, beta);
}

void CovariateDistribution::validate() const {
  auto check = [](double total, const char* what) {
    if (std::abs(total - 1.0) > 1e-9) throw ParameterError(std::string("covariate distribution '") + what +
                                                           "' does not sum to 1");
  };
  auto sum3 = [](const std::array<double, 3>& a) { return a[0] + a[1] + a[2]; };
  for (const auto* arr : {&menarche, &biopsies, &hyperplasia})
    for (double p : *arr)
      if (p < 0.0) throw ParameterError("negative covariate probability");
  check(sum3(menarche), "menarche");
  check(sum3(biopsies), "biopsies");
  check(sum3(hyperplasia), "hyperplasia");
  double joint = 0.0;
  for (const auto& row : first_birth_relatives)
    for (double p : row) {
      if (p < 0.0) throw ParameterError("negative covariate probability");
      joint += p;
    }
  check(joint, "first_birth_relatives");
}

double expected_relative_hazard(const CovariateDistribution& d, const RelHazCoefficients& beta, AgeBand band) {
  d.validate();
  double e = 0.0;
  for (int x1 = 0; x1 < 3; ++x1)
    for (int x2 = 0; x2 < 3; ++x2)
      for (int x5 = 0; x5 < 3; ++x5)
        for (int x3 = 0; x3 < 4; ++x3)
          for (int x4 = 0; x4 < 3; ++x4) {
            double p = d.menarche[x1] * d.biopsies[x2] * d.hyperplasia[x5] * d.first_birth_relatives[x3][x4];
            if (p == 0.0) continue;
            e += p * relative_hazard(band, static_cast<MenarcheCategory>(x1), static_cast<BiopsyCategory>(x2),
                                     static_cast<FirstBirthCategory>(x3), static_cast<RelativesCategory>(x4),
                                     static_cast<Hyperplasia>(x5), beta);
          }
  return e;
}

double attributable_fraction(const CovariateDistribution& dist, const RelHazCoefficients& beta, AgeBand band) {
  return 1.0 - 1.0 / expected_relative_hazard(dist, beta, band);
}

namespace {

// Walks the piecewise-constant segments of [age, age + tau): grid cells
// (whose edges include the band switch at 50). Calls f(breast, competing, length).
template <class F>
void for_each_segment(double age, double tau, const RiskFactors& x, const BaselineHazard& base,
                      const RelHazCoefficients& beta, F&& f) {
  if (age < kBaselineStartAge) throw DomainError("relative-hazard model requires age >= 20");
  if (tau < 0.0) throw DomainError("horizon must be non-negative");
  if (age + tau > kBaselineEndAge + 1e-9) throw DomainError("projection beyond age 90 is outside the hazard grid");
  const double r_young = relative_hazard(AgeBand::under_50, menarche_category(x), biopsy_category(x),
                                         first_birth_category(x), relatives_category(x), x.atypical_hyperplasia, beta);
  const double r_old = relative_hazard(AgeBand::fifty_plus, menarche_category(x), biopsy_category(x),
                                       first_birth_category(x), relatives_category(x), x.atypical_hyperplasia, beta);
  double t = age;
  const double end = age + tau;
  while (t < end) {
    const int cell = baseline_cell(t);
    const double cell_end = kBaselineCuts[cell + 1];
    double seg_end = std::min(cell_end, end);
    auto band = age_band(t);
    double r = band == AgeBand::fifty_plus ? r_old : r_young;
    double h_b = base.breast[cell] * base.one_minus_ar[static_cast<int>(band)] * r;
    f(h_b, base.competing[cell], seg_end - t);
    t = seg_end;
  }
}

}  // namespace

double bcrat_absolute_risk(double age, double tau, const RiskFactors& x, const BaselineHazard& baseline,
                           const RelHazCoefficients& beta) {
  double risk = 0.0;
  double survival = 1.0;
  for_each_segment(age, tau, x, baseline, beta, [&](double h_b, double h_d, double len) {
    double total = h_b + h_d;
    double decay = std::exp(-total * len);
    if (total > 0.0) risk += survival * h_b / total * (1.0 - decay);
    survival *= decay;
  });
  return risk;
}

double bcrat_survival(double age, double tau, const RiskFactors& x, const BaselineHazard& baseline,
                      const RelHazCoefficients& beta) {
  double survival = 1.0;
  for_each_segment(age, tau, x, baseline, beta,
                   [&](double h_b, double h_d, double len) { survival *= std::exp(-(h_b + h_d) * len); });
  return survival;
}

int baseline_cell(double t) {
  auto it = std::upper_bound(kBaselineCuts.begin(), kBaselineCuts.end(), t);
  const int cell = static_cast<int>(it - kBaselineCuts.begin()) - 1;
  return std::clamp(cell, 0, kBaselineIntervals - 1);
}

const RelHazCoefficients& RelativeHazardModel::coefficients_for(Race r) const {
  auto it = coefficients.find(r);
  if (it == coefficients.end()) it = coefficients.find(Race::white);
  if (it == coefficients.end()) throw ParameterError("relative-hazard coefficients missing");
  return it->second;
}

const BaselineHazard& RelativeHazardModel::baseline_for(Race r) const {
  auto it = baseline.find(r);
  if (it == baseline.end()) it = baseline.find(Race::white);
  if (it == baseline.end()) throw ParameterError("baseline hazard missing");
  return it->second;
}

const CovariateDistribution& RelativeHazardModel::covariates_for(Race r, AgeBand band) const {
  auto it = covariates.find(r);
  if (it == covariates.end()) it = covariates.find(Race::white);
  if (it == covariates.end()) throw ParameterError("covariate distribution missing");
  return it->second[static_cast<int>(band)];
}

}  // namespace riskfuse
