#pragma once

#include <array>
#include <map>

#include "riskfuse/pedigree.hpp"

namespace riskfuse {

enum class AgeBand { under_50 = 0, fifty_plus = 1 };

constexpr AgeBand age_band(double age) { return age >= 50.0 ? AgeBand::fifty_plus : AgeBand::under_50; }

/// Log relative hazards beta_1..beta_19 (stored at [0]..[18]).
struct RelHazCoefficients {
  std::array<double, 19> beta{};
  double operator()(int k) const { return beta[k - 1]; }
};

/// Piecewise-constant age intervals on [20, 90): five-year cells up to 80,
/// then one ten-year cell.
inline constexpr int kBaselineIntervals = 13;
inline constexpr std::array<double, kBaselineIntervals + 1> kBaselineCuts{20, 25, 30, 35, 40, 45, 50,
                                                                         55, 60, 65, 70, 75, 80, 90};
inline constexpr double kBaselineStartAge = kBaselineCuts.front();
inline constexpr double kBaselineEndAge = kBaselineCuts.back();

/// Cell holding age t (clamped to the grid).
int baseline_cell(double t);

struct BaselineHazard {
  std::array<double, kBaselineIntervals> breast{};     // general-population breast hazard per year
  std::array<double, kBaselineIntervals> competing{};  // competing mortality per year
  std::array<double, 2> one_minus_ar{1.0, 1.0};         // indexed by AgeBand
};

/// Covariate categories ordered as the indicator structure of the model.
enum class MenarcheCategory { ge14 = 0, age12_13 = 1, lt12 = 2 };
enum class BiopsyCategory { none = 0, one = 1, two_plus = 2 };
enum class FirstBirthCategory { lt20 = 0, age20_24 = 1, age25_29 = 2, gt29 = 3 };
enum class RelativesCategory { none = 0, one = 1, two_plus = 2 };

MenarcheCategory menarche_category(const RiskFactors& x);
BiopsyCategory biopsy_category(const RiskFactors& x);
FirstBirthCategory first_birth_category(const RiskFactors& x);
RelativesCategory relatives_category(const RiskFactors& x);

/// Population covariate distribution for one age band: independent factors
/// plus a joint (first birth x affected relatives) block.
struct CovariateDistribution {
  std::array<double, 3> menarche{1.0, 0.0, 0.0};     // MenarcheCategory
  std::array<double, 3> biopsies{1.0, 0.0, 0.0};     // BiopsyCategory
  std::array<double, 3> hyperplasia{0.0, 0.0, 1.0};  // Hyperplasia: no, yes, unknown
  std::array<std::array<double, 3>, 4> first_birth_relatives{};  // [FirstBirthCategory][RelativesCategory]

  /// Throws ParameterError when a factor does not sum to one (tolerance 1e-9).
  void validate() const;
};

/// exp of the linear predictor over the 19 indicators at age t.
double relative_hazard(double age, const RiskFactors& x, const RelHazCoefficients& beta);

/// Relative hazard from categories directly; used for expectations over a distribution.
double relative_hazard(AgeBand band, MenarcheCategory x1, BiopsyCategory x2, FirstBirthCategory x3,
                       RelativesCategory x4, Hyperplasia x5, const RelHazCoefficients& beta);

/// E[r(t, X)] for the band under the factorised distribution.
double expected_relative_hazard(const CovariateDistribution& dist, const RelHazCoefficients& beta, AgeBand band);

/// AR = 1 - 1 / E[r(t, X)].
double attributable_fraction(const CovariateDistribution& dist, const RelHazCoefficients& beta, AgeBand band);

/// Probability of breast cancer in (age, age + tau] given no cancer at
/// `age`, with baseline hazard breast * (1 - AR) scaled by r(t, X) and
/// competing mortality, integrated exactly over the piecewise-constant grid.
/// Requires age >= 20 and age + tau <= 90.
double bcrat_absolute_risk(double age, double tau, const RiskFactors& x, const BaselineHazard& baseline,
                           const RelHazCoefficients& beta);

/// All-cause survival from `age` to `age + tau` under the same model.
double bcrat_survival(double age, double tau, const RiskFactors& x, const BaselineHazard& baseline,
                      const RelHazCoefficients& beta);

/// Race-keyed parameters of the relative-hazard model; unknown races use white.
struct RelativeHazardModel {
  std::map<Race, RelHazCoefficients> coefficients;
  std::map<Race, BaselineHazard> baseline;
  std::map<Race, std::array<CovariateDistribution, 2>> covariates;

  const RelHazCoefficients& coefficients_for(Race r) const;
  const BaselineHazard& baseline_for(Race r) const;
  const CovariateDistribution& covariates_for(Race r, AgeBand band) const;
};

}  // namespace riskfuse
