#pragma once

#include <map>
#include <span>

#include "riskfuse/mendelian.hpp"
#include "riskfuse/relative_hazard.hpp"

namespace riskfuse {

/// (1 - AR) factors per race and age band used to normalise r(t, X) to the
/// non-carrier population. AR among non-carriers is approximated by AR.
struct NormalizationTable {
  std::map<Race, std::array<double, 2>> one_minus_ar;

  double factor(Race race, AgeBand band) const;
  static NormalizationTable identity();
};

struct CombineOptions {
  /// Zero the affected-relatives covariate before modifying the hazard (sensitivity analysis).
  bool include_family_history = true;
  /// Reserved: modify carrier hazards as well. Not implemented; setting it throws.
  bool modify_carriers = false;
};

/// r0(t, X) = r(t, X) * (1 - AR(t)).
double normalized_relative_hazard(double age, const RiskFactors& x, const RelHazCoefficients& beta,
                                  const NormalizationTable& norm, Race race);

/// Cumulative incidence over (a, a + tau] under the discrete modified law:
/// yearly breast hazard 1 - (1 - h(t))^r0(t) and survivor factor
/// (1 - h(u))^r0(u) - mortality(u). `r0` is indexed like `hazard` (index 0 = age 1).
/// Throws ParameterError when a survivor factor is not positive.
double modified_future_risk(std::span<const double> hazard, std::span<const double> mortality,
                            std::span<const double> r0, int a, int tau);

/// Non-carrier risk with the hazard modified by the normalised relative hazard.
double modified_noncarrier_risk(int a, int tau, const RiskFactors& x, const PenetranceTable& table, Race race,
                                const RelHazCoefficients& beta, const NormalizationTable& norm,
                                const CombineOptions& options = {});

/// Carrier-posterior mixture of BRCAPRO carrier risks and the modified non-carrier risk.
double combined_risk_m(const GenotypePosterior& posterior, const RiskFactors& x, int a, int tau,
                       const PenetranceTable& table, Race race, const RelHazCoefficients& beta,
                       const NormalizationTable& norm, const CombineOptions& options = {});

double combined_risk_m(const Pedigree& p, const RiskFactors& x, int a, int tau, const PenetranceTable& table,
                       const RelHazCoefficients& beta, const NormalizationTable& norm,
                       const CombineOptions& options = {});

/// Per-age r0 vector (index 0 = age 1) for the given covariates.
std::vector<double> normalized_hazard_ratio_curve(const RiskFactors& x, const RelHazCoefficients& beta,
                                                  const NormalizationTable& norm, Race race,
                                                  const CombineOptions& options = {});

}  // namespace riskfuse
