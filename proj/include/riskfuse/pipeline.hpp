#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskfuse/ensemble.hpp"
#include "riskfuse/importance.hpp"
#include "riskfuse/scoring.hpp"

namespace riskfuse {

/// Records that every named model can score at every tau.
std::vector<CohortRecord> eligible_records(std::span<const CohortRecord> cohort, std::span<const ModelSpec> models,
                                           std::span<const int> taus, const Scorer& scorer);

/// BRCAPRO and BCRAT predictions for each record at each tau. Parallel over records.
BasePredictions base_predictions(std::span<const CohortRecord> cohort, std::span<const int> taus, const Scorer& scorer);

/// Covariate-shift features: baseline age and the transformed base predictions at tau.
Eigen::MatrixXd shift_features(const BasePredictions& base, std::span<const CohortRecord> cohort, std::size_t tau_index,
                               Transform transform);

struct EnsembleFitRequest {
  EnsembleKind kind = EnsembleKind::fixed_horizon;
  std::vector<int> taus{5};
  Transform transform = Transform::sqrt;
  CensoredRows censored = CensoredRows::keep_zero;
  std::string strata = "none";
  std::vector<CohortRecord> importance_target;  // empty: unit weights
  FitOptions fit;
  ImportanceOptions importance;
};

struct EnsembleFitResult {
  FittedEnsemble model;
  std::size_t records = 0;   // training probands used
  std::size_t excluded = 0;  // ineligible for a base model
  std::optional<ImportanceFit> importance;
};

/// Censoring model, pseudo-outcome frame and weighted fit from a training cohort.
EnsembleFitResult fit_ensemble_from_cohort(std::span<const CohortRecord> cohort, const Scorer& scorer,
                                           const EnsembleFitRequest& request);

}  // namespace riskfuse
