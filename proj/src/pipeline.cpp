#include "riskfuse/pipeline.hpp"

#include <cmath>

#include "riskfuse/errors.hpp"

namespace riskfuse {

std::vector<CohortRecord> eligible_records(std::span<const CohortRecord> cohort, std::span<const ModelSpec> models,
                                           std::span<const int> taus, const Scorer& scorer) {
  std::vector<CohortRecord> out;
  for (const auto& r : cohort) {
    const auto p = scorer.prepare(r.pedigree, r.risk_factors, r.baseline_age);
    bool ok = true;
    for (const auto& m : models)
      for (int tau : taus) ok = ok && !scorer.ineligibility(m, p, tau);
    if (ok) out.push_back(r);
  }
  return out;
}

BasePredictions base_predictions(std::span<const CohortRecord> cohort, std::span<const int> taus, const Scorer& scorer) {
  const ModelSpec models[] = {builtin_model("brcapro"), builtin_model("bcrat")};
  const auto scores = score_cohort(cohort, models, taus, scorer);
  BasePredictions out;
  out.first.resize(cohort.size());
  out.second.resize(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i)
    for (std::size_t k = 0; k < taus.size(); ++k) {
      const double a = scores.at(i, 0, k), b = scores.at(i, 1, k);
      if (std::isnan(a) || std::isnan(b))
        throw EligibilityError("record " + cohort[i].id + " cannot be scored by both base models at tau " +
                               std::to_string(taus[k]));
      out.first[i].push_back(a);
      out.second[i].push_back(b);
    }
  return out;
}

Eigen::MatrixXd shift_features(const BasePredictions& base, std::span<const CohortRecord> cohort, std::size_t tau_index,
                               Transform transform) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(cohort.size()), 3);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    x(row, 0) = cohort[i].baseline_age;
    x(row, 1) = apply_transform(transform, base.first[i].at(tau_index));
    x(row, 2) = apply_transform(transform, base.second[i].at(tau_index));
  }
  return x;
}

EnsembleFitResult fit_ensemble_from_cohort(std::span<const CohortRecord> cohort, const Scorer& scorer,
                                           const EnsembleFitRequest& request) {
  if (request.taus.empty()) throw DomainError("no horizon given for the ensemble fit");
  if (request.kind == EnsembleKind::fixed_horizon && request.taus.size() != 1)
    throw DomainError("a fixed-horizon ensemble takes exactly one tau");
  const ModelSpec base_models[] = {builtin_model("brcapro"), builtin_model("bcrat")};

  EnsembleFitResult result;
  const auto train = eligible_records(cohort, base_models, request.taus, scorer);
  result.records = train.size();
  result.excluded = cohort.size() - train.size();
  if (train.empty()) throw DomainError("no training record is eligible for both base models");

  const auto key = make_stratum_key(request.strata, scorer.params().stratum_rules);
  const auto g = km_censoring(train, key);
  const auto base = base_predictions(train, request.taus, scorer);

  FrameOptions frame_options;
  frame_options.transform = request.transform;
  frame_options.censored = request.censored;
  if (!request.importance_target.empty()) {
    const auto target = eligible_records(request.importance_target, base_models, request.taus, scorer);
    if (target.empty()) throw DomainError("no importance-target record is eligible for both base models");
    const auto target_base = base_predictions(target, request.taus, scorer);
    auto fit = importance_weights(shift_features(base, train, 0, request.transform),
                                  shift_features(target_base, target, 0, request.transform), request.importance);
    frame_options.extra_weights = fit.weights;
    result.importance = std::move(fit);
  }

  const auto frame = build_training_frame(train, base, request.taus, g, key, frame_options);
  result.model = request.kind == EnsembleKind::fixed_horizon ? fit_ensemble_fixed(frame, request.fit)
                                                             : fit_ensemble_time(frame, request.fit);
  return result;
}

}  // namespace riskfuse
