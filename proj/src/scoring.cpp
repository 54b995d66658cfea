#include "riskfuse/scoring.hpp"

#include <cmath>
#include <exception>
#include <limits>

#include "riskfuse/errors.hpp"
#include "riskfuse/penetrance_mod.hpp"

namespace riskfuse {

ModelSpec builtin_model(std::string_view name) {
  if (name == "brcapro") return {"brcapro", ModelKind::brcapro, nullptr};
  if (name == "bcrat") return {"bcrat", ModelKind::bcrat, nullptr};
  if (name == "combined_m") return {"combined_m", ModelKind::combined_m, nullptr};
  throw ValidationError("unknown model '" + std::string(name) + "' (expected brcapro, bcrat, combined_m or ensemble:<path>)");
}

ModelSpec model_from_cli_name(std::string_view name) {
  constexpr std::string_view prefix = "ensemble:";
  if (name.substr(0, prefix.size()) != prefix) return builtin_model(name);
  std::string path(name.substr(prefix.size()));
  if (path.empty()) throw ValidationError("ensemble model needs a path: ensemble:<file>");
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return {std::string(name), ModelKind::ensemble, std::make_shared<FittedEnsemble>(ensemble_from_json(doc))};
}

Scorer::Scorer(const ParameterSet& params, CombineOptions options) : params_(params), options_(options) {}

PreparedProband Scorer::prepare(const Pedigree& p, const RiskFactors& x, std::optional<int> age) const {
  PreparedProband out;
  out.pedigree = &p;
  out.risk_factors = x;
  out.age = age.value_or(p.proband().current_age_or_death_age);
  out.race = effective_race(p.proband(), p);
  out.posterior = carrier_posterior(p, params_.penetrance);
  return out;
}

std::optional<std::string> Scorer::ineligibility(const ModelSpec& model, const PreparedProband& p, int tau) const {
  if (tau < 1) return "horizon must be at least 1 year";
  if (p.age < 1 || p.age + tau > kMaxAge)
    return "age + horizon = " + std::to_string(p.age + tau) + " is beyond the table support (94)";
  const auto& proband = p.pedigree->proband();
  if (proband.breast_cancer && *proband.breast_cancer <= p.age) return "proband already has breast cancer";
  if (model.uses_relative_hazard()) {
    if (is_known_carrier(*p.pedigree)) return "relative-hazard model is not recommended for known carriers";
    if (p.age < static_cast<int>(kBaselineStartAge)) return "relative-hazard model requires age >= 20";
    if (p.age + tau > static_cast<int>(kBaselineEndAge)) return "relative-hazard model projects only up to age 90";
  }
  if (model.kind == ModelKind::ensemble) {
    const auto& m = *model.ensemble;
    if (m.kind == EnsembleKind::fixed_horizon && !m.tau_grid.empty() && tau != m.tau_grid.front())
      return "ensemble was fit for tau = " + std::to_string(m.tau_grid.front());
    if (m.kind == EnsembleKind::time_varying && (tau < m.tau_grid.front() || tau > m.tau_grid.back()))
      return "tau outside the ensemble's fitted range";
  }
  return std::nullopt;
}

double Scorer::brcapro(const PreparedProband& p, int tau) const {
  return brcapro_risk(p.posterior, p.age, tau, params_.penetrance, p.race);
}

double Scorer::bcrat(const PreparedProband& p, int tau) const {
  const auto& rh = params_.relative_hazard;
  return bcrat_absolute_risk(p.age, tau, p.risk_factors, rh.baseline_for(p.race), rh.coefficients_for(p.race));
}

double Scorer::combined_m(const PreparedProband& p, int tau) const {
  return combined_risk_m(p.posterior, p.risk_factors, p.age, tau, params_.penetrance, p.race,
                         params_.relative_hazard.coefficients_for(p.race), params_.normalization, options_);
}

double Scorer::ensemble(const FittedEnsemble& m, const PreparedProband& p, int tau) const {
  return predict_ensemble(m, brcapro(p, tau), bcrat(p, tau), tau);
}

double Scorer::score(const ModelSpec& model, const PreparedProband& p, int tau) const {
  if (auto why = ineligibility(model, p, tau)) throw EligibilityError(model.name + ": " + *why);
  switch (model.kind) {
    case ModelKind::brcapro: return brcapro(p, tau);
    case ModelKind::bcrat: return bcrat(p, tau);
    case ModelKind::combined_m: return combined_m(p, tau);
    case ModelKind::ensemble: return ensemble(*model.ensemble, p, tau);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace {

std::vector<double> score_record(const CohortRecord& r, std::span<const ModelSpec> models, std::span<const int> taus,
                                 const Scorer& scorer) {
  auto prepared = scorer.prepare(r.pedigree, r.risk_factors, r.baseline_age);
  std::vector<double> row(models.size() * taus.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t m = 0; m < models.size(); ++m)
    for (std::size_t k = 0; k < taus.size(); ++k)
      if (!scorer.ineligibility(models[m], prepared, taus[k]))
        row[m * taus.size() + k] = scorer.score(models[m], prepared, taus[k]);
  return row;
}

CohortScores empty_scores(std::size_t n, std::span<const ModelSpec> models, std::span<const int> taus) {
  CohortScores out;
  for (const auto& m : models) out.models.push_back(m.name);
  out.taus.assign(taus.begin(), taus.end());
  out.values.resize(n);
  return out;
}

}  // namespace

CohortScores score_cohort(std::span<const CohortRecord> cohort, std::span<const ModelSpec> models,
                          std::span<const int> taus, const Scorer& scorer) {
  auto out = empty_scores(cohort.size(), models, taus);
  const auto n = static_cast<std::ptrdiff_t>(cohort.size());
  std::vector<std::exception_ptr> errors(cohort.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out.values[i] = score_record(cohort[i], models, taus, scorer);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

CohortScores score_cohort_serial(std::span<const CohortRecord> cohort, std::span<const ModelSpec> models,
                                 std::span<const int> taus, const Scorer& scorer) {
  auto out = empty_scores(cohort.size(), models, taus);
  for (std::size_t i = 0; i < cohort.size(); ++i) out.values[i] = score_record(cohort[i], models, taus, scorer);
  return out;
}

}  // namespace riskfuse
