#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskfuse/cohort.hpp"
#include "riskfuse/ensemble.hpp"
#include "riskfuse/params.hpp"

namespace riskfuse {

enum class ModelKind { brcapro, bcrat, combined_m, ensemble };

struct ModelSpec {
  std::string name;  // "brcapro", "bcrat", "combined_m" or "ensemble:<label>"
  ModelKind kind = ModelKind::brcapro;
  std::shared_ptr<const FittedEnsemble> ensemble;

  /// Model needs the relative-hazard prediction (and its eligibility rules).
  bool uses_relative_hazard() const { return kind == ModelKind::bcrat || kind == ModelKind::ensemble; }
};

ModelSpec builtin_model(std::string_view name);
/// "ensemble:<path>" loads the fitted model from a JSON file.
ModelSpec model_from_cli_name(std::string_view name);

/// Per-proband quantities shared across models and horizons.
struct PreparedProband {
  const Pedigree* pedigree = nullptr;
  RiskFactors risk_factors;
  int age = 0;
  Race race = Race::white;
  GenotypePosterior posterior;
};

class Scorer {
 public:
  explicit Scorer(const ParameterSet& params, CombineOptions options = {});

  const ParameterSet& params() const { return params_; }

  PreparedProband prepare(const Pedigree& p, const RiskFactors& x, std::optional<int> age = std::nullopt) const;

  /// Reason the model cannot score this proband at tau, or nullopt.
  std::optional<std::string> ineligibility(const ModelSpec& model, const PreparedProband& p, int tau) const;

  double brcapro(const PreparedProband& p, int tau) const;
  double bcrat(const PreparedProband& p, int tau) const;
  double combined_m(const PreparedProband& p, int tau) const;
  double ensemble(const FittedEnsemble& m, const PreparedProband& p, int tau) const;

  /// Throws EligibilityError when the model is not applicable.
  double score(const ModelSpec& model, const PreparedProband& p, int tau) const;

 private:
  const ParameterSet& params_;
  CombineOptions options_;
};

/// Scores of every record for every (model, tau), laid out as
/// values[record][model * taus.size() + tau_index]. Ineligible entries are NaN.
struct CohortScores {
  std::vector<std::string> models;
  std::vector<int> taus;
  std::vector<std::vector<double>> values;

  double at(std::size_t record, std::size_t model, std::size_t tau_index) const {
    return values[record][model * taus.size() + tau_index];
  }
};

/// OpenMP-parallel over records; results are independent of thread count.
CohortScores score_cohort(std::span<const CohortRecord> cohort, std::span<const ModelSpec> models,
                          std::span<const int> taus, const Scorer& scorer);
/// Serial reference implementation of score_cohort.
CohortScores score_cohort_serial(std::span<const CohortRecord> cohort, std::span<const ModelSpec> models,
                                 std::span<const int> taus, const Scorer& scorer);

}  // namespace riskfuse
