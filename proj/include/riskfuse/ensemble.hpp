#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "riskfuse/cohort.hpp"
#include "riskfuse/json_io.hpp"

namespace riskfuse {

// --- censoring ---------------------------------------------------------------

/// Right-continuous step function starting at 1: value(t) = values[k] for
/// times[k] <= t < times[k+1].
struct StepFunction {
  std::vector<double> times;
  std::vector<double> values;

  double at(double t) const;
  /// Left limit value(t-).
  double before(double t) const;
};

struct CensoringObservation {
  double time = 0.0;
  bool censored = false;  // true when follow-up ended without an event
  std::string stratum;
};

/// Kaplan-Meier estimate of the censoring survivor G per stratum.
class CensoringModel {
 public:
  CensoringModel() = default;
  explicit CensoringModel(std::map<std::string, StepFunction> strata) : strata_(std::move(strata)) {}

  /// G == 1 everywhere, for every stratum.
  static CensoringModel none();

  double at(double t, const std::string& stratum = {}) const;
  double before(double t, const std::string& stratum = {}) const;
  const std::map<std::string, StepFunction>& strata() const { return strata_; }
  bool is_identity() const { return identity_; }

 private:
  std::map<std::string, StepFunction> strata_;
  bool identity_ = false;
};

/// Product-limit estimate with censoring as the event; cancer and death end
/// follow-up without counting as censoring. Throws DomainError on an empty
/// stratum or non-positive time.
CensoringModel km_censoring(std::span<const CensoringObservation> data);
CensoringModel km_censoring(std::span<const CohortRecord> cohort, const StratumKey& key);

/// Inverse-probability-of-censoring weight for the binary outcome at tau:
/// 1 / G(min(T, tau)-) when the status at tau is known, else 0.
double binary_ipcw_weight(const CohortRecord& r, double tau, const CensoringModel& g, const std::string& stratum);

// --- stacking ----------------------------------------------------------------

enum class Transform { sqrt, none };
enum class EnsembleKind { fixed_horizon, time_varying };

std::string_view to_string(Transform t);
std::string_view to_string(EnsembleKind k);

double apply_transform(Transform t, double p);

struct FrameRow {
  std::size_t group = 0;  // proband index, for robust variance
  int tau = 0;
  double p1 = 0.0;  // transformed first-model prediction
  double p2 = 0.0;  // transformed second-model prediction
  double outcome = 0.0;
  double weight = 1.0;
};

struct TrainingFrame {
  Transform transform = Transform::sqrt;
  std::vector<FrameRow> rows;
};

/// Raw base-model predictions for record i at tau_grid[k]: p[i][k].
struct BasePredictions {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
};

/// How a proband censored before tau without an event enters the frame.
/// keep_zero gives the estimating equations their unbiasedness; omit drops the row.
enum class CensoredRows { keep_zero, omit };

struct FrameOptions {
  Transform transform = Transform::sqrt;
  CensoredRows censored = CensoredRows::keep_zero;
  std::vector<double> extra_weights;  // per record, default 1
};

/// One row per (record, tau): pseudo-outcome I(case by tau) / G(T-) for
/// observed cases, 0 otherwise.
TrainingFrame build_training_frame(std::span<const CohortRecord> cohort, const BasePredictions& predictions,
                                   std::span<const int> tau_grid, const CensoringModel& g, const StratumKey& key,
                                   const FrameOptions& options = {});

struct FittedEnsemble {
  EnsembleKind kind = EnsembleKind::fixed_horizon;
  Transform transform = Transform::sqrt;
  std::vector<double> coefficients;     // 4 (fixed) or 8 (time-varying)
  std::vector<double> standard_errors;  // robust; empty when not estimated
  std::vector<int> tau_grid;
  std::vector<int> dropped_terms;  // design columns removed for rank deficiency
  int iterations = 0;
  std::string training_hash;
  std::string created;

  void validate() const;
};

inline constexpr int kEnsembleSchemaVersion = 1;

json ensemble_to_json(const FittedEnsemble& m);
FittedEnsemble ensemble_from_json(const json& j);

struct FitOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;
};

/// Weighted quasi-binomial estimating equations sum w x (y - expit(x'b)) = 0
/// solved by damped Newton. Columns that are linearly dependent on earlier
/// ones are dropped (coefficient 0) and reported.
struct QuasiBinomialFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd robust_se;
  std::vector<int> dropped;
  int iterations = 0;
  double max_score = 0.0;
};

QuasiBinomialFit fit_quasi_binomial(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                    std::span<const std::size_t> groups, const FitOptions& options = {});

Eigen::MatrixXd design_matrix(const TrainingFrame& frame, EnsembleKind kind);

FittedEnsemble fit_ensemble_fixed(const TrainingFrame& frame, const FitOptions& options = {});
FittedEnsemble fit_ensemble_time(const TrainingFrame& frame, const FitOptions& options = {});

/// Inverse logit of the linear predictor on transformed p1, p2.
double predict_ensemble(const FittedEnsemble& model, double p1, double p2, int tau);

}  // namespace riskfuse
