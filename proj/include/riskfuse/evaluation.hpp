#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskfuse/ensemble.hpp"
#include "riskfuse/json_io.hpp"

namespace riskfuse {

/// Binary outcome at the evaluation horizon with its IPCW weight.
/// Records censored before the horizon carry weight 0.
struct BinaryOutcomes {
  std::vector<double> y;       // 1 = case by the horizon
  std::vector<double> weight;  // IPCW weight
};

/// Per-record multiplicity (bootstrap counts); empty means all 1.
using Multiplicity = std::span<const double>;

/// sum(m w y) / sum(m p). Throws DomainError when the expected count is 0.
double oe_ratio(std::span<const double> p, const BinaryOutcomes& o, Multiplicity m = {});
/// Weighted Mann-Whitney statistic, ties 1/2.
double auc_ipcw(std::span<const double> p, const BinaryOutcomes& o, Multiplicity m = {});
/// Same statistic for records already sorted by ascending p (`order`).
double auc_ipcw_sorted(std::span<const double> p, const BinaryOutcomes& o, std::span<const std::size_t> order,
                       Multiplicity m = {});
double brier_ipcw(std::span<const double> p, const BinaryOutcomes& o, Multiplicity m = {});

inline constexpr double kLogScoreClip = 1e-12;
double log_score(std::span<const double> p, const BinaryOutcomes& o, Multiplicity m = {});

inline constexpr double kSnbThreshold = 0.0167;
/// TPR - [t/(1-t)] / [pi/(1-pi)] * FPR, classifying p >= t as positive.
double snb(std::span<const double> p, const BinaryOutcomes& o, double threshold = kSnbThreshold, Multiplicity m = {});

/// 100 (b - a) / b: percent improvement of score a over reference b (lower is better).
double relative_improvement(double a, double b);

/// Time-to-event data for the concordance statistic.
struct SurvivalData {
  std::vector<double> time;
  std::vector<int> event;      // 1 = breast cancer at `time`
  std::vector<double> g_minus;  // G(time-) in the record's stratum
};

inline constexpr double kUnoTau = 10.0;
/// Concordance over pairs T_i < T_j, T_i <= tau, event_i = 1, weighted by
/// G(T_i-)^-2; score ties count 1/2. Throws DomainError when no pair is usable.
double uno_c(std::span<const double> score, const SurvivalData& s, double tau = kUnoTau, Multiplicity m = {});

struct CalibrationBin {
  double lower = 0.0, upper = 0.0;  // prediction range
  double count = 0.0;               // multiplicity-weighted records
  double mean_prediction = 0.0;
  double observed = 0.0;  // IPCW-weighted cases
  double expected = 0.0;
  double oe = 0.0, oe_lower = 0.0, oe_upper = 0.0;
};

/// Equal-count bins at weighted prediction deciles (stable order breaks
/// ties); bins whose boundaries coincide collapse into one.
std::vector<CalibrationBin> calibration_deciles(std::span<const double> p, const BinaryOutcomes& o, int bins = 10);

// --- bootstrap comparison ----------------------------------------------------

enum class Metric { oe, auc, brier, log_score, snb, uno_c };
std::string_view to_string(Metric m);
/// Whether larger values are better (O/E compares |O/E - 1| instead).
bool higher_is_better(Metric m);

struct EvaluationData {
  std::vector<std::string> models;
  std::vector<std::vector<double>> predictions;  // [model][record]
  BinaryOutcomes outcomes;
  std::optional<SurvivalData> survival;  // needed for uno_c
  double snb_threshold = kSnbThreshold;
  double uno_tau = kUnoTau;
};

struct MetricSummary {
  Metric metric;
  std::vector<double> estimate;  // per model
  std::vector<double> lower, upper;
  /// wins[a][b]: share of replicates where model a is strictly better than b.
  std::vector<std::vector<double>> wins;
  std::vector<std::vector<double>> ties;
};

struct MetricReport {
  std::vector<std::string> models;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<MetricSummary> metrics;
  /// Percent improvement in Brier / log score over the first model.
  std::vector<double> brier_improvement, log_improvement;

  json to_json() const;
};

double evaluate_metric(Metric metric, const EvaluationData& data, std::size_t model, Multiplicity m = {});

/// Percentile 95% intervals and win proportions over B bootstrap replicates.
/// Replicate b resamples with substream(seed, b); OpenMP-parallel with the
/// result independent of thread count.
MetricReport bootstrap_compare(const EvaluationData& data, std::span<const Metric> metrics, int replicates,
                               std::uint64_t seed);
/// Serial reference for bootstrap_compare.
MetricReport bootstrap_compare_serial(const EvaluationData& data, std::span<const Metric> metrics, int replicates,
                                      std::uint64_t seed);

/// Builds EvaluationData at horizon tau from a cohort, its censoring model and
/// per-model predictions ([model][record]).
EvaluationData make_evaluation_data(std::span<const CohortRecord> cohort, std::vector<std::string> models,
                                    std::vector<std::vector<double>> predictions, double tau, const CensoringModel& g,
                                    const StratumKey& key);

}  // namespace riskfuse
