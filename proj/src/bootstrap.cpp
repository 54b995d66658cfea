#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include "evaluation_internal.hpp"
#include "riskfuse/errors.hpp"
#include "riskfuse/rng.hpp"

namespace riskfuse {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::oe: return "oe";
    case Metric::auc: return "auc";
    case Metric::brier: return "brier";
    case Metric::log_score: return "log_score";
    case Metric::snb: return "snb";
    case Metric::uno_c: return "uno_c";
  }
  return "?";
}

bool higher_is_better(Metric m) { return m == Metric::auc || m == Metric::snb || m == Metric::uno_c; }

double evaluate_metric(Metric metric, const EvaluationData& data, std::size_t model, Multiplicity m) {
  const auto& p = data.predictions.at(model);
  switch (metric) {
    case Metric::oe: return oe_ratio(p, data.outcomes, m);
    case Metric::auc: return auc_ipcw(p, data.outcomes, m);
    case Metric::brier: return brier_ipcw(p, data.outcomes, m);
    case Metric::log_score: return log_score(p, data.outcomes, m);
    case Metric::snb: return snb(p, data.outcomes, data.snb_threshold, m);
    case Metric::uno_c:
      if (!data.survival) throw DomainError("Uno's C needs survival data");
      return uno_c(p, *data.survival, data.uno_tau, m);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace {

constexpr std::uint64_t kBootstrapSalt = 0x626f6f74;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Per-model sort orders shared by every replicate.
struct Prepared {
  std::vector<std::vector<std::size_t>> auc_order;
  std::vector<UnoPrepared> uno;
};

Prepared prepare(const EvaluationData& data, std::span<const Metric> metrics) {
  Prepared out;
  const bool auc = std::find(metrics.begin(), metrics.end(), Metric::auc) != metrics.end();
  const bool uno = std::find(metrics.begin(), metrics.end(), Metric::uno_c) != metrics.end();
  if (uno && !data.survival) throw DomainError("Uno's C needs survival data");
  for (const auto& p : data.predictions) {
    if (auc) {
      std::vector<std::size_t> order(p.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
      out.auc_order.push_back(std::move(order));
    }
    if (uno) out.uno.push_back(prepare_uno(p, *data.survival));
  }
  return out;
}

double metric_value(Metric metric, const EvaluationData& data, const Prepared& prep, std::size_t model,
                    Multiplicity m) {
  try {
    switch (metric) {
      case Metric::auc: return auc_ipcw_sorted(data.predictions[model], data.outcomes, prep.auc_order[model], m);
      case Metric::uno_c: return uno_c_prepared(prep.uno[model], *data.survival, data.uno_tau, m);
      default: return evaluate_metric(metric, data, model, m);
    }
  } catch (const DomainError&) {
    return kNaN;  // degenerate resample
  }
}

std::vector<double> multiplicity(std::size_t n, std::uint64_t seed, std::uint64_t b) {
  Rng rng = substream(seed, b, kBootstrapSalt);
  std::vector<double> m(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
    m[std::min(i, n - 1)] += 1.0;
  }
  return m;
}

// values[metric][model] for replicate b
using Replicate = std::vector<std::vector<double>>;

Replicate run_replicate(const EvaluationData& data, std::span<const Metric> metrics, const Prepared& prep,
                        std::uint64_t seed, std::uint64_t b) {
  const auto m = multiplicity(data.outcomes.y.size(), seed, b);
  Replicate out(metrics.size(), std::vector<double>(data.models.size()));
  for (std::size_t k = 0; k < metrics.size(); ++k)
    for (std::size_t j = 0; j < data.models.size(); ++j) out[k][j] = metric_value(metrics[k], data, prep, j, m);
  return out;
}

// Linear interpolation between order statistics.
double quantile(std::vector<double> v, double q) {
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double loss(Metric metric, double v) {
  if (metric == Metric::oe) return std::abs(v - 1.0);
  return higher_is_better(metric) ? -v : v;
}

MetricReport summarize(const EvaluationData& data, std::span<const Metric> metrics, const Prepared& prep,
                       const std::vector<Replicate>& reps, std::uint64_t seed) {
  MetricReport report;
  report.models = data.models;
  report.replicates = static_cast<int>(reps.size());
  report.seed = seed;
  const std::size_t nm = data.models.size();
  for (std::size_t k = 0; k < metrics.size(); ++k) {
    MetricSummary s;
    s.metric = metrics[k];
    s.wins.assign(nm, std::vector<double>(nm, 0.0));
    s.ties.assign(nm, std::vector<double>(nm, 0.0));
    for (std::size_t j = 0; j < nm; ++j) {
      s.estimate.push_back(metric_value(metrics[k], data, prep, j, {}));
      std::vector<double> col;
      col.reserve(reps.size());
      for (const auto& r : reps) col.push_back(r[k][j]);
      s.lower.push_back(quantile(col, 0.025));
      s.upper.push_back(quantile(col, 0.975));
    }
    for (std::size_t a = 0; a < nm; ++a)
      for (std::size_t b = 0; b < nm; ++b) {
        if (a == b) continue;
        double usable = 0.0, win = 0.0, tie = 0.0;
        for (const auto& r : reps) {
          const double va = r[k][a], vb = r[k][b];
          if (!std::isfinite(va) || !std::isfinite(vb)) continue;
          usable += 1.0;
          const double la = loss(metrics[k], va), lb = loss(metrics[k], vb);
          if (la < lb) win += 1.0;
          else if (la == lb) tie += 1.0;
        }
        s.wins[a][b] = usable > 0.0 ? win / usable : kNaN;
        s.ties[a][b] = usable > 0.0 ? tie / usable : kNaN;
      }
    report.metrics.push_back(std::move(s));
  }
  if (nm > 0) {
    auto improvement = [&](Metric metric, std::vector<double>& out) {
      const double ref = metric_value(metric, data, prep, 0, {});
      for (std::size_t j = 0; j < nm; ++j) {
        const double v = metric_value(metric, data, prep, j, {});
        out.push_back(std::isfinite(ref) && ref != 0.0 ? relative_improvement(v, ref) : kNaN);
      }
    };
    improvement(Metric::brier, report.brier_improvement);
    improvement(Metric::log_score, report.log_improvement);
  }
  return report;
}

void check(const EvaluationData& data, int replicates) {
  if (replicates < 1) throw DomainError("bootstrap needs at least one replicate");
  if (data.models.size() != data.predictions.size()) throw DomainError("one prediction column per model is required");
  for (const auto& p : data.predictions)
    if (p.size() != data.outcomes.y.size()) throw DomainError("prediction column length differs from outcomes");
}

}  // namespace

MetricReport bootstrap_compare(const EvaluationData& data, std::span<const Metric> metrics, int replicates,
                               std::uint64_t seed) {
  check(data, replicates);
  const auto prep = prepare(data, metrics);
  std::vector<Replicate> reps(static_cast<std::size_t>(replicates));
  std::vector<std::exception_ptr> errors(reps.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int b = 0; b < replicates; ++b) {
    try {
      reps[b] = run_replicate(data, metrics, prep, seed, static_cast<std::uint64_t>(b));
    } catch (...) {
      errors[b] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return summarize(data, metrics, prep, reps, seed);
}

MetricReport bootstrap_compare_serial(const EvaluationData& data, std::span<const Metric> metrics, int replicates,
                                      std::uint64_t seed) {
  check(data, replicates);
  const auto prep = prepare(data, metrics);
  std::vector<Replicate> reps;
  for (int b = 0; b < replicates; ++b) reps.push_back(run_replicate(data, metrics, prep, seed, static_cast<std::uint64_t>(b)));
  return summarize(data, metrics, prep, reps, seed);
}

json MetricReport::to_json() const {
  json out;
  out["models"] = models;
  out["replicates"] = replicates;
  out["seed"] = seed;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json ms = json::object();
  for (const auto& s : metrics) {
    json m;
    for (std::size_t a = 0; a < models.size(); ++a) {
      m["estimate"][models[a]] = num(s.estimate[a]);
      m["ci95"][models[a]] = json::array({num(s.lower[a]), num(s.upper[a])});
      for (std::size_t b = 0; b < models.size(); ++b) {
        if (a == b) continue;
        m["wins"][models[a]][models[b]] = num(s.wins[a][b]);
        m["ties"][models[a]][models[b]] = num(s.ties[a][b]);
      }
    }
    ms[std::string(to_string(s.metric))] = std::move(m);
  }
  out["metrics"] = std::move(ms);
  if (!models.empty()) {
    out["relative_improvement"]["reference"] = models.front();
    for (std::size_t a = 0; a < models.size() && a < brier_improvement.size(); ++a) {
      out["relative_improvement"]["brier"][models[a]] = num(brier_improvement[a]);
      out["relative_improvement"]["log_score"][models[a]] = num(log_improvement[a]);
    }
  }
  return out;
}

}  // namespace riskfuse
