#include <algorithm>

#include "riskfuse/ensemble.hpp"
#include "riskfuse/errors.hpp"

namespace riskfuse {

double StepFunction::at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return values[(it - times.begin()) - 1];
}

double StepFunction::before(double t) const {
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return values[(it - times.begin()) - 1];
}

CensoringModel CensoringModel::none() {
  CensoringModel m;
  m.identity_ = true;
  return m;
}

namespace {

const StepFunction* lookup(const std::map<std::string, StepFunction>& strata, const std::string& key) {
  auto it = strata.find(key);
  if (it == strata.end()) throw DomainError("no censoring estimate for stratum '" + key + "'");
  return &it->second;
}

}  // namespace

double CensoringModel::at(double t, const std::string& stratum) const {
  if (identity_) return 1.0;
  return lookup(strata_, stratum)->at(t);
}

double CensoringModel::before(double t, const std::string& stratum) const {
  if (identity_) return 1.0;
  return lookup(strata_, stratum)->before(t);
}

CensoringModel km_censoring(std::span<const CensoringObservation> data) {
  std::map<std::string, std::vector<const CensoringObservation*>> by_stratum;
  for (const auto& obs : data) {
    if (!(obs.time > 0.0)) throw DomainError("follow-up times must be positive for censoring estimation");
    by_stratum[obs.stratum].push_back(&obs);
  }
  if (by_stratum.empty()) throw DomainError("censoring estimation needs at least one record");
  std::map<std::string, StepFunction> out;
  for (auto& [key, rows] : by_stratum) {
    std::stable_sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->time < b->time; });
    StepFunction g;
    double value = 1.0;
    std::size_t at_risk = rows.size();
    for (std::size_t i = 0; i < rows.size();) {
      double t = rows[i]->time;
      std::size_t censored = 0, tied = 0;
      for (; i < rows.size() && rows[i]->time == t; ++i, ++tied)
        if (rows[i]->censored) ++censored;
      if (censored > 0) {
        value *= 1.0 - static_cast<double>(censored) / static_cast<double>(at_risk);
        g.times.push_back(t);
        g.values.push_back(value);
      }
      at_risk -= tied;
    }
    out.emplace(key, std::move(g));
  }
  return CensoringModel(std::move(out));
}

CensoringModel km_censoring(std::span<const CohortRecord> cohort, const StratumKey& key) {
  std::vector<CensoringObservation> obs;
  obs.reserve(cohort.size());
  for (const auto& r : cohort) obs.push_back({r.follow_up, r.event == EventType::none, key ? key(r) : std::string()});
  return km_censoring(obs);
}

double binary_ipcw_weight(const CohortRecord& r, double tau, const CensoringModel& g, const std::string& stratum) {
  if (!status_known(r, tau)) return 0.0;
  double g_minus = g.before(std::min(r.follow_up, tau), stratum);
  if (!(g_minus > 0.0)) throw DomainError("censoring survivor is zero at a time needed for weighting (record " + r.id + ")");
  return 1.0 / g_minus;
}

}  // namespace riskfuse
