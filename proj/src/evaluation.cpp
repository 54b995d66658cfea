#include "riskfuse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "evaluation_internal.hpp"
#include "riskfuse/errors.hpp"

namespace riskfuse {

namespace {

inline double mult(Multiplicity m, std::size_t i) { return m.empty() ? 1.0 : m[i]; }

void check_sizes(std::span<const double> p, const BinaryOutcomes& o, Multiplicity m) {
  if (p.size() != o.y.size() || p.size() != o.weight.size() || (!m.empty() && m.size() != p.size()))
    throw DomainError("prediction, outcome and weight lengths differ");
}

}  // namespace

double oe_ratio(std::span<const double> p, const BinaryOutcomes& o, Multiplicity m) {
  check_sizes(p, o, m);
  double observed = 0.0, expected = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    observed += mult(m, i) * o.weight[i] * o.y[i];
    expected += mult(m, i) * p[i];
  }
  if (!(expected > 0.0)) throw DomainError("O/E undefined: expected count is zero");
  return observed / expected;
}

double auc_ipcw_sorted(std::span<const double> p, const BinaryOutcomes& o, std::span<const std::size_t> order,
                       Multiplicity m) {
  check_sizes(p, o, m);
  double below = 0.0, concordant = 0.0, cases = 0.0, controls = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    double c = 0.0, d = 0.0;
    const double value = p[order[k]];
    for (; k < order.size() && p[order[k]] == value; ++k) {
      const std::size_t i = order[k];
      const double w = mult(m, i) * o.weight[i];
      c += w * o.y[i];
      d += w * (1.0 - o.y[i]);
    }
    concordant += c * (below + 0.5 * d);
    below += d;
    cases += c;
    controls += d;
  }
  if (!(cases > 0.0) || !(controls > 0.0)) throw DomainError("AUC needs at least one weighted case and control");
  return concordant / (cases * controls);
}

double auc_ipcw(std::span<const double> p, const BinaryOutcomes& o, Multiplicity m) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  return auc_ipcw_sorted(p, o, order, m);
}

double brier_ipcw(std::span<const double> p, const BinaryOutcomes& o, Multiplicity m) {
  check_sizes(p, o, m);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double w = mult(m, i) * o.weight[i];
    num += w * (p[i] - o.y[i]) * (p[i] - o.y[i]);
    den += w;
  }
  if (!(den > 0.0)) throw DomainError("Brier score needs positive total weight");
  return num / den;
}

double log_score(std::span<const double> p, const BinaryOutcomes& o, Multiplicity m) {
  check_sizes(p, o, m);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double w = mult(m, i) * o.weight[i];
    const double q = std::clamp(p[i], kLogScoreClip, 1.0 - kLogScoreClip);
    num -= w * (o.y[i] * std::log(q) + (1.0 - o.y[i]) * std::log1p(-q));
    den += w;
  }
  if (!(den > 0.0)) throw DomainError("log score needs positive total weight");
  return num / den;
}

double snb(std::span<const double> p, const BinaryOutcomes& o, double t, Multiplicity m) {
  check_sizes(p, o, m);
  if (!(t > 0.0 && t < 1.0)) throw DomainError("SNB threshold must be in (0, 1)");
  double cases = 0.0, controls = 0.0, tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double w = mult(m, i) * o.weight[i];
    const double c = w * o.y[i], d = w * (1.0 - o.y[i]);
    cases += c;
    controls += d;
    if (p[i] >= t) {
      tp += c;
      fp += d;
    }
  }
  if (!(cases > 0.0) || !(controls > 0.0)) throw DomainError("SNB undefined: prevalence is 0 or 1");
  const double prevalence = cases / (cases + controls);
  const double odds_ratio = (t / (1.0 - t)) / (prevalence / (1.0 - prevalence));
  return tp / cases - odds_ratio * (fp / controls);
}

double relative_improvement(double a, double b) {
  if (b == 0.0) throw DomainError("relative improvement against a zero reference score");
  return 100.0 * (b - a) / b;
}

// --- Uno's C --------------------------------------------------------------------

namespace {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0.0) {}
  void add(std::size_t i, double v) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) tree_[i] += v;
  }
  // sum over [0, i)
  double prefix(std::size_t i) const {
    double s = 0.0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<double> tree_;
};

}  // namespace

UnoPrepared prepare_uno(std::span<const double> score, const SurvivalData& s) {
  const std::size_t n = score.size();
  if (s.time.size() != n || s.event.size() != n || s.g_minus.size() != n)
    throw DomainError("score and survival data lengths differ");
  UnoPrepared u;
  u.by_time_desc.resize(n);
  std::iota(u.by_time_desc.begin(), u.by_time_desc.end(), 0);
  std::stable_sort(u.by_time_desc.begin(), u.by_time_desc.end(),
                   [&](std::size_t a, std::size_t b) { return s.time[a] > s.time[b]; });
  std::vector<double> sorted(score.begin(), score.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  u.rank.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    u.rank[i] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), score[i]) - sorted.begin());
  u.ranks = sorted.size();
  return u;
}

double uno_c_prepared(const UnoPrepared& u, const SurvivalData& s, double tau, Multiplicity m) {
  Fenwick tree(u.ranks);
  double total_inserted = 0.0, num = 0.0, den = 0.0;
  const auto& order = u.by_time_desc;
  for (std::size_t k = 0; k < order.size();) {
    const double t = s.time[order[k]];
    std::size_t end = k;
    while (end < order.size() && s.time[order[end]] == t) ++end;
    // everyone already in the tree has a strictly later time
    for (std::size_t q = k; q < end; ++q) {
      const std::size_t i = order[q];
      if (!s.event[i] || t > tau) continue;
      const double mi = mult(m, i);
      if (mi == 0.0) continue;
      const double g = s.g_minus[i];
      if (!(g > 0.0)) throw DomainError("censoring survivor is zero at an event time");
      const double w = mi / (g * g);
      const double lower = tree.prefix(u.rank[i]);
      const double equal = tree.prefix(u.rank[i] + 1) - lower;
      num += w * (lower + 0.5 * equal);
      den += w * total_inserted;
    }
    for (std::size_t q = k; q < end; ++q) {
      const std::size_t i = order[q];
      const double mi = mult(m, i);
      tree.add(u.rank[i], mi);
      total_inserted += mi;
    }
    k = end;
  }
  if (!(den > 0.0)) throw DomainError("Uno's C has no usable pairs");
  return num / den;
}

double uno_c(std::span<const double> score, const SurvivalData& s, double tau, Multiplicity m) {
  return uno_c_prepared(prepare_uno(score, s), s, tau, m);
}

// --- calibration ----------------------------------------------------------------

std::vector<CalibrationBin> calibration_deciles(std::span<const double> p, const BinaryOutcomes& o, int bins) {
  check_sizes(p, o, {});
  if (bins < 1) throw DomainError("need at least one calibration bin");
  if (p.size() < static_cast<std::size_t>(bins)) throw DomainError("too few records for calibration bins");
  const std::size_t n = p.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  std::vector<int> bin_of(n);
  for (std::size_t k = 0; k < n; ++k) {
    int b = static_cast<int>(k * static_cast<std::size_t>(bins) / n);
    // ties stay with the first occurrence of their value
    if (k > 0 && p[order[k]] == p[order[k - 1]]) b = bin_of[order[k - 1]];
    bin_of[order[k]] = b;
  }
  std::vector<CalibrationBin> raw(static_cast<std::size_t>(bins));
  std::vector<double> cases(static_cast<std::size_t>(bins), 0.0);
  for (auto& b : raw) {
    b.lower = std::numeric_limits<double>::infinity();
    b.upper = -std::numeric_limits<double>::infinity();
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& b = raw[static_cast<std::size_t>(bin_of[i])];
    b.count += 1.0;
    b.lower = std::min(b.lower, p[i]);
    b.upper = std::max(b.upper, p[i]);
    b.expected += p[i];
    b.observed += o.weight[i] * o.y[i];
    cases[static_cast<std::size_t>(bin_of[i])] += o.y[i] * (o.weight[i] > 0.0);
  }
  std::vector<CalibrationBin> out;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    auto b = raw[k];
    if (b.count == 0.0) continue;
    b.mean_prediction = b.expected / b.count;
    if (b.expected > 0.0) {
      b.oe = b.observed / b.expected;
      if (cases[k] > 0.0) {
        const double spread = 1.959963984540054 / std::sqrt(cases[k]);
        b.oe_lower = b.oe * std::exp(-spread);
        b.oe_upper = b.oe * std::exp(spread);
      } else {
        b.oe_lower = 0.0;
        b.oe_upper = 3.6888794541139363 / b.expected;  // exact Poisson bound for zero events
      }
    }
    out.push_back(b);
  }
  return out;
}

// --- evaluation data ----------------------------------------------------------

EvaluationData make_evaluation_data(std::span<const CohortRecord> cohort, std::vector<std::string> models,
                                    std::vector<std::vector<double>> predictions, double tau, const CensoringModel& g,
                                    const StratumKey& key) {
  if (models.size() != predictions.size()) throw DomainError("one prediction column per model is required");
  for (const auto& col : predictions)
    if (col.size() != cohort.size()) throw DomainError("prediction column length differs from the cohort");
  EvaluationData d;
  d.models = std::move(models);
  d.predictions = std::move(predictions);
  SurvivalData s;
  for (const auto& r : cohort) {
    const std::string stratum = key ? key(r) : std::string();
    d.outcomes.y.push_back(case_by(r, tau) ? 1.0 : 0.0);
    d.outcomes.weight.push_back(binary_ipcw_weight(r, tau, g, stratum));
    s.time.push_back(r.follow_up);
    s.event.push_back(r.event == EventType::breast ? 1 : 0);
    s.g_minus.push_back(g.before(r.follow_up, stratum));
  }
  d.survival = std::move(s);
  return d;
}

}  // namespace riskfuse
