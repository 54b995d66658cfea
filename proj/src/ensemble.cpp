#include "riskfuse/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "riskfuse/errors.hpp"
#include "riskfuse/params.hpp"

namespace riskfuse {

std::string_view to_string(Transform t) { return t == Transform::sqrt ? "sqrt" : "none"; }
std::string_view to_string(EnsembleKind k) { return k == EnsembleKind::fixed_horizon ? "fixed_horizon" : "time_varying"; }

double apply_transform(Transform t, double p) { return t == Transform::sqrt ? std::sqrt(p) : p; }

TrainingFrame build_training_frame(std::span<const CohortRecord> cohort, const BasePredictions& predictions,
                                   std::span<const int> tau_grid, const CensoringModel& g, const StratumKey& key,
                                   const FrameOptions& options) {
  if (tau_grid.empty()) throw DomainError("tau grid is empty");
  for (std::size_t k = 1; k < tau_grid.size(); ++k)
    if (tau_grid[k] <= tau_grid[k - 1]) throw DomainError("tau grid must be strictly increasing");
  if (predictions.first.size() != cohort.size() || predictions.second.size() != cohort.size())
    throw DomainError("base predictions do not cover every record");
  if (!options.extra_weights.empty() && options.extra_weights.size() != cohort.size())
    throw DomainError("extra weights must have one entry per record");

  TrainingFrame frame;
  frame.transform = options.transform;
  frame.rows.reserve(cohort.size() * tau_grid.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& r = cohort[i];
    const std::string stratum = key ? key(r) : std::string();
    double w = options.extra_weights.empty() ? 1.0 : options.extra_weights[i];
    if (w < 0.0) throw DomainError("observation weights must be non-negative");
    if (predictions.first[i].size() != tau_grid.size() || predictions.second[i].size() != tau_grid.size())
      throw DomainError("base predictions do not cover every tau for record " + r.id);
    for (std::size_t k = 0; k < tau_grid.size(); ++k) {
      const int tau = tau_grid[k];
      double outcome = 0.0;
      if (case_by(r, tau)) {
        double gm = g.before(r.follow_up, stratum);
        if (!(gm > 0.0)) throw DomainError("censoring survivor is zero at the event time of record " + r.id);
        outcome = 1.0 / gm;
      } else if (!status_known(r, tau) && options.censored == CensoredRows::omit) {
        continue;
      }
      frame.rows.push_back({i, tau, apply_transform(options.transform, predictions.first[i][k]),
                            apply_transform(options.transform, predictions.second[i][k]), outcome, w});
    }
  }
  return frame;
}

// --- solver -------------------------------------------------------------------

namespace {

double expit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow
double softplus(double eta) { return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double quasi_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                    const Eigen::VectorXd& beta) {
  Eigen::VectorXd eta = x * beta;
  double q = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) q += w[i] * (y[i] * eta[i] - softplus(eta[i]));
  return q;
}

std::vector<int> independent_columns(const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
  Eigen::MatrixXd xs = w.cwiseSqrt().asDiagonal() * x;
  std::vector<int> kept;
  for (int j = 0; j < x.cols(); ++j) {
    std::vector<int> trial = kept;
    trial.push_back(j);
    Eigen::MatrixXd sub(xs.rows(), static_cast<Eigen::Index>(trial.size()));
    for (std::size_t c = 0; c < trial.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = xs.col(trial[c]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
    qr.setThreshold(1e-10);
    if (qr.rank() == static_cast<Eigen::Index>(trial.size())) kept = std::move(trial);
  }
  return kept;
}

}  // namespace

QuasiBinomialFit fit_quasi_binomial(const Eigen::MatrixXd& x_full, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                    std::span<const std::size_t> groups, const FitOptions& options) {
  const Eigen::Index n = x_full.rows();
  if (n == 0) throw FitError("cannot fit on an empty frame");
  if (y.size() != n || w.size() != n || static_cast<Eigen::Index>(groups.size()) != n)
    throw FitError("design, outcome, weight and group lengths differ");
  std::set<double> levels;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(w[i] >= 0.0) || !std::isfinite(w[i])) throw FitError("weights must be finite and non-negative");
    if (!(y[i] >= 0.0) || !std::isfinite(y[i])) throw FitError("pseudo-outcomes must be finite and non-negative");
    if (w[i] > 0.0) levels.insert(y[i]);
  }
  if (levels.size() < 2) throw FitError("outcome has fewer than two distinct levels");

  auto kept = independent_columns(x_full, w);
  QuasiBinomialFit fit;
  for (int j = 0; j < x_full.cols(); ++j)
    if (std::find(kept.begin(), kept.end(), j) == kept.end()) fit.dropped.push_back(j);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) x.col(static_cast<Eigen::Index>(c)) = x_full.col(kept[c]);
  const Eigen::Index p = x.cols();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd mu(n), score(p);
  Eigen::MatrixXd hessian(p, p);
  auto evaluate = [&](const Eigen::VectorXd& b) {
    Eigen::VectorXd eta = x * b;
    for (Eigen::Index i = 0; i < n; ++i) mu[i] = expit(eta[i]);
    score = x.transpose() * (w.cwiseProduct(y - mu));
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = w[i] * mu[i] * (1.0 - mu[i]);
    hessian = x.transpose() * v.asDiagonal() * x;
  };

  bool converged = false;
  evaluate(beta);
  double q = quasi_loglik(x, y, w, beta);
  for (int it = 0; it < options.max_iterations; ++it) {
    fit.max_score = score.cwiseAbs().maxCoeff();
    if (fit.max_score < options.tolerance) {
      converged = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    Eigen::VectorXd step = ldlt.solve(score);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) throw FitError("singular information matrix");
    // damping: halve the step until the concave objective does not decrease
    double s = 1.0;
    Eigen::VectorXd next = beta + step;
    double q_next = quasi_loglik(x, y, w, next);
    for (int half = 0; half < 40 && !(q_next >= q - 1e-12 * std::abs(q)); ++half) {
      s *= 0.5;
      next = beta + s * step;
      q_next = quasi_loglik(x, y, w, next);
    }
    beta = next;
    q = q_next;
    evaluate(beta);
    fit.iterations = it + 1;
  }
  if (!converged) {
    fit.max_score = score.cwiseAbs().maxCoeff();
    converged = fit.max_score < options.tolerance;
  }
  if (!converged) {
    if (beta.cwiseAbs().maxCoeff() > 50.0)
      throw FitError("separation detected: coefficients diverging (max |beta| = " +
                     std::to_string(beta.cwiseAbs().maxCoeff()) + ")");
    throw FitError("estimating equations did not converge in " + std::to_string(options.max_iterations) +
                   " iterations (max score " + std::to_string(fit.max_score) + ")");
  }
  // complete separation "converges" once the fitted probabilities saturate
  double residual = 0.0, total_weight = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    residual += w[i] * std::abs(y[i] - mu[i]);
    total_weight += w[i];
  }
  if (residual < 1e-6 * total_weight)
    throw FitError("separation detected: fitted probabilities reproduce the outcomes (max |beta| = " +
                   std::to_string(beta.cwiseAbs().maxCoeff()) + ")");

  // sandwich variance grouped by cluster
  std::map<std::size_t, Eigen::VectorXd> clusters;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd u = x.row(i).transpose() * (w[i] * (y[i] - mu[i]));
    auto [it, fresh] = clusters.try_emplace(groups[i], u);
    if (!fresh) it->second += u;
  }
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
  for (const auto& [_, u] : clusters) meat += u * u.transpose();
  Eigen::MatrixXd bread = hessian.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::MatrixXd cov = bread * meat * bread;

  fit.beta = Eigen::VectorXd::Zero(x_full.cols());
  fit.robust_se = Eigen::VectorXd::Zero(x_full.cols());
  for (std::size_t c = 0; c < kept.size(); ++c) {
    fit.beta[kept[c]] = beta[static_cast<Eigen::Index>(c)];
    fit.robust_se[kept[c]] = std::sqrt(std::max(0.0, cov(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c))));
  }
  return fit;
}

Eigen::MatrixXd design_matrix(const TrainingFrame& frame, EnsembleKind kind) {
  const Eigen::Index n = static_cast<Eigen::Index>(frame.rows.size());
  Eigen::MatrixXd x(n, kind == EnsembleKind::fixed_horizon ? 4 : 8);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = frame.rows[i];
    x(i, 0) = 1.0;
    x(i, 1) = r.p1;
    x(i, 2) = r.p2;
    x(i, 3) = r.p1 * r.p2;
    if (kind == EnsembleKind::time_varying) {
      const double t = r.tau;
      x(i, 4) = t;
      x(i, 5) = t * r.p1;
      x(i, 6) = t * r.p2;
      x(i, 7) = t * r.p1 * r.p2;
    }
  }
  return x;
}

namespace {

std::string frame_hash(const TrainingFrame& frame) {
  std::string text(to_string(frame.transform));
  for (const auto& r : frame.rows) {
    text += '\n';
    text += std::to_string(r.group) + ',' + std::to_string(r.tau) + ',' + format17(r.p1) + ',' + format17(r.p2) + ',' +
            format17(r.outcome) + ',' + format17(r.weight);
  }
  return sha256_hex(text);
}

FittedEnsemble fit(const TrainingFrame& frame, EnsembleKind kind, const FitOptions& options) {
  Eigen::MatrixXd x = design_matrix(frame, kind);
  const Eigen::Index n = x.rows();
  Eigen::VectorXd y(n), w(n);
  std::vector<std::size_t> groups(n);
  std::set<int> taus;
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = frame.rows[i].outcome;
    w[i] = frame.rows[i].weight;
    groups[i] = frame.rows[i].group;
    taus.insert(frame.rows[i].tau);
  }
  auto q = fit_quasi_binomial(x, y, w, groups, options);
  FittedEnsemble m;
  m.kind = kind;
  m.transform = frame.transform;
  m.coefficients.assign(q.beta.data(), q.beta.data() + q.beta.size());
  m.standard_errors.assign(q.robust_se.data(), q.robust_se.data() + q.robust_se.size());
  m.tau_grid.assign(taus.begin(), taus.end());
  m.dropped_terms = q.dropped;
  m.iterations = q.iterations;
  m.training_hash = frame_hash(frame);
  return m;
}

}  // namespace

FittedEnsemble fit_ensemble_fixed(const TrainingFrame& frame, const FitOptions& options) {
  std::set<int> taus;
  for (const auto& r : frame.rows) taus.insert(r.tau);
  if (taus.size() != 1) throw FitError("fixed-horizon ensemble needs a frame with exactly one tau");
  return fit(frame, EnsembleKind::fixed_horizon, options);
}

FittedEnsemble fit_ensemble_time(const TrainingFrame& frame, const FitOptions& options) {
  return fit(frame, EnsembleKind::time_varying, options);
}

void FittedEnsemble::validate() const {
  std::size_t expected = kind == EnsembleKind::fixed_horizon ? 4 : 8;
  if (coefficients.size() != expected)
    throw ValidationError("ensemble of kind " + std::string(to_string(kind)) + " needs " + std::to_string(expected) +
                          " coefficients, got " + std::to_string(coefficients.size()));
  for (double b : coefficients)
    if (!std::isfinite(b)) throw ValidationError("ensemble coefficients must be finite");
  for (std::size_t k = 1; k < tau_grid.size(); ++k)
    if (tau_grid[k] <= tau_grid[k - 1]) throw ValidationError("ensemble tau_grid must be strictly increasing");
  if (kind == EnsembleKind::time_varying && tau_grid.empty())
    throw ValidationError("time-varying ensemble needs a tau_grid");
}

double predict_ensemble(const FittedEnsemble& m, double p1, double p2, int tau) {
  m.validate();
  if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0))
    throw DomainError("ensemble inputs must be probabilities in [0, 1]");
  if (m.kind == EnsembleKind::fixed_horizon) {
    if (!m.tau_grid.empty() && tau != m.tau_grid.front())
      throw DomainError("fixed-horizon ensemble was fit for tau = " + std::to_string(m.tau_grid.front()) +
                        ", not " + std::to_string(tau));
  } else if (tau < m.tau_grid.front() || tau > m.tau_grid.back()) {
    throw DomainError("tau = " + std::to_string(tau) + " outside the ensemble's range [" +
                      std::to_string(m.tau_grid.front()) + ", " + std::to_string(m.tau_grid.back()) + "]");
  }
  const double a = apply_transform(m.transform, p1);
  const double b = apply_transform(m.transform, p2);
  const auto& c = m.coefficients;
  double lp = c[0] + c[1] * a + c[2] * b + c[3] * a * b;
  if (m.kind == EnsembleKind::time_varying) lp += tau * (c[4] + c[5] * a + c[6] * b + c[7] * a * b);
  return expit(lp);
}

json ensemble_to_json(const FittedEnsemble& m) {
  json j;
  j["schema_version"] = kEnsembleSchemaVersion;
  j["kind"] = std::string(to_string(m.kind));
  j["transform"] = std::string(to_string(m.transform));
  j["coefficients"] = m.coefficients;
  j["standard_errors"] = m.standard_errors;
  j["tau_grid"] = m.tau_grid;
  j["dropped_terms"] = m.dropped_terms;
  j["iterations"] = m.iterations;
  j["training_hash"] = m.training_hash;
  j["created"] = m.created;
  return j;
}

FittedEnsemble ensemble_from_json(const json& j) {
  try {
    if (j.value("schema_version", kEnsembleSchemaVersion) != kEnsembleSchemaVersion)
      throw ValidationError("unsupported ensemble schema_version");
    FittedEnsemble m;
    auto kind = j.at("kind").get<std::string>();
    if (kind == "fixed_horizon")
      m.kind = EnsembleKind::fixed_horizon;
    else if (kind == "time_varying")
      m.kind = EnsembleKind::time_varying;
    else
      throw ValidationError("unknown ensemble kind '" + kind + "'");
    auto transform = j.value("transform", std::string("sqrt"));
    if (transform == "sqrt")
      m.transform = Transform::sqrt;
    else if (transform == "none")
      m.transform = Transform::none;
    else
      throw ValidationError("unknown transform '" + transform + "'");
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    if (j.contains("standard_errors"))
      for (const auto& v : j.at("standard_errors")) m.standard_errors.push_back(v.is_number() ? v.get<double>() : 0.0);
    m.tau_grid = j.value("tau_grid", std::vector<int>{});
    m.dropped_terms = j.value("dropped_terms", std::vector<int>{});
    m.iterations = j.value("iterations", 0);
    m.training_hash = j.value("training_hash", std::string());
    m.created = j.value("created", std::string());
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("ensemble document: ") + e.what());
  }
}

}  // namespace riskfuse
