// Acceptance gate: one PASS/FAIL line per primary criterion; exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>

#include <fmt/format.h>

#include "oracles.hpp"
#include "riskfuse/cohort_sim.hpp"
#include "riskfuse/errors.hpp"
#include "riskfuse/evaluation.hpp"
#include "riskfuse/pipeline.hpp"

using namespace riskfuse;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

const ParameterSet& P() { return oracle::params(); }

RiskFactors baseline_covariates() {
  RiskFactors x;
  x.age_at_menarche = 14;
  x.num_biopsies = BiopsyCount::zero;
  x.age_first_live_birth = 19;
  x.affected_first_degree = 0;
  return x;
}

RiskFactors random_covariates(Rng& rng) {
  RiskFactors x;
  const int men = static_cast<int>(uniform01(rng) * 7);
  if (men < 6) x.age_at_menarche = 10 + men;
  x.num_biopsies = static_cast<BiopsyCount>(static_cast<int>(uniform01(rng) * 4));
  if (uniform01(rng) < 0.8) x.age_first_live_birth = 16 + static_cast<int>(uniform01(rng) * 20);
  x.affected_first_degree = static_cast<int>(uniform01(rng) * 4);
  x.atypical_hyperplasia = static_cast<Hyperplasia>(static_cast<int>(uniform01(rng) * 3));
  return x;
}

// --------------------------------------------------------------------------

Outcome peeling_oracle() {
  Rng rng = substream(20240611, 1, 0x70656564);
  std::vector<Pedigree> pedigrees;
  for (int k = 0; k < 500; ++k) pedigrees.push_back(oracle::random_pedigree(rng, 6));

  const auto t0 = Clock::now();
  std::vector<GenotypePosterior> fast;
  for (const auto& p : pedigrees) fast.push_back(carrier_posterior(p, P().penetrance));
  const double peel_s = seconds_since(t0);

  double max_diff = 0.0, max_sum_err = 0.0;
  for (std::size_t k = 0; k < pedigrees.size(); ++k) {
    auto slow = oracle::brute_force_posterior(pedigrees[k], P().penetrance);
    double sum = 0.0;
    for (std::size_t g = 0; g < 4; ++g) {
      max_diff = std::max(max_diff, std::abs(fast[k].probs[g] - slow.probs[g]));
      sum += fast[k].probs[g];
    }
    max_sum_err = std::max(max_sum_err, std::abs(sum - 1.0));
  }
  const double total_s = seconds_since(t0);
  return {max_diff < 1e-10 && max_sum_err < 1e-12 && total_s < 60.0,
          fmt::format("500 pedigrees: max |diff| {:.3g}, max |sum-1| {:.3g}, peeling {:.3f}s, with oracle {:.2f}s",
                      max_diff, max_sum_err, peel_s, total_s)};
}

Outcome hazard_round_trip() {
  Rng rng = substream(20240611, 2, 0x68617a);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> h(kMaxAge), m(kMaxAge);
    const double scale = 0.2 * uniform01(rng);
    for (int i = 0; i < kMaxAge; ++i) {
      h[static_cast<std::size_t>(i)] = scale * uniform01(rng);
      m[static_cast<std::size_t>(i)] = 0.3 * uniform01(rng);
    }
    auto pen = penetrance_from_hazard(h, m);
    auto h2 = hazard_from_penetrance(pen, m);
    auto pen2 = penetrance_from_hazard(h2, m);
    for (std::size_t i = 0; i < h.size(); ++i)
      worst = std::max({worst, std::abs(h2[i] - h[i]), std::abs(pen2[i] - pen[i])});
  }
  return {worst <= 1e-12, fmt::format("100 random tables: max round-trip error {:.3g}", worst)};
}

Outcome risk_projection_mc() {
  const auto t0 = Clock::now();
  Rng rng = substream(20240611, 3, 0x6d63);
  constexpr long kLifetimes = 10'000'000;
  double worst_z = 0.0;
  int within = 0, total = 0;
  std::string first_bad;
  for (int c = 0; c < 10; ++c) {
    const auto g = kGenotypes[static_cast<std::size_t>(uniform01(rng) * 4)];
    const auto race = static_cast<Race>(static_cast<int>(uniform01(rng) * 5));
    const int a = 20 + static_cast<int>(uniform01(rng) * 61);
    const int tau = 1 + static_cast<int>(uniform01(rng) * 10);
    const auto h = P().penetrance.breast_hazard(g, race);
    const auto m = P().penetrance.mortality(Sex::female, race);

    auto check = [&](const char* what, double analytic, const oracle::McEstimate& mc) {
      const double z = std::abs(analytic - mc.mean) / mc.se;
      worst_z = std::max(worst_z, z);
      ++total;
      if (z <= 3.0)
        ++within;
      else if (first_bad.empty())
        first_bad = fmt::format(" first miss: {} config {} z={:.2f}", what, c, z);
    };

    check("genotype", genotype_future_risk(g, a, tau, P().penetrance, race),
          oracle::mc_cumulative_incidence(h, m, a, tau, kLifetimes, 1000 + static_cast<std::uint64_t>(c)));

    // modified non-carrier law with r0 built from the indicator formula
    const auto x = random_covariates(rng);
    const auto& beta = P().relative_hazard.coefficients_for(race);
    const auto h0 = P().penetrance.breast_hazard(Genotype::noncarrier, race);
    std::vector<double> modified(h0.size());
    for (std::size_t i = 0; i < h0.size(); ++i) {
      const double age = static_cast<double>(i + 1);
      const double r0 = oracle::printed_relative_hazard(age, x, beta.beta) *
                        P().normalization.factor(race, age >= 50 ? AgeBand::fifty_plus : AgeBand::under_50);
      modified[i] = 1.0 - std::pow(1.0 - h0[i], r0);
    }
    check("modified", modified_noncarrier_risk(a, tau, x, P().penetrance, race, beta, P().normalization),
          oracle::mc_cumulative_incidence(modified, m, a, tau, kLifetimes, 2000 + static_cast<std::uint64_t>(c)));
  }
  const double s = seconds_since(t0);
  return {within == total && s < 300.0,
          fmt::format("{}/{} projections within 3 SE of 1e7-lifetime MC (max z {:.2f}), {:.1f}s{}", within, total,
                      worst_z, s, first_bad)};
}

Outcome reduction_identities(const std::vector<CohortRecord>& small) {
  // (a) unit normalised hazard
  Rng rng = substream(20240611, 4, 0x726564);
  const auto norm = NormalizationTable::identity();
  const auto x = baseline_covariates();
  double worst_m = 0.0;
  for (int k = 0; k < 200; ++k) {
    auto p = oracle::random_pedigree(rng, 10);
    if (p.proband().breast_cancer) continue;
    const int a = p.proband().current_age_or_death_age;
    const int tau = std::min(10, kMaxAge - a);
    const auto& beta = P().relative_hazard.coefficients_for(effective_race(p.proband(), p));
    worst_m = std::max(worst_m, std::abs(combined_risk_m(p, x, a, tau, P().penetrance, beta, norm) -
                                         brcapro_risk(p, a, tau, P().penetrance)));
  }

  // (b) no censoring: IPCW fit equals ordinary logistic regression
  Scorer scorer(P());
  std::vector<int> taus{5};
  auto base = base_predictions(small, taus, scorer);
  auto key = make_stratum_key("none", P().stratum_rules);
  auto g = km_censoring(small, key);
  auto frame = build_training_frame(small, base, taus, g, key);
  auto fitted = fit_ensemble_fixed(frame);
  const auto n = static_cast<Eigen::Index>(frame.rows.size());
  Eigen::MatrixXd design(n, 4);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = frame.rows[static_cast<std::size_t>(i)];
    design.row(i) << 1.0, r.p1, r.p2, r.p1 * r.p2;
    y[i] = r.outcome;
    w[i] = r.weight;
  }
  auto ref = oracle::irls_logistic(design, y, w);
  double worst_fit = 0.0;
  for (int j = 0; j < 4; ++j) worst_fit = std::max(worst_fit, std::abs(fitted.coefficients[static_cast<std::size_t>(j)] - ref[j]));
  bool binary = true;
  for (double v : y) binary = binary && (v == 0.0 || v == 1.0);

  // (c) zero coefficients
  FittedEnsemble zero;
  zero.coefficients = {0, 0, 0, 0};
  zero.tau_grid = {5};
  const double half = predict_ensemble(zero, 0.123, 0.456, 5);

  return {worst_m <= 1e-12 && worst_fit <= 1e-6 && binary && half == 0.5,
          fmt::format("M vs BRCAPRO at r0=1 max diff {:.3g}; G=1 fit vs IRLS max diff {:.3g} (n={}); zero model {}",
                      worst_m, worst_fit, n, half)};
}

Outcome simulation_replica() {
  const auto t0 = Clock::now();
  const auto cfg = parse_sim_config(json::parse(read_text_file(RISKFUSE_SOURCE_DIR "/configs/paper_sim.json")));
  auto sim = simulate_cohort(cfg, P());
  std::vector<CohortRecord> train, valid;
  for (auto& r : sim.records) (r.split == "train" ? train : valid).push_back(std::move(r));

  Scorer scorer(P());
  EnsembleFitRequest fixed;
  auto e = fit_ensemble_from_cohort(train, scorer, fixed);
  EnsembleFitRequest tv;
  tv.kind = EnsembleKind::time_varying;
  tv.taus = {1, 2, 3, 4, 5};
  auto e2 = fit_ensemble_from_cohort(train, scorer, tv);

  std::vector<ModelSpec> models{builtin_model("combined_m"), builtin_model("brcapro"), builtin_model("bcrat"),
                                {"E", ModelKind::ensemble, std::make_shared<FittedEnsemble>(e.model)},
                                {"E2", ModelKind::ensemble, std::make_shared<FittedEnsemble>(e2.model)}};
  std::vector<int> taus{5};
  auto eligible = eligible_records(valid, models, taus, scorer);
  auto scores = score_cohort(eligible, models, taus, scorer);
  std::vector<std::string> names;
  std::vector<std::vector<double>> preds(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    names.push_back(models[m].name);
    for (std::size_t i = 0; i < eligible.size(); ++i) preds[m].push_back(scores.at(i, m, 0));
  }
  auto key = make_stratum_key("none", P().stratum_rules);
  auto data = make_evaluation_data(eligible, names, preds, 5, km_censoring(eligible, key), key);
  const std::vector<Metric> metrics{Metric::oe, Metric::auc};
  auto report = bootstrap_compare(data, metrics, 1000, cfg.seed);
  const auto& oe = report.metrics[0].estimate;
  const auto& auc = report.metrics[1];

  std::size_t cases = 0;
  for (double v : data.outcomes.y) cases += v > 0;
  const bool a = oe[0] >= 0.90 && oe[0] <= 1.10;
  const bool b = auc.wins[0][1] >= 0.90 && auc.wins[0][2] >= 0.90;
  const bool c = oe[3] >= 0.90 && oe[3] <= 1.10 && oe[4] >= 0.90 && oe[4] <= 1.10;
  const bool d = oe[1] > 1.05 && oe[2] > 1.05;
  const double s = seconds_since(t0);
  return {a && b && c && d && s < 1800.0,
          fmt::format("train {} / validation {} ({} cases); O/E M {:.3f} E {:.3f} E2 {:.3f} BRCAPRO {:.3f} BCRAT {:.3f}; "
                      "AUC M {:.3f} wins vs BRCAPRO {:.3f} vs BCRAT {:.3f}; (a){} (b){} (c){} (d){}; {:.0f}s",
                      train.size(), eligible.size(), cases, oe[0], oe[3], oe[4], oe[1], oe[2], auc.estimate[0],
                      auc.wins[0][1], auc.wins[0][2], a, b, c, d, s)};
}

Outcome metric_fixtures(const std::vector<CohortRecord>& cohort) {
  const std::vector<double> p{0.1, 0.4, 0.35, 0.8, 0.5, 0.5};
  const BinaryOutcomes o{{0, 0, 0, 1, 0, 1}, {1, 2, 0, 1.25, 1, 1}};
  const double ls_hand = -(std::log(0.9) + 2 * std::log(0.6) + 1.25 * std::log(0.8) + 2 * std::log(0.5)) / 6.25;
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(b)); };
  const SurvivalData uno_s{{2, 3, 4, 5, 12, 3}, {1, 1, 0, 0, 1, 0}, {1, 0.5, 0.5, 0.25, 0.25, 0.5}};
  const std::vector<double> uno_score{0.9, 0.3, 0.5, 0.3, 0.1, 0.0};
  const bool fixtures = close(oe_ratio(p, o), 45.0 / 53.0) && close(auc_ipcw(p, o), 17.0 / 18.0) &&
                        close(brier_ipcw(p, o), 0.1408) && close(log_score(p, o), ls_hand) &&
                        close(snb(p, o, 0.45), 7.0 / 11.0) && close(uno_c(uno_score, uno_s), 11.0 / 17.0);

  // permuted scores carry no information
  const std::size_t n = std::min<std::size_t>(10'000, cohort.size());
  std::vector<CohortRecord> sub(cohort.begin(), cohort.begin() + static_cast<std::ptrdiff_t>(n));
  auto key = make_stratum_key("none", P().stratum_rules);
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) score[i] = static_cast<double>(i) / static_cast<double>(n);
  Rng rng = substream(20240611, 6, 0x7065726d);
  std::shuffle(score.begin(), score.end(), rng);
  auto data = make_evaluation_data(sub, {"permuted"}, {score}, 5, km_censoring(sub, key), key);
  const double c = evaluate_metric(Metric::uno_c, data, 0);
  std::vector<double> reps;
  for (std::uint64_t b = 0; b < 200; ++b) {
    Rng r = substream(20240611, b, 0x73650);
    std::vector<double> mult(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) mult[static_cast<std::size_t>(uniform01(r) * static_cast<double>(n))] += 1.0;
    reps.push_back(evaluate_metric(Metric::uno_c, data, 0, mult));
  }
  double mean = 0.0, var = 0.0;
  for (double v : reps) mean += v / static_cast<double>(reps.size());
  for (double v : reps) var += (v - mean) * (v - mean) / static_cast<double>(reps.size() - 1);
  const double se = std::sqrt(var);
  const bool uno = std::abs(c - 0.5) <= 3.0 * se;
  return {fixtures && uno, fmt::format("hand fixtures {}; Uno C on permuted scores {:.4f} (SE {:.4f}, n={})",
                                       fixtures ? "exact" : "MISMATCH", c, se, n)};
}

Outcome coefficient_fixtures() {
  const auto x = baseline_covariates();
  const double r0 =
      normalized_relative_hazard(40, x, P().relative_hazard.coefficients_for(Race::white), P().normalization, Race::white);

  FittedEnsemble table5;
  table5.coefficients = {2.55, 0.86, 1.21, 0.11};
  table5.tau_grid = {5};
  // sqrt(0.04) = 0.2, sqrt(0.09) = 0.3:
  // 2.55 + 0.86 * 0.2 + 1.21 * 0.3 + 0.11 * 0.06 = 2.55 + 0.172 + 0.363 + 0.0066
  const double hand = 3.0916;
  const double pred = predict_ensemble(table5, 0.04, 0.09, 5);
  const double logit = std::log(pred / (1.0 - pred));
  return {r0 == 1.81 && std::abs(logit - hand) <= 1e-12,
          fmt::format("r0(baseline X, white, <50) = {}; logit error {:.3g}", format17(r0), std::abs(logit - hand))};
}

Outcome determinism(const std::vector<CohortRecord>& cohort) {
  const fs::path dir = fs::temp_directory_path() / "riskfuse_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run = [&](const std::string& out) {
    const std::string cmd = fmt::format("\"{}\" simulate --config \"{}\" --n 3000 --out \"{}\" 2>/dev/null", RISKFUSE_CLI,
                                        RISKFUSE_SOURCE_DIR "/configs/paper_sim.json", (dir / out).string());
    return std::system(cmd.c_str()) == 0;
  };
  const bool ran = run("a.ndjson") && run("b.ndjson");
  const bool same_sim = ran && read_text_file(dir / "a.ndjson") == read_text_file(dir / "b.ndjson") &&
                        read_text_file(dir / "a.ndjson.summary.json") == read_text_file(dir / "b.ndjson.summary.json");

  Scorer scorer(P());
  std::vector<ModelSpec> models{builtin_model("brcapro"), builtin_model("combined_m")};
  std::vector<int> taus{5};
  std::vector<CohortRecord> sub(cohort.begin(), cohort.begin() + std::min<std::ptrdiff_t>(3000, std::ssize(cohort)));
  auto scores = score_cohort(sub, models, taus, scorer);
  std::vector<std::vector<double>> preds(2);
  for (std::size_t i = 0; i < sub.size(); ++i)
    for (std::size_t m = 0; m < 2; ++m) preds[m].push_back(scores.at(i, m, 0));
  auto key = make_stratum_key("none", P().stratum_rules);
  auto data = make_evaluation_data(sub, {"brcapro", "combined_m"}, preds, 5, km_censoring(sub, key), key);
  const std::vector<Metric> metrics{Metric::oe, Metric::auc, Metric::brier, Metric::log_score, Metric::snb};
  const auto r1 = dump17(bootstrap_compare(data, metrics, 200, 99).to_json());
  const auto r2 = dump17(bootstrap_compare(data, metrics, 200, 99).to_json());
  const auto serial = dump17(bootstrap_compare_serial(data, metrics, 200, 99).to_json());
  fs::remove_all(dir);
  return {same_sim && r1 == r2 && r1 == serial,
          fmt::format("simulate CLI byte-identical: {}; bootstrap_compare identical across runs: {}, equals serial: {}",
                      same_sim, r1 == r2, r1 == serial)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* name, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  };

  // Shared small cohort without censoring for the reduction, metric and determinism checks.
  auto cfg_json = json::parse(read_text_file(RISKFUSE_SOURCE_DIR "/configs/paper_sim.json"));
  cfg_json["n"] = 20000;
  cfg_json["train_size"] = 20000;
  cfg_json["seed"] = 7;
  const auto small = simulate_cohort(parse_sim_config(cfg_json), P()).records;

  report("peeling-oracle", peeling_oracle);
  report("hazard-penetrance-round-trip", hazard_round_trip);
  report("risk-projection-monte-carlo", risk_projection_mc);
  report("reduction-identities", [&] { return reduction_identities(small); });
  report("simulation-replica", simulation_replica);
  report("metric-fixtures", [&] { return metric_fixtures(small); });
  report("coefficient-fixtures", coefficient_fixtures);
  report("determinism", [&] { return determinism(small); });
  return failures == 0 ? 0 : 1;
}
