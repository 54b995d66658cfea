// riskfuse command-line front end: score, simulate, fit, evaluate,
// export-hazards, serve. Every artifact gets a <out>.manifest.json sidecar.

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "riskfuse/cohort_sim.hpp"
#include "riskfuse/errors.hpp"
#include "riskfuse/evaluation.hpp"
#include "riskfuse/manifest.hpp"
#include "riskfuse/pipeline.hpp"
#include "riskfuse/service.hpp"

using namespace riskfuse;

namespace {

struct Common {
  std::string params;
  std::string out;
  std::vector<std::string> argv;
};

ParameterSet load_params(const std::string& dir) {
  return load_parameter_set(dir.empty() ? default_parameter_directory() : std::filesystem::path(dir));
}

std::vector<int> parse_tau_list(const std::string& text) {
  std::vector<int> taus;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      taus.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError("--tau expects integers separated by commas, got '" + text + "'");
    }
  }
  if (taus.empty()) throw ValidationError("--tau is empty");
  return taus;
}

std::vector<ModelSpec> parse_models(const std::vector<std::string>& names) {
  std::vector<ModelSpec> models;
  for (const auto& group : names) {
    std::stringstream ss(group);
    std::string name;
    while (std::getline(ss, name, ',')) models.push_back(model_from_cli_name(name));
  }
  return models;
}

std::vector<CohortRecord> filter_split(std::vector<CohortRecord> cohort, const std::string& split) {
  if (split.empty() || split == "all") return cohort;
  std::erase_if(cohort, [&](const CohortRecord& r) { return r.split != split; });
  if (cohort.empty()) throw ValidationError("no record has split '" + split + "'");
  return cohort;
}

json json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// --- score -------------------------------------------------------------------

struct ScoreArgs {
  std::string cohort;
  std::vector<std::string> pedigrees;
  std::vector<std::string> risk_factors;
  std::vector<std::string> models{"brcapro"};
  std::string tau = "5";
  std::optional<int> age;
  std::string split;
};

std::vector<CohortRecord> score_inputs(const ScoreArgs& a) {
  if (!a.cohort.empty()) {
    if (!a.pedigrees.empty()) throw ValidationError("give either --cohort or --pedigree, not both");
    return filter_split(read_cohort(a.cohort), a.split);
  }
  if (a.pedigrees.empty()) throw ValidationError("nothing to score: give --cohort or --pedigree");
  if (a.risk_factors.size() > 1 && a.risk_factors.size() != a.pedigrees.size())
    throw ValidationError("--risk-factors must be given once or once per --pedigree");
  std::vector<CohortRecord> records;
  for (std::size_t i = 0; i < a.pedigrees.size(); ++i) {
    auto parsed = parse_pedigree(json_file(a.pedigrees[i]));
    for (const auto& w : parsed.warnings) std::cerr << a.pedigrees[i] << ": warning: " << w << "\n";
    json rf = a.risk_factors.empty() ? json::object() : json_file(a.risk_factors[a.risk_factors.size() == 1 ? 0 : i]);
    auto x = parse_risk_factors(rf, &parsed.pedigree);
    CohortRecord r{std::filesystem::path(a.pedigrees[i]).stem().string(), std::move(parsed.pedigree), x,
                   0, 0.0, EventType::none, {}, {}, {}};
    r.baseline_age = a.age.value_or(r.pedigree.proband().current_age_or_death_age);
    records.push_back(std::move(r));
  }
  return records;
}

int cmd_score(const Common& c, const ScoreArgs& a) {
  auto params = load_params(c.params);
  auto manifest = begin_manifest("score", c.argv, &params, std::nullopt);
  const auto records = score_inputs(a);
  const auto models = parse_models(a.models);
  const auto taus = parse_tau_list(a.tau);
  Scorer scorer(params);
  const auto scores = score_cohort(records, models, taus, scorer);

  std::string out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::optional<PreparedProband> prepared;
    for (std::size_t m = 0; m < models.size(); ++m)
      for (std::size_t k = 0; k < taus.size(); ++k) {
        json row{{"id", records[i].id}, {"model", models[m].name}, {"tau", taus[k]}};
        const double v = scores.at(i, m, k);
        if (std::isnan(v)) {
          if (!prepared) prepared = scorer.prepare(records[i].pedigree, records[i].risk_factors, records[i].baseline_age);
          row["risk"] = nullptr;
          row["reason"] = scorer.ineligibility(models[m], *prepared, taus[k]).value_or("ineligible");
        } else {
          row["risk"] = v;
        }
        out += dump17(row) + "\n";
      }
  }
  if (c.out.empty() || c.out == "-") {
    std::cout << out;
  } else {
    write_text_file(c.out, out);
    write_manifest(manifest, c.out);
  }
  return 0;
}

// --- simulate ------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::optional<int> n;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const Common& c, const SimulateArgs& a) {
  if (c.out.empty()) throw ValidationError("simulate needs --out");
  auto params = load_params(c.params);
  const std::string text = read_text_file(a.config);
  SimConfig cfg;
  try {
    cfg = parse_sim_config(json::parse(text));
  } catch (const json::exception& e) {
    throw ValidationError(a.config + ": " + e.what());
  }
  if (a.n) cfg.n = *a.n;
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();
  auto manifest = begin_manifest("simulate", c.argv, &params, cfg.seed, dump17(sim_config_to_json(cfg)));
  const auto cohort = simulate_cohort(cfg, params);
  write_text_file(c.out, cohort_to_ndjson(cohort.records));
  const std::string summary_path = c.out + ".summary.json";
  write_text_file(summary_path, dump17(cohort.summary.to_json()) + "\n");
  write_manifest(manifest, c.out);
  std::cerr << dump17(cohort.summary.to_json()) << "\n";
  return 0;
}

// --- fit ----------------------------------------------------------------------

struct FitArgs {
  std::string cohort;
  std::string kind = "fixed";
  std::string tau = "5";
  std::string strata = "none";
  std::string split = "train";
  std::string importance_target;
  std::string censored = "keep_zero";
  std::string transform = "sqrt";
};

int cmd_fit(const Common& c, const FitArgs& a) {
  if (c.out.empty()) throw ValidationError("fit needs --out");
  auto params = load_params(c.params);
  auto manifest = begin_manifest("fit", c.argv, &params, std::nullopt);
  auto cohort = read_cohort(a.cohort);
  const bool has_split = std::any_of(cohort.begin(), cohort.end(), [](const CohortRecord& r) { return !r.split.empty(); });
  if (has_split) cohort = filter_split(std::move(cohort), a.split);

  EnsembleFitRequest req;
  req.kind = a.kind == "time" ? EnsembleKind::time_varying : EnsembleKind::fixed_horizon;
  req.taus = parse_tau_list(a.tau);
  req.strata = a.strata;
  req.censored = a.censored == "omit" ? CensoredRows::omit : CensoredRows::keep_zero;
  req.transform = a.transform == "none" ? Transform::none : Transform::sqrt;
  if (!a.importance_target.empty()) req.importance_target = read_cohort(a.importance_target);

  Scorer scorer(params);
  const auto result = fit_ensemble_from_cohort(cohort, scorer, req);
  write_text_file(c.out, dump17(ensemble_to_json(result.model)) + "\n");
  write_manifest(manifest, c.out);
  json info{{"records", result.records}, {"excluded", result.excluded}, {"iterations", result.model.iterations},
            {"dropped_terms", result.model.dropped_terms}};
  if (result.importance) info["importance"] = {{"ridge", result.importance->ridge}, {"width", result.importance->width}};
  std::cerr << dump17(info) << "\n";
  return 0;
}

// --- evaluate -----------------------------------------------------------------

struct EvaluateArgs {
  std::string cohort;
  std::vector<std::string> predictions;
  int tau = 5;
  std::string strata = "none";
  std::string split;
  int bootstrap = 1000;
  std::uint64_t seed = 1;
  int bins = 10;
};

int cmd_evaluate(const Common& c, const EvaluateArgs& a) {
  if (c.out.empty()) throw ValidationError("evaluate needs --out");
  auto params = load_params(c.params);
  auto manifest = begin_manifest("evaluate", c.argv, &params, a.seed);
  auto cohort = filter_split(read_cohort(a.cohort), a.split);

  // id -> model -> risk at tau
  std::vector<std::string> models;
  std::map<std::string, std::map<std::string, double>> risk;
  for (const auto& file : a.predictions)
    for (const auto& row : read_ndjson(file)) {
      if (row.at("tau").get<int>() != a.tau) continue;
      const auto model = row.at("model").get<std::string>();
      if (std::find(models.begin(), models.end(), model) == models.end()) models.push_back(model);
      if (!row.at("risk").is_null()) risk[row.at("id").get<std::string>()][model] = row.at("risk").get<double>();
    }
  if (models.empty()) throw ValidationError("no prediction rows at tau " + std::to_string(a.tau));

  std::vector<CohortRecord> kept;
  std::vector<std::vector<double>> columns(models.size());
  for (auto& r : cohort) {
    auto it = risk.find(r.id);
    if (it == risk.end() || it->second.size() != models.size()) continue;
    for (std::size_t m = 0; m < models.size(); ++m) columns[m].push_back(it->second.at(models[m]));
    kept.push_back(std::move(r));
  }
  if (kept.empty()) throw ValidationError("no cohort record has predictions from every model");

  const auto key = make_stratum_key(a.strata, params.stratum_rules);
  const auto g = km_censoring(kept, key);
  const auto data = make_evaluation_data(kept, models, columns, a.tau, g, key);
  const Metric metrics[] = {Metric::oe, Metric::auc, Metric::brier, Metric::log_score, Metric::snb, Metric::uno_c};
  auto report = bootstrap_compare(data, metrics, a.bootstrap, a.seed);

  json out = report.to_json();
  out["tau"] = a.tau;
  out["records"] = kept.size();
  out["excluded"] = cohort.size() - kept.size();
  double cases = 0.0;
  for (double y : data.outcomes.y) cases += y;
  out["cases"] = cases;
  write_text_file(c.out, dump17(out) + "\n");

  std::string csv = "model,bin,lower,upper,count,mean_prediction,observed,expected,oe,oe_lower,oe_upper\n";
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto bins = calibration_deciles(columns[m], data.outcomes, a.bins);
    for (std::size_t b = 0; b < bins.size(); ++b) {
      const auto& x = bins[b];
      csv += models[m] + "," + std::to_string(b + 1);
      for (double v : {x.lower, x.upper, x.count, x.mean_prediction, x.observed, x.expected, x.oe, x.oe_lower, x.oe_upper})
        csv += "," + format17(v);
      csv += "\n";
    }
  }
  write_text_file(c.out + ".calibration.csv", csv);
  write_manifest(manifest, c.out);
  return 0;
}

// --- export-hazards -------------------------------------------------------------

struct ExportArgs {
  std::string race = "white";
  std::string risk_factors;
};

int cmd_export_hazards(const Common& c, const ExportArgs& a) {
  if (c.out.empty()) throw ValidationError("export-hazards needs --out");
  auto params = load_params(c.params);
  auto manifest = begin_manifest("export-hazards", c.argv, &params, std::nullopt);
  const auto race = race_from_string(a.race);
  if (!race || *race == Race::unknown) throw ValidationError("unknown race '" + a.race + "'");
  RiskFactors x;
  x.num_biopsies = BiopsyCount::zero;
  x.atypical_hyperplasia = Hyperplasia::no;
  if (!a.risk_factors.empty()) x = parse_risk_factors(json_file(a.risk_factors));

  const auto& table = params.penetrance;
  const auto& rh = params.relative_hazard;
  const auto r0 = normalized_hazard_ratio_curve(x, rh.coefficients_for(*race), params.normalization, *race);
  const auto mortality = table.mortality(Sex::female, *race);
  const auto h0 = table.breast_hazard(Genotype::noncarrier, *race);
  std::vector<double> modified(h0.size());
  for (std::size_t t = 0; t < h0.size(); ++t) modified[t] = 1.0 - std::pow(1.0 - h0[t], r0[t]);
  const auto modified_pen = penetrance_from_hazard(modified, mortality);

  std::string csv = "age";
  for (const char* g : {"noncarrier", "brca1", "brca2", "both"}) csv += std::string(",penetrance_") + g + ",hazard_" + g;
  csv += ",mortality,r0,modified_hazard,modified_penetrance,bcrat_hazard\n";
  const auto& baseline = rh.baseline_for(*race);
  for (int age = 1; age <= kMaxAge; ++age) {
    const auto t = static_cast<std::size_t>(age - 1);
    csv += std::to_string(age);
    for (auto g : kGenotypes)
      csv += "," + format17(table.penetrance(CancerSite::breast, Sex::female, g, *race)[t]) + "," +
             format17(table.breast_hazard(g, *race)[t]);
    double bcrat = std::nan("");
    if (age >= static_cast<int>(kBaselineStartAge) && age < static_cast<int>(kBaselineEndAge))
      bcrat = baseline.breast[static_cast<std::size_t>(baseline_cell(age - 0.5))];
    csv += "," + format17(mortality[t]) + "," + format17(r0[t]) + "," + format17(modified[t]) + "," +
           format17(modified_pen[t]) + "," + (std::isnan(bcrat) ? std::string() : format17(bcrat)) + "\n";
  }
  write_text_file(c.out, csv);
  write_manifest(manifest, c.out);
  return 0;
}

// --- serve --------------------------------------------------------------------

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<std::string> models;
};

int cmd_serve(const Common& c, const ServeArgs& a) {
  auto params = load_params(c.params);
  std::vector<ModelSpec> extra;
  for (const auto& m : parse_models(a.models))
    if (m.kind == ModelKind::ensemble) extra.push_back(m);
  ScoringService service(params, std::move(extra));
  std::cerr << "serving on http://" << a.host << ":" << a.port << "\n";
  run_server(service, a.host, a.port);
  return 0;
}

int report_error(const char* kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Breast-cancer risk scoring, simulation and evaluation"};
  app.require_subcommand(1);
  Common common;
  for (int i = 0; i < argc; ++i) common.argv.emplace_back(argv[i]);
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--params", common.params, "Parameter-set directory (default: shipped set)");
    sub->add_option("--out", common.out, "Output path");
  };

  ScoreArgs score;
  auto* s = app.add_subcommand("score", "Score probands with one or more models");
  add_common(s);
  s->add_option("--cohort", score.cohort, "Cohort ndjson to score");
  s->add_option("--pedigree", score.pedigrees, "Pedigree JSON file (repeatable)");
  s->add_option("--risk-factors", score.risk_factors, "Risk-factor JSON (once, or once per pedigree)");
  s->add_option("--model", score.models, "brcapro, bcrat, combined_m or ensemble:<path> (repeatable, comma list)");
  s->add_option("--tau", score.tau, "Horizon(s), e.g. 5 or 1,5,10");
  s->add_option("--age", score.age, "Projection start age (default: proband's current age)");
  s->add_option("--split", score.split, "Only score records with this split label");

  SimulateArgs sim;
  auto* sm = app.add_subcommand("simulate", "Simulate a cohort of families");
  add_common(sm);
  sm->add_option("--config", sim.config, "Simulation config JSON")->required();
  sm->add_option("--n", sim.n, "Override the number of retained probands");
  sm->add_option("--seed", sim.seed, "Override the seed");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit a stacked ensemble of BRCAPRO and BCRAT");
  add_common(f);
  f->add_option("--cohort", fit.cohort, "Training cohort ndjson")->required();
  f->add_option("--kind", fit.kind, "fixed or time")->check(CLI::IsMember({"fixed", "time"}));
  f->add_option("--tau", fit.tau, "Horizon, or the tau grid for --kind time");
  f->add_option("--strata", fit.strata, "Censoring strata: none, center or family_history");
  f->add_option("--split", fit.split, "Records with this split label are used (all = every record)");
  f->add_option("--importance-target", fit.importance_target, "Target cohort for covariate-shift weights");
  f->add_option("--censored", fit.censored, "keep_zero or omit")->check(CLI::IsMember({"keep_zero", "omit"}));
  f->add_option("--transform", fit.transform, "sqrt or none")->check(CLI::IsMember({"sqrt", "none"}));

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Compare models on an outcome cohort");
  add_common(e);
  e->add_option("--cohort", ev.cohort, "Outcome cohort ndjson")->required();
  e->add_option("--predictions", ev.predictions, "Prediction ndjson from `score` (repeatable)")->required();
  e->add_option("--tau", ev.tau, "Evaluation horizon");
  e->add_option("--strata", ev.strata, "Censoring strata: none, center or family_history");
  e->add_option("--split", ev.split, "Only evaluate records with this split label");
  e->add_option("--bootstrap", ev.bootstrap, "Bootstrap replicates")->check(CLI::PositiveNumber);
  e->add_option("--seed", ev.seed, "Bootstrap seed");
  e->add_option("--bins", ev.bins, "Calibration bins")->check(CLI::PositiveNumber);

  ExportArgs ex;
  auto* x = app.add_subcommand("export-hazards", "Write hazard and penetrance curves as CSV");
  add_common(x);
  x->add_option("--race", ex.race, "Race table to export");
  x->add_option("--risk-factors", ex.risk_factors, "Risk factors for the modified non-carrier curve");

  ServeArgs sv;
  auto* srv = app.add_subcommand("serve", "Run the JSON scoring service");
  srv->add_option("--params", common.params, "Parameter-set directory (default: shipped set)");
  srv->add_option("--host", sv.host, "Bind address");
  srv->add_option("--port", sv.port, "Port");
  srv->add_option("--model", sv.models, "Extra ensemble:<path> models (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (*s) return cmd_score(common, score);
    if (*sm) return cmd_simulate(common, sim);
    if (*f) return cmd_fit(common, fit);
    if (*e) return cmd_evaluate(common, ev);
    if (*x) return cmd_export_hazards(common, ex);
    if (*srv) return cmd_serve(common, sv);
  } catch (const Error& err) {
    return report_error(err.kind(), err.what());
  } catch (const json::exception& err) {
    return report_error("validation", err.what());
  } catch (const std::exception& err) {
    return report_error("internal", err.what());
  }
  return 1;
}
