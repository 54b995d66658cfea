// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS to compare.

#include <benchmark/benchmark.h>

#include "riskfuse/cohort_sim.hpp"
#include "riskfuse/evaluation.hpp"
#include "riskfuse/pipeline.hpp"

using namespace riskfuse;

namespace {

const ParameterSet& params() {
  static const ParameterSet p = load_parameter_set(default_parameter_directory());
  return p;
}

SimConfig config(int n) {
  auto j = json::parse(read_text_file(RISKFUSE_SOURCE_DIR "/configs/paper_sim.json"));
  j["n"] = n;
  j["train_size"] = n / 2;
  return parse_sim_config(j);
}

const std::vector<CohortRecord>& cohort() {
  static const auto c = simulate_cohort(config(2000), params()).records;
  return c;
}

const std::vector<ModelSpec>& models() {
  static const std::vector<ModelSpec> m{builtin_model("brcapro"), builtin_model("bcrat"), builtin_model("combined_m")};
  return m;
}

const EvaluationData& eval_data() {
  static const EvaluationData d = [] {
    Scorer scorer(params());
    std::vector<int> taus{5};
    auto scores = score_cohort(cohort(), models(), taus, scorer);
    std::vector<std::vector<double>> preds(models().size());
    for (std::size_t i = 0; i < cohort().size(); ++i)
      for (std::size_t m = 0; m < preds.size(); ++m) preds[m].push_back(scores.at(i, m, 0));
    auto key = make_stratum_key("none", params().stratum_rules);
    return make_evaluation_data(cohort(), {"brcapro", "bcrat", "combined_m"}, preds, 5, km_censoring(cohort(), key),
                                key);
  }();
  return d;
}

template <bool Serial>
void BM_simulate(benchmark::State& state) {
  const auto cfg = config(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto sim = Serial ? simulate_cohort_serial(cfg, params()) : simulate_cohort(cfg, params());
    benchmark::DoNotOptimize(sim.records.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Serial>
void BM_score(benchmark::State& state) {
  Scorer scorer(params());
  std::vector<int> taus{1, 5, 10};
  for (auto _ : state) {
    auto s = Serial ? score_cohort_serial(cohort(), models(), taus, scorer) : score_cohort(cohort(), models(), taus, scorer);
    benchmark::DoNotOptimize(s.values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(cohort().size()));
}

template <bool Serial>
void BM_bootstrap(benchmark::State& state) {
  const std::vector<Metric> metrics{Metric::oe, Metric::auc, Metric::brier};
  const int b = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto r = Serial ? bootstrap_compare_serial(eval_data(), metrics, b, 1) : bootstrap_compare(eval_data(), metrics, b, 1);
    benchmark::DoNotOptimize(r.metrics.data());
  }
}

}  // namespace

BENCHMARK(BM_simulate<true>)->Name("simulate/serial")->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate<false>)->Name("simulate/omp")->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_score<true>)->Name("score_cohort/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_score<false>)->Name("score_cohort/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_bootstrap<true>)->Name("bootstrap/serial")->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_bootstrap<false>)->Name("bootstrap/omp")->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
