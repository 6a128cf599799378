#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "pairsim/analysis.hpp"
#include "pairsim/config.hpp"
#include "pairsim/experiment.hpp"
#include "pairsim/qstate.hpp"
#include "pairsim/random.hpp"
#include "pairsim/tomography.hpp"

namespace {

void BM_PoissonSmallMean(benchmark::State& state) {
  pairsim::Rng rng(42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rng.poisson(4.2));
  }
}
BENCHMARK(BM_PoissonSmallMean);

void BM_PoissonLargeMean(benchmark::State& state) {
  pairsim::Rng rng(42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rng.poisson(1.5e6));
  }
}
BENCHMARK(BM_PoissonLargeMean);

void BM_JointProbability(benchmark::State& state) {
  const pairsim::DensityMatrix rho =
      pairsim::output_state(pairsim::SourceConfig::defaults());
  const pairsim::AnalyzerSetting sa(std::nullopt, 22.5);
  const pairsim::AnalyzerSetting sb(std::nullopt, 30.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pairsim::joint_probability(rho, sa, sb));
  }
}
BENCHMARK(BM_JointProbability);

void BM_SimulateCountRecord(benchmark::State& state) {
  const pairsim::ExperimentConfig cfg;
  const pairsim::DensityMatrix rho = pairsim::output_state(cfg.source);
  const pairsim::AnalyzerSetting sa(std::nullopt, 22.5);
  const pairsim::AnalyzerSetting sb(std::nullopt, 30.0);
  const pairsim::JointProbability jp =
      pairsim::outcome_probabilities(rho, sa, sb);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pairsim::simulate_counts(
        jp, cfg.source, cfg.detector_a, cfg.detector_b, sa, sb, 10.0, ++seed));
  }
}
BENCHMARK(BM_SimulateCountRecord);

void BM_FringeScan(benchmark::State& state) {
  pairsim::ExperimentConfig cfg;
  cfg.repeats = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pairsim::simulate_fringe_records(cfg));
  }
}
BENCHMARK(BM_FringeScan)->Arg(1)->Arg(10);

void BM_FringeAnalysis(benchmark::State& state) {
  const pairsim::ExperimentConfig cfg;
  const auto records = pairsim::simulate_fringe_records(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pairsim::analyze_fringe_records(records));
  }
}
BENCHMARK(BM_FringeAnalysis);

void BM_TriangleFit(benchmark::State& state) {
  pairsim::ExperimentConfig cfg;
  cfg.experiment = pairsim::ExperimentKind::hom;
  const auto samples = pairsim::simulate_hom_samples(cfg);
  std::vector<double> xs, cs;
  for (const auto& s : samples) {
    xs.push_back(s.gap_mm);
    cs.push_back(s.coincidences);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(pairsim::fit_triangle(xs, cs));
  }
}
BENCHMARK(BM_TriangleFit);

void BM_Chsh(benchmark::State& state) {
  pairsim::ExperimentConfig cfg;
  cfg.experiment = pairsim::ExperimentKind::chsh;
  const auto records = pairsim::simulate_chsh_records(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pairsim::chsh(records));
  }
}
BENCHMARK(BM_Chsh);

void BM_MleTomography(benchmark::State& state) {
  pairsim::ExperimentConfig cfg;
  cfg.experiment = pairsim::ExperimentKind::tomography;
  const auto records = pairsim::simulate_tomography_records(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pairsim::mle_tomography(records));
  }
}
BENCHMARK(BM_MleTomography);

void BM_ConfigRoundTrip(benchmark::State& state) {
  const pairsim::ExperimentConfig cfg;
  const std::string text = pairsim::serialize_config(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pairsim::parse_config(text));
  }
}
BENCHMARK(BM_ConfigRoundTrip);

}  // namespace

BENCHMARK_MAIN();
