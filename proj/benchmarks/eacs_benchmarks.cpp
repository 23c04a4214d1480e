/*
 * Copyright 2026 The EACS Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Micro benchmarks for the hot paths of one replication.

#include <benchmark/benchmark.h>

#include "eacs/baselines.hpp"
#include "eacs/env_data.hpp"
#include "eacs/experiment.hpp"
#include "eacs/gating.hpp"
#include "eacs/risk.hpp"
#include "eacs/selector.hpp"
#include "eacs/summaries.hpp"

namespace {

eacs::MultiEnvData make_grid(int per_type, int n) {
  eacs::GridSpec g;
  g.per_type_count = per_type;
  g.n = n;
  return eacs::generate_environment_grid(g, 1.0, 7, 0, eacs::StreamRole::kTrain);
}

void BM_GenerateGrid(benchmark::State& state) {
  const int per_type = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(make_grid(per_type, 100));
}
BENCHMARK(BM_GenerateGrid)->Arg(5)->Arg(100);

void BM_Summaries(benchmark::State& state) {
  const auto data = make_grid(100, 100);
  const eacs::SummaryConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(eacs::summarize_all(data, cfg));
}
BENCHMARK(BM_Summaries);

void BM_RiskTable(benchmark::State& state) {
  const auto data = make_grid(static_cast<int>(state.range(0)), 100);
  const auto library = eacs::build_library(2);
  for (auto _ : state) {
    const auto predictors = eacs::fit_library(data, library);
    benchmark::DoNotOptimize(eacs::build_risk_table(data, library, predictors));
  }
}
BENCHMARK(BM_RiskTable)->Arg(20)->Arg(100);

void BM_TrainSelector(benchmark::State& state) {
  const auto data = make_grid(100, 100);
  const auto library = eacs::build_library(2);
  const auto table = eacs::build_risk_table(data, library, eacs::fit_library(data, library));
  const eacs::SummaryConfig summary;
  const auto summaries = eacs::summarize_all(data, summary);
  eacs::SelectorTrainConfig cfg;
  cfg.kind = state.range(0) == 0 ? eacs::SelectorKind::kMultinomialLogistic
                                 : eacs::SelectorKind::kMlp;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eacs::train_selector(summaries, table.labels, library, cfg, summary));
  }
}
BENCHMARK(BM_TrainSelector)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_GateTraining(benchmark::State& state) {
  const auto data = make_grid(20, 100);
  const eacs::SummaryConfig summary;
  const auto summaries = eacs::summarize_all(data, summary);
  eacs::GateTrainConfig cfg;
  cfg.max_epochs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(eacs::train_soft_gating(data, summaries, cfg, summary));
  }
}
BENCHMARK(BM_GateTraining)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Lasso(benchmark::State& state) {
  const auto data = make_grid(100, 100);
  for (auto _ : state) benchmark::DoNotOptimize(eacs::fit_lasso(data, eacs::LassoConfig{0.01}));
}
BENCHMARK(BM_Lasso)->Unit(benchmark::kMillisecond);

void BM_Icp(benchmark::State& state) {
  const auto data = make_grid(100, 100);
  const auto library = eacs::build_library(2);
  eacs::IcpConfig cfg;
  cfg.interactions = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(eacs::icp_run(data, library, cfg));
}
BENCHMARK(BM_Icp)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Replication(benchmark::State& state) {
  const eacs::CellSpec cell = eacs::default_cell(eacs::ExperimentConfig{});
  std::uint64_t rep = 0;
  for (auto _ : state) benchmark::DoNotOptimize(eacs::run_replication(cell, 20260101, rep++));
}
BENCHMARK(BM_Replication)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
