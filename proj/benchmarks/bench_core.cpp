// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "vmouse/device_io.hpp"
#include "vmouse/fusion.hpp"
#include "vmouse/gp.hpp"
#include "vmouse/synthetic_user.hpp"

namespace {

using namespace vmouse;

void BM_PipelineProcess(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> d(-50, 50);
  std::vector<fusion::DualSample> samples(4096);
  for (auto& s : samples) {
    s.front = {double(d(rng)), double(d(rng))};
    s.rear = {double(d(rng)), double(d(rng))};
  }
  fusion::Pipeline pipe(fusion::VirtualConfig::make(40, 800));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipe.process(samples[i++ & 4095]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PipelineProcess);

void BM_EiAcquire(benchmark::State& state) {
  opt::GPState s;
  for (int i = 0; i < state.range(0); ++i) {
    const double p = 20.0 + (i * 37) % 61;
    s = opt::gp_update(s, {p, 0.05 + 1e-4 * (p - 45) * (p - 45), "bench"});
  }
  const auto grid = opt::default_grid();
  for (auto _ : state) benchmark::DoNotOptimize(opt::ei_acquire(s, grid));
}
BENCHMARK(BM_EiAcquire)->Arg(5)->Arg(15)->Arg(40);

void BM_SimulateTrial(benchmark::State& state) {
  const auto cfg = fusion::VirtualConfig::make(40, 800);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(user::simulate_trial(user::ArmModel{}, {960, 540}, {1260, 700}, 20.0, cfg, ++seed));
  }
}
BENCHMARK(BM_SimulateTrial);

void BM_RecordCodec(benchmark::State& state) {
  const io::LogRecord r{123456789, true, false, -123, 456, -78, 90, -3, 12};
  for (auto _ : state) {
    const std::string line = io::encode_record(r);
    benchmark::DoNotOptimize(io::decode_record(line));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RecordCodec);

}  // namespace

BENCHMARK_MAIN();
