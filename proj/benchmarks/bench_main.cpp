#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "spikecp/adaptive.hpp"
#include "spikecp/conformal.hpp"
#include "spikecp/datagen.hpp"
#include "spikecp/snn.hpp"
#include "spikecp/trainer.hpp"

namespace {

using namespace spikecp;

NetworkParams network(int hidden) {
  const std::vector<int> sizes{hidden};
  return init_network(50, sizes, 10, 80, FilterKernel{}, 1);
}

LabeledDataset dataset(std::size_t n) {
  return generate(prototype_spec(10, 50, 80, 0.2, 0.1, 0.15, 0.0), n, 2);
}

void BM_ForwardStep(benchmark::State& state) {
  const auto p = network(static_cast<int>(state.range(0)));
  const auto x = dataset(1).items[0].input;
  NetworkState s(p);
  int t = 0;
  for (auto _ : state) {
    if (t == p.steps) {
      s.reset();
      t = 0;
    }
    benchmark::DoNotOptimize(forward_step(p, s, x.at(++t)));
  }
}
BENCHMARK(BM_ForwardStep)->Arg(64)->Arg(256);

void BM_RunFull(benchmark::State& state) {
  const auto p = network(64);
  const auto x = dataset(1).items[0].input;
  for (auto _ : state) benchmark::DoNotOptimize(run_full(p, x));
}
BENCHMARK(BM_RunFull);

void BM_CalibrateThresholds(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  CalibrationScores cs;
  cs.checkpoints = {20, 40, 60, 80};
  for (int c = 0; c < 4; ++c) {
    std::vector<double> list(n);
    for (double& v : list) v = u(gen);
    cs.scores.push_back(std::move(list));
  }
  for (auto _ : state) benchmark::DoNotOptimize(calibrate_thresholds(cs, 0.025));
}
BENCHMARK(BM_CalibrateThresholds)->Arg(200)->Arg(10000);

struct Calibrated {
  NetworkParams params = network(64);
  LabeledDataset data = dataset(201);
  CheckpointSet cps = CheckpointSet::equally_spaced(80, 4);
  ThresholdSchedule schedule;
  RunTrace trace;

  Calibrated() {
    auto [cal, test] = split_cal_test(data, 200, 1);
    schedule = calibrate_spikecp(calibration_scores(params, cal, cps, NcScoreKind::kGlobal), 0.9);
    trace = run_to_checkpoints(params, test.items[0].input, cps.times());
  }
};

void BM_SpikecpDecide(benchmark::State& state) {
  static const Calibrated c;
  for (auto _ : state) {
    benchmark::DoNotOptimize(spikecp_decide(c.trace, c.schedule, NcScoreKind::kGlobal, 3, c.cps));
  }
}
BENCHMARK(BM_SpikecpDecide);

void BM_SpikecpInfer(benchmark::State& state) {
  static const Calibrated c;
  const auto& x = c.data.items.back().input;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        spikecp_infer(c.params, x, c.schedule, NcScoreKind::kGlobal, 3, c.cps));
  }
}
BENCHMARK(BM_SpikecpInfer);

void BM_DcsnnGridAccuracy(benchmark::State& state) {
  const auto p = network(64);
  const auto data = dataset(static_cast<std::size_t>(state.range(0)));
  std::vector<RunTrace> traces;
  std::vector<const RunTrace*> ptrs;
  std::vector<int> labels;
  for (const auto& item : data.items) {
    traces.push_back(run_full(p, item.input));
    labels.push_back(item.label);
  }
  for (const auto& t : traces) ptrs.push_back(&t);
  const auto grid = default_dcsnn_grid();
  for (auto _ : state) benchmark::DoNotOptimize(dcsnn_grid_accuracy(ptrs, labels, grid));
}
BENCHMARK(BM_DcsnnGridAccuracy)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
