#include <benchmark/benchmark.h>

#include "laserprog/anomaly.hpp"
#include "laserprog/baselines.hpp"
#include "laserprog/datagen.hpp"
#include "laserprog/experiments.hpp"

using namespace laserprog;

namespace {

DatasetSpec small_spec() {
  DatasetSpec s;
  s.normal_per_cell = 8;
  s.gradual_per_cell = 3;
  s.sudden_per_cell = 2;
  return s;
}

const Dataset& dataset() {
  static Dataset ds = build_dataset(small_spec());
  return ds;
}

const ScvaeModel& model() {
  static ScvaeModel m = [] {
    const Dataset& ds = dataset();
    NormStats norm = normalize_fit(ds.train);
    ScvaeConfig cfg;
    cfg.epochs = 2;
    return scvae_train(normalize_all(norm, ds.train), cfg, norm).model;
  }();
  return m;
}

void bm_gru_sequence_forward(benchmark::State& state) {
  GruLayer layer;
  ParamSet params;
  Rng rng(1);
  layer = GruLayer::create(params, "g", 1, 40, rng);
  std::vector<Vec> xs(6, Vec{0.5});
  for (auto _ : state) {
    auto caches = gru_sequence_forward(params, layer, xs, nullptr);
    benchmark::DoNotOptimize(caches.back().h.data());
  }
}
BENCHMARK(bm_gru_sequence_forward);

void bm_anomaly_score(benchmark::State& state) {
  const ScvaeModel& m = model();
  PowerWindow w = normalize_apply(m.norm, dataset().test.front());
  for (auto _ : state) {
    benchmark::DoNotOptimize(anomaly_score(m, w));
  }
}
BENCHMARK(bm_anomaly_score);

void bm_lof_fit(benchmark::State& state) {
  const Dataset& ds = dataset();
  NormStats norm = normalize_fit(ds.train);
  std::vector<Vec> pts;
  for (const auto& w : normalize_all(norm, ds.train)) {
    pts.push_back(lof_features(w));
  }
  LofConfig cfg;
  cfg.k = std::min<int>(20, static_cast<int>(pts.size()) - 1);
  for (auto _ : state) {
    LofModel m = LofModel::fit(pts, cfg);
    benchmark::DoNotOptimize(m.threshold());
  }
}
BENCHMARK(bm_lof_fit);

}  // namespace

BENCHMARK_MAIN();
