#include <benchmark/benchmark.h>

#include <map>

#include "scribblefill/features.hpp"
#include "scribblefill/hashing.hpp"
#include "synthetic.hpp"

namespace {

using namespace scribblefill;

struct Prepared {
  FeatureMatrix features;
  HashModel model;
  CodeBook codes;
};

const Prepared& prepared(std::uint32_t side) {
  static std::map<std::uint32_t, Prepared> cache;
  auto it = cache.find(side);
  if (it == cache.end()) {
    const EnrichConfig cfg;
    Prepared p;
    p.features = build_feature_matrix(bench::discs(side, side, 3), nullptr, cfg);
    const auto rows = sample_rows(p.features.rows(), static_cast<std::size_t>(cfg.itq_sample), cfg.seed);
    p.model = fit_itq_rows(p.features, rows, static_cast<std::size_t>(cfg.tau), cfg.itq_iters, cfg.seed).model;
    p.codes = encode(p.model, p.features);
    it = cache.emplace(side, std::move(p)).first;
  }
  return it->second;
}

void BM_FitItq(benchmark::State& state) {
  const EnrichConfig cfg;
  const auto& p = prepared(200);
  const auto rows = sample_rows(p.features.rows(), static_cast<std::size_t>(cfg.itq_sample), cfg.seed);
  for (auto _ : state) {
    auto fit = fit_itq_rows(p.features, rows, static_cast<std::size_t>(state.range(0)), cfg.itq_iters, cfg.seed);
    benchmark::DoNotOptimize(fit.model.projection.data());
  }
}
BENCHMARK(BM_FitItq)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Encode(benchmark::State& state) {
  const auto& p = prepared(static_cast<std::uint32_t>(state.range(0)));
  for (auto _ : state) {
    auto codes = encode(p.model, p.features);
    benchmark::DoNotOptimize(codes.words.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.features.rows()));
}
BENCHMARK(BM_Encode)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

// Windowed queries; the argument is the window radius.
void BM_HammingKnn(benchmark::State& state) {
  const std::uint32_t side = 300;
  const auto& p = prepared(side);
  HammingSearcher searcher(p.codes, SearchWindow{static_cast<std::uint32_t>(state.range(0)), side, side});
  std::vector<std::uint32_t> out;
  std::uint32_t q = 0;
  for (auto _ : state) {
    searcher.query(q, 10, out);
    benchmark::DoNotOptimize(out.data());
    q = (q + 7919) % (side * side);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_HammingKnn)->Arg(20)->Arg(60)->Arg(120);

}  // namespace
