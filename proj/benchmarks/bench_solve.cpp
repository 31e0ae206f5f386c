#include <benchmark/benchmark.h>

#include "scribblefill/graph.hpp"
#include "scribblefill/labeling.hpp"
#include "scribblefill/propagate.hpp"
#include "synthetic.hpp"

namespace {

using namespace scribblefill;

void BM_BuildAffinity(benchmark::State& state) {
  const auto side = static_cast<std::uint32_t>(state.range(0));
  const EnrichConfig cfg;
  const FeatureMatrix features = build_feature_matrix(bench::discs(side, side, 5), nullptr, cfg);
  const auto rows = sample_rows(features.rows(), static_cast<std::size_t>(cfg.itq_sample), cfg.seed);
  const auto model = fit_itq_rows(features, rows, static_cast<std::size_t>(cfg.tau), cfg.itq_iters, cfg.seed).model;
  const CodeBook codes = encode(model, features);
  for (auto _ : state) {
    HammingSearcher searcher(codes, SearchWindow{static_cast<std::uint32_t>(cfg.window_radius), side, side});
    auto graph = build_affinity(
        features, [&](std::uint32_t q, std::vector<std::uint32_t>& out) { searcher.query(q, 10, out); }, cfg);
    benchmark::DoNotOptimize(graph.weights.vals.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(features.rows()));
}
BENCHMARK(BM_BuildAffinity)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

std::vector<std::vector<double>> stroke_rhs(const CoarseAnnotation& ann, double lambda) {
  std::vector<std::vector<double>> bs;
  for (std::size_t k = 0; k < ann.class_count(); ++k) {
    std::vector<double> b(ann.pixel_count(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = lambda * ann.map(k)[i];
    bs.push_back(std::move(b));
  }
  return bs;
}

// Batched Jacobi PCG; the argument is the number of classes.
void BM_PcgSolveMany(benchmark::State& state) {
  const std::uint32_t side = 200;
  const EnrichConfig cfg;
  const PreparedImage prep = prepare_image(bench::discs(side, side, 9), nullptr, cfg);
  const auto classes = static_cast<int>(state.range(0));
  const CoarseAnnotation ann = bench::strokes(side, side, classes);
  const CsrMatrix a = system_matrix(prep.laplacian, ann.union_map(), cfg.lambda);
  const auto bs = stroke_rhs(ann, cfg.lambda);
  int iterations = 0;
  for (auto _ : state) {
    auto res = pcg_solve_many(a, bs, cfg.tol, cfg.maxiter);
    iterations = res.front().iterations;
    benchmark::DoNotOptimize(res.front().x.data());
  }
  state.counters["pcg_iterations"] = iterations;
}
BENCHMARK(BM_PcgSolveMany)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

// Whole pipeline; the argument is the image width (height is 3/4 of it).
void BM_Enrich(benchmark::State& state) {
  const auto w = static_cast<std::uint32_t>(state.range(0));
  const std::uint32_t h = w * 3 / 4;
  const RasterImage img = bench::discs(w, h, 11);
  const CoarseAnnotation ann = bench::strokes(w, h, 3);
  const EnrichConfig cfg;
  for (auto _ : state) {
    auto r = enrich(img, ann, nullptr, cfg);
    benchmark::DoNotOptimize(r.labels.labels.data());
  }
}
BENCHMARK(BM_Enrich)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

}  // namespace
