#include <benchmark/benchmark.h>

#include <vector>

#include "graphleaf/batch.hpp"
#include "graphleaf/graph_cache.hpp"
#include "graphleaf/image.hpp"
#include "graphleaf/models.hpp"
#include "graphleaf/ops.hpp"
#include "graphleaf/rag.hpp"
#include "graphleaf/slic.hpp"
#include "graphleaf/tensor.hpp"
#include "synthetic.hpp"

using namespace graphleaf;

namespace {

void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<float> a(n * n), b(n * n), c(n * n);
  for (auto& v : a) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  for (auto& v : b) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  for (auto _ : state) {
    kernels::gemm(n, n, n, a.data(), b.data(), c.data(), false);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["flops"] = benchmark::Counter(static_cast<double>(2 * n * n * n), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Gemm)->Arg(64)->Arg(256)->Arg(512);

NormalizedImage bench_image() {
  Rng rng(2);
  return normalize_image(testing::natural_style_image(rng, 128, 128));
}

void BM_Slic(benchmark::State& state) {
  const auto img = bench_image();
  SlicParams params;
  params.segments = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(slic_segment(img, params));
}
BENCHMARK(BM_Slic)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_BuildRag(benchmark::State& state) {
  const auto img = bench_image();
  const auto seg = slic_segment(img);
  for (auto _ : state) benchmark::DoNotOptimize(build_rag(seg, img, 0));
}
BENCHMARK(BM_BuildRag)->Unit(benchmark::kMicrosecond);

std::vector<RegionGraph> bench_graphs(std::size_t count) {
  Rng rng(3);
  std::vector<RegionGraph> graphs;
  for (std::size_t i = 0; i < count; ++i)
    graphs.push_back(testing::random_graph(rng, 40, 60, 0.1, static_cast<std::uint32_t>(i % 3)));
  return graphs;
}

void BM_ModelForwardBackward(benchmark::State& state) {
  ModelConfig cfg;
  cfg.variant = static_cast<ModelVariant>(state.range(0));
  cfg.num_classes = 3;
  Rng init(4);
  const auto params = init_params<float>(cfg, init);
  const auto graphs = bench_graphs(32);
  std::vector<std::size_t> order(graphs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto batch = make_batch(graphs, order);
  Rng augment(5);
  for (auto _ : state) {
    Tape<float> tape;
    const auto vars = bind_params(tape, params, true);
    const Var loss =
        ops::softmax_cross_entropy(tape, model_forward(tape, batch, params, vars, cfg, true, &augment), batch.labels);
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.grad(vars.front()).data());
  }
  state.SetLabel(to_string(cfg.variant));
}
BENCHMARK(BM_ModelForwardBackward)
    ->Arg(static_cast<int>(ModelVariant::hybrid))
    ->Arg(static_cast<int>(ModelVariant::gcn))
    ->Arg(static_cast<int>(ModelVariant::gat))
    ->Unit(benchmark::kMillisecond);

GraphDataset bench_dataset() {
  GraphDataset ds;
  ds.graphs = bench_graphs(500);
  ds.class_names = {"a", "b", "c"};
  return ds;
}

void BM_CacheEncode(benchmark::State& state) {
  const auto ds = bench_dataset();
  std::size_t bytes = 0;
  for (auto _ : state) {
    const auto out = encode_cache(ds);
    bytes = out.size();
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes));
}
BENCHMARK(BM_CacheEncode)->Unit(benchmark::kMicrosecond);

void BM_CacheDecode(benchmark::State& state) {
  const auto bytes = encode_cache(bench_dataset());
  for (auto _ : state) benchmark::DoNotOptimize(decode_cache(bytes));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
}
BENCHMARK(BM_CacheDecode)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
