#include <benchmark/benchmark.h>

#include <vector>

#include "facemap/linalg.hpp"
#include "facemap/protocol.hpp"
#include "facemap/rng.hpp"
#include "facemap/synthetic.hpp"

using namespace facemap;

namespace {

Matrix random_matrix(std::uint64_t seed, int rows, int cols) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.next_normal();
  }
  return m;
}

void BM_RidgeFit(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const Matrix s = random_matrix(1, 2700, dim);
  const Matrix t = random_matrix(2, 2700, dim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ridge_fit(s, t, 1.0));
  }
}
BENCHMARK(BM_RidgeFit)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_TruncateRank(benchmark::State& state) {
  LinearMap map;
  map.matrix = random_matrix(3, 512, 512);
  for (auto _ : state) {
    benchmark::DoNotOptimize(truncate_rank(map, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_TruncateRank)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_FindThreshold(benchmark::State& state) {
  Rng rng(4);
  const int n = static_cast<int>(state.range(0));
  std::vector<ScoredPair> scored(n);
  for (int i = 0; i < n; ++i) {
    scored[i].pair = {"a", "b", rng.next_below(2) == 0 ? PairLabel::kSame : PairLabel::kDifferent};
    scored[i].distance = rng.next_double() * 2.0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(find_threshold(scored));
  }
}
BENCHMARK(BM_FindThreshold)->Arg(5400)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
  const std::vector<SyntheticSystemSpec> specs(2, SyntheticSystemSpec{64, 0.05, 0.0});
  const SyntheticWorld world = generate_world(600, 32, 4, specs, 42);
  const EmbeddingSet source = emit_embeddings(world, 0);
  const EmbeddingSet target = emit_embeddings(world, 1);
  const PairProtocol protocol = generate_protocol(world, 10, 100, 100, 7);
  const EvalConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(source, target, protocol, config));
  }
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
