#include <benchmark/benchmark.h>

#include "oicap/rng.hpp"
#include "oicap/zonotope.hpp"

using namespace oicap;

namespace {

Eigen::MatrixXd random_generators(int r, int n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd gen(r, n);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < n; ++j) gen(i, j) = rng.uniform(0.05, 1.0);
    return gen;
}

void BM_decompose(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Eigen::MatrixXd gen = random_generators(n - 1, n, 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(decompose(gen).volume);
    }
}
BENCHMARK(BM_decompose)->Arg(4)->Arg(8)->Arg(12)->Unit(benchmark::kMicrosecond);

void BM_locate(benchmark::State& state) {
    const Eigen::MatrixXd gen = random_generators(3, 8, 9);
    const ZonotopeDecomposition zd = decompose(gen);
    Rng rng(13);
    std::vector<Eigen::VectorXd> points;
    for (int i = 0; i < 256; ++i) points.push_back(sample_uniform(zd, rng));
    std::size_t k = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(locate(zd, points[k++ & 255]).cell_index);
    }
}
BENCHMARK(BM_locate);

void BM_sample_uniform(benchmark::State& state) {
    const Eigen::MatrixXd gen = random_generators(3, 8, 9);
    const ZonotopeDecomposition zd = decompose(gen);
    Rng rng(13);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_uniform(zd, rng)[0]);
    }
}
BENCHMARK(BM_sample_uniform);

} // namespace

BENCHMARK_MAIN();
