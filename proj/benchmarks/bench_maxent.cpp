#include <benchmark/benchmark.h>

#include "oicap/capacity.hpp"
#include "oicap/maxent.hpp"
#include "oicap/rng.hpp"
#include "oicap/low_snr.hpp"
#include "oicap/scenario.hpp"

using namespace oicap;

namespace {

ValidatedChannel reference_channel_a() {
    Eigen::VectorXd alpha(2);
    alpha << 0.9, 0.2;
    return validate(ChannelMatrix{Eigen::MatrixXd{{0.65, 0.35}}}, alpha);
}

void BM_gamma_ec_2x1(benchmark::State& state) {
    const ValidatedChannel vc = reference_channel_a();
    const ReducedChannel rc = reduce(vc.channel);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gamma_ec(rc, vc.profile).sol.gamma);
    }
}
BENCHMARK(BM_gamma_ec_2x1)->Unit(benchmark::kMillisecond);

void BM_gamma_bc_2x1(benchmark::State& state) {
    const ValidatedChannel vc = reference_channel_a();
    const ReducedChannel rc = reduce(vc.channel);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gamma_bc(rc, vc.profile).sol.gamma);
    }
}
BENCHMARK(BM_gamma_bc_2x1)->Unit(benchmark::kMillisecond);

void BM_gamma_ec_rank3(benchmark::State& state) {
    // Rank-3 multi-directional indoor channel; quadrature size is the arg.
    const IndoorChannelModel model = IndoorChannelModel::make(ReceiverKind::MultiDirectional);
    Rng rng(777);
    ChannelMatrix channel;
    while (true) {
        const IndoorSample s = gen_indoor(model, rng);
        if (s.all_zero) continue;
        if (reduce(s.channel).rank == 3) {
            channel = s.channel;
            break;
        }
    }
    const ValidatedChannel vc = validate(channel, Eigen::VectorXd::Constant(4, 0.4));
    const ReducedChannel rc = reduce(vc.channel);
    MaxEntOptions opts;
    opts.quad.qmc_points = static_cast<int>(state.range(0));
    opts.qmc_doubling = false;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gamma_ec(rc, vc.profile, opts).sol.gamma);
    }
}
BENCHMARK(BM_gamma_ec_rank3)->Arg(1 << 12)->Arg(1 << 14)->Unit(benchmark::kMillisecond);

void BM_solve_bc_allocation(benchmark::State& state) {
    Rng rng(5);
    const int n = static_cast<int>(state.range(0));
    Eigen::MatrixXd H(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) H(i, j) = rng.uniform(0.05, 1.0);
    const Eigen::MatrixXd G = H.transpose() * H;
    Eigen::VectorXd alpha(n);
    for (int i = 0; i < n; ++i) alpha[i] = rng.uniform(0.1, 0.9);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_bc_allocation(G, alpha).value);
    }
}
BENCHMARK(BM_solve_bc_allocation)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

} // namespace
