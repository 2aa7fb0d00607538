#include "gfast/channel.hpp"
#include "gfast/detectors.hpp"
#include "gfast/turbo_engine.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

using namespace gfast;

namespace {

std::vector<ToneChannel> tones(int count) {
    std::vector<int> idx;
    for (int i = 0; i < count; ++i) idx.push_back((2 * i + 1) * 256 / (2 * count));
    std::vector<ToneChannel> out;
    for (const auto& t : synthesize_tones(ToneGrid{}, CableModelParams{}, 4, idx)) out.push_back(normalize_direct_gain(t));
    return out;
}

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

void BM_MlDetect(benchmark::State& state) {
    const auto c = Constellation::qam(16);
    const CMatrix h = tones(1).front().matrix;
    Rng rng(1);
    const CVector y = apply_channel(h, complex_gaussian(4, 1.0, rng), 0.005, std::nullopt, false, rng);
    const Exec exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(ml_detect(y, h, c, exec).cf);
    state.SetLabel(exec == Exec::parallel ? "parallel" : "serial");
}

// One pilot-only frame: per-tone CE and per-symbol MUD fan out over threads.
void BM_TurboFrame(benchmark::State& state) {
    const auto channel = tones(8);
    FrameConfig frame;
    frame.num_tones_active = 8;
    frame.turbo_outer_iters = 0;
    ReceiverConfig rx;
    rx.exec = exec_of(state);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(run_turbo(channel, frame, rx, ++seed).back().ber);
    state.SetLabel(rx.exec == Exec::parallel ? "parallel" : "serial");
}

} // namespace

BENCHMARK(BM_MlDetect)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TurboFrame)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(2);

int main(int argc, char** argv) {
    benchmark::AddCustomContext("omp_threads", std::to_string(omp_get_max_threads()));
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
