#include <benchmark/benchmark.h>

#include <sparsepick/evaluator.hpp>
#include <sparsepick/peak_picker.hpp>
#include <sparsepick/simulator.hpp>
#include <sparsepick/sparse_coder.hpp>

using namespace sparsepick;

namespace {

SimDataset moderate(std::uint64_t seed) {
    SimConfig cfg = sim_preset("moderate");
    cfg.seed = seed;
    return generate(cfg);
}

HyperParams calibrated() {
    HyperParams hp;
    hp.alpha = 3.0;
    hp.norm_bound = 150.0;
    return hp;
}

void BM_SolveCodes(benchmark::State& state) {
    const SimDataset d = moderate(1);
    HyperParams hp = calibrated();
    hp.num_atoms = state.range(0);
    const Dictionary dict = initial_dictionary(d.spectra.data(), hp);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_codes(d.spectra.data(), dict, hp.alpha, hp.beta));
    }
    state.SetItemsProcessed(state.iterations() * d.spectra.count());
}
BENCHMARK(BM_SolveCodes)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_UpdateBasis(benchmark::State& state) {
    const SimDataset d = moderate(2);
    HyperParams hp = calibrated();
    hp.alpha = static_cast<double>(state.range(0)) / 10.0;
    const Dictionary dict = initial_dictionary(d.spectra.data(), hp);
    const CodeMatrix codes = solve_codes(d.spectra.data(), dict, hp.alpha, hp.beta);
    state.counters["used_atoms"] = static_cast<double>(active_atoms(codes).size());
    for (auto _ : state) {
        benchmark::DoNotOptimize(update_basis(d.spectra.data(), codes, hp.norm_bound, dict));
    }
}
// alpha 0.5 uses more atoms than there are spectra, alpha 3 only a few.
BENCHMARK(BM_UpdateBasis)->Arg(5)->Arg(30)->Unit(benchmark::kMicrosecond);

void BM_Fit(benchmark::State& state) {
    const SimDataset d = moderate(3);
    HyperParams hp = calibrated();
    hp.alpha = static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(fit(d.spectra, hp));
}
BENCHMARK(BM_Fit)->Arg(1)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_DetectPeaks(benchmark::State& state) {
    const SimDataset d = moderate(4);
    const Vector v = normalize(d.spectra.data().col(0));
    for (auto _ : state) benchmark::DoNotOptimize(detect_peaks(v, 2.5));
}
BENCHMARK(BM_DetectPeaks);

void BM_MeanSpectrumBaseline(benchmark::State& state) {
    const SimDataset d = moderate(5);
    const PickerParams p;
    for (auto _ : state) benchmark::DoNotOptimize(mean_spectrum_baseline(d.spectra, p));
}
BENCHMARK(BM_MeanSpectrumBaseline)->Unit(benchmark::kMicrosecond);

void BM_Generate(benchmark::State& state) {
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(moderate(seed++));
}
BENCHMARK(BM_Generate)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
