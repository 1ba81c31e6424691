#include "hfo/dsp.hpp"
#include "hfo/pipeline.hpp"
#include "hfo/snn.hpp"
#include "hfo/spike_codec.hpp"
#include "hfo/synth.hpp"

#include <benchmark/benchmark.h>

using namespace hfo;

namespace {

// Ten seconds of filtered pink noise at the encoder rate.
const std::vector<double>& band_signal() {
    static const auto x = [] {
        auto raw = synth::pink_noise(20000, 1);
        for (auto& v : raw) v *= 20.0;
        return dsp::oversample(dsp::filter_signal(raw, dsp::design_bandpass({})), 2000.0);
    }();
    return x;
}

void BM_Filter(benchmark::State& state) {
    const auto raw = synth::pink_noise(120000, 2);  // one minute at 2 kHz
    const auto coeffs = dsp::design_bandpass({250.0, 500.0, static_cast<int>(state.range(0)), 2000.0});
    for (auto _ : state) benchmark::DoNotOptimize(dsp::filter_signal(raw, coeffs));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(raw.size()));
}
BENCHMARK(BM_Filter)->Arg(2)->Arg(4);

void BM_Encode(benchmark::State& state) {
    const auto& x = band_signal();
    codec::AdmConfig cfg;
    cfg.threshold = 2.0;
    for (auto _ : state) benchmark::DoNotOptimize(codec::encode(x, cfg));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_Encode);

void BM_NetworkRun(benchmark::State& state) {
    const auto& x = band_signal();
    codec::AdmConfig adm;
    adm.threshold = 2.0;
    const auto train = codec::encode(x, adm);
    const snn::Network net(snn::NetworkConfig::with_grid());
    const double duration = static_cast<double>(x.size()) / dsp::kOversampleRate;
    for (auto _ : state) benchmark::DoNotOptimize(net.run(train, duration));
    state.counters["sim_s_per_s"] =
        benchmark::Counter(duration * static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_NetworkRun)->Unit(benchmark::kMillisecond);

void BM_ProcessChannel(benchmark::State& state) {
    synth::RecordingSpec spec;
    spec.duration_s = 30.0;
    spec.labels = {"1-2"};
    spec.hfo_rates_per_min = {10.0};
    spec.seed = 4;
    const auto rec = synth::generate_recording(spec).recording;
    const auto net = snn::NetworkConfig::with_grid();
    for (auto _ : state)
        benchmark::DoNotOptimize(process_channel(rec.channel(0), rec.sample_rate(), PipelineConfig{}, net, 1));
}
BENCHMARK(BM_ProcessChannel)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
