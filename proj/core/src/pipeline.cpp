#include "hfo/pipeline.hpp"

#include "hfo/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace hfo {

const char* to_string(BaselineMode m) { return m == BaselineMode::Static ? "static" : "rolling"; }

BaselineMode parse_baseline_mode(const std::string& text) {
    if (text == "static") return BaselineMode::Static;
    if (text == "rolling") return BaselineMode::Rolling;
    throw Error(ErrorCode::InvalidArgument, "baseline mode must be static or rolling, got '" + text + "'");
}

namespace {

bool overlaps_any(std::span<const Interval> excluded, double a, double b) {
    return std::any_of(excluded.begin(), excluded.end(), [&](const Interval& iv) { return iv.overlaps(a, b); });
}

}  // namespace

EncodedChannel encode_channel(std::span<const double> samples, double sample_rate, const FrontEndConfig& cfg,
                              std::span<const Interval> excluded) {
    constexpr double fs = dsp::kOversampleRate;
    EncodedChannel out;
    if (cfg.oversample_first) {
        const auto fast = dsp::oversample(samples, sample_rate, fs);
        out.band = dsp::filter_signal(fast, dsp::design_bandpass({cfg.low_hz, cfg.high_hz, cfg.filter_order, fs}));
    } else {
        const auto band = dsp::filter_signal(
            samples, dsp::design_bandpass({cfg.low_hz, cfg.high_hz, cfg.filter_order, sample_rate}));
        out.band = dsp::oversample(band, sample_rate, fs);
    }
    out.duration_s = static_cast<double>(out.band.size()) / fs;

    const double win = cfg.baseline_window_s;
    const auto n_windows = static_cast<std::size_t>(std::floor(out.duration_s / win + 1e-9));
    const auto win_ticks = static_cast<std::size_t>(std::llround(win * fs));

    codec::AdmConfig adm;
    adm.refractory = cfg.refractory;
    adm.tracking = cfg.tracking;

    if (cfg.baseline_mode == BaselineMode::Static) {
        std::size_t w = 0;
        while (w < n_windows && overlaps_any(excluded, w * win, (w + 1) * win)) ++w;
        if (w == n_windows)
            throw Error(ErrorCode::SignalTooShort, "no artifact-free " + std::to_string(win) + " s baseline window");
        const auto est = dsp::estimate_baseline(out.band, fs, win, cfg.baseline_subwindow_s, static_cast<double>(w) * win);
        out.baselines.push_back(est.amplitude);
        adm.threshold = cfg.threshold_fraction * est.amplitude;
        if (!(adm.threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "baseline amplitude is zero");
        out.train = codec::encode(out.band, adm);
        return out;
    }

    // Rolling: the baseline of window w sets the threshold of window w + 1;
    // window 0 uses its own. Excluded windows keep the previous estimate.
    if (n_windows == 0) throw Error(ErrorCode::SignalTooShort, "signal shorter than one baseline window");
    std::vector<double> per_window(n_windows, 0.0);
    double last = 0.0;
    for (std::size_t w = 0; w < n_windows; ++w) {
        if (!overlaps_any(excluded, w * win, (w + 1) * win) || last == 0.0)
            last = dsp::estimate_baseline(out.band, fs, win, cfg.baseline_subwindow_s, static_cast<double>(w) * win).amplitude;
        per_window[w] = last;
    }
    adm.threshold = cfg.threshold_fraction * per_window[0];
    if (!(adm.threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "baseline amplitude is zero");
    codec::AdmEncoder enc(adm);
    out.baselines.push_back(per_window[0]);
    for (std::size_t i = 0; i < out.band.size(); ++i) {
        if (i > 0 && i % win_ticks == 0) {
            const auto w = i / win_ticks;  // entering window w
            const double b = per_window[std::min(w - 1, n_windows - 1)];
            out.baselines.push_back(b);
            enc.set_threshold(cfg.threshold_fraction * b);
        }
        if (!std::isfinite(out.band[i]))
            throw Error(ErrorCode::NonFiniteSample, "sample " + std::to_string(i) + " is not finite");
        enc.push(out.band[i], out.train.events);
    }
    return out;
}

ChannelResult process_channel(const ChannelSignal& channel, double sample_rate, const PipelineConfig& cfg,
                              const snn::NetworkConfig& net, std::uint64_t seed) {
    ChannelResult res;
    res.label = channel.label;
    res.excluded = channel.excluded;
    if (channel.excluded) return res;

    auto enc = encode_channel(channel.samples, sample_rate, cfg.front_end, channel.excluded_intervals);
    res.baseline_uv = enc.baselines.front();
    res.n_input_spikes = enc.train.events.size();

    snn::NetworkConfig seeded = net;
    seeded.poisson_seed = seed;
    const snn::Network network(seeded);
    res.raster = network.run(enc.train, enc.duration_s);

    auto events = detect::extract_events(res.raster, cfg.window_s, 0.0, channel.label);
    std::erase_if(events, [&](const detect::HfoEvent& e) {
        return overlaps_any(channel.excluded_intervals, e.start, e.end);
    });
    res.events = std::move(events);

    const double total = static_cast<double>(channel.samples.size()) / sample_rate;
    res.analyzed_minutes = (total - detect::excluded_length(channel.excluded_intervals, total)) / 60.0;
    return res;
}

std::vector<ChannelResult> process_recording(const Recording& rec, const PipelineConfig& cfg,
                                             const snn::NetworkConfig& net, std::uint64_t base_seed,
                                             std::size_t workers) {
    const std::size_t n = rec.channel_count();
    std::vector<ChannelResult> results(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                results[i] = process_channel(rec.channel(i), rec.sample_rate(), cfg, net, base_seed ^ i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, n));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

}  // namespace hfo
