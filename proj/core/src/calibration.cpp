#include "hfo/calibration.hpp"

#include "hfo/dsp.hpp"
#include "hfo/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hfo::calib {

namespace {

double median(std::vector<std::size_t> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    if (v.size() % 2) return static_cast<double>(v[m]);
    return 0.5 * static_cast<double>(v[m - 1] + v[m]);
}

// Tick-grid span the second layer has to cover for one snippet.
struct ReplayWindow {
    std::size_t first_tick = 0;
    double duration = 0.0;
};

ReplayWindow replay_window(const EncodedSnippet& s, double tick) {
    ReplayWindow w;
    w.first_tick = static_cast<std::size_t>(std::max(0.0, std::ceil((s.event_start - s.t0) / tick - 1e-9)));
    const double last = std::min(s.event_end + kResponseTail, s.t0 + s.duration) - s.t0;
    const auto n_ticks = static_cast<std::size_t>(std::floor(last / tick + 1e-9)) + 1;
    w.duration = static_cast<double>(n_ticks) * tick;
    return w;
}

std::vector<double> poisson_for(const snn::NetworkConfig& cfg, const EncodedSnippet& s) {
    return snn::make_poisson_train(cfg.poisson_rate, snippet_seed(cfg.poisson_seed, s.index), s.duration,
                                   cfg.poisson_mode, s.t0);
}

}  // namespace

EncodedSnippet encode_snippet(const synth::Snippet& snippet, const FrontEndConfig& fe, std::size_t index) {
    const double rate = snippet.spec.sample_rate;
    const EncodedChannel enc = encode_channel(snippet.samples, rate, fe);

    EncodedSnippet s;
    s.kind = snippet.kind();
    s.index = index;
    s.container_start = snippet.container_start;
    s.event_start = snippet.event_start;
    s.event_end = snippet.event_end;
    s.t0 = std::max(0.0, snippet.container_start - kNetworkLead);
    s.duration = snippet.total_duration() - s.t0;
    s.threshold = fe.threshold_fraction * enc.baselines.front();
    for (const auto& e : enc.train.events) {
        if (e.time_s < s.t0) continue;
        s.train.events.push_back(e);
        (e.polarity == codec::Polarity::Up ? s.up : s.dn).push_back(e.time_s);
    }

    const auto coeffs = dsp::design_bandpass({fe.low_hz, fe.high_hz, fe.filter_order, rate});
    const auto clean = dsp::filter_signal(snippet.event_component, coeffs);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        if (std::abs(clean[i]) < s.threshold) continue;
        const double t = static_cast<double>(i) / rate;
        if (!s.has_support()) s.support_start = t;
        s.support_end = t;
    }
    s.onset = s.event_start;
    if (s.has_support()) {
        codec::SpikeTrain inside;
        for (const auto& e : enc.train.events)
            if (e.time_s >= s.support_start - 0.5e-3 && e.time_s <= s.support_end + 0.5e-3) inside.events.push_back(e);
        const auto cycles = codec::segment_cycles(inside);
        s.cycles = cycles.size();
        s.onset = cycles.empty() ? s.support_start : cycles.front().start;
    }
    return s;
}

std::vector<EncodedSnippet> encode_corpus(const synth::Corpus& corpus, const FrontEndConfig& fe) {
    std::vector<EncodedSnippet> out;
    out.reserve(corpus.snippets.size());
    for (std::size_t i = 0; i < corpus.snippets.size(); ++i) out.push_back(encode_snippet(corpus.snippets[i], fe, i));
    return out;
}

CycleStats cycle_stats(std::span<const EncodedSnippet> snippets) {
    CycleStats st;
    for (const auto& s : snippets) {
        if (s.kind == synth::SnippetKind::Hfo) st.hfo.push_back(s.cycles);
        if (s.kind == synth::SnippetKind::Transient) st.transient.push_back(s.cycles);
    }
    st.hfo_median = median(st.hfo);
    st.transient_median = median(st.transient);
    return st;
}

std::uint64_t snippet_seed(std::uint64_t seed, std::size_t index) {
    return seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
}

bool responded(const snn::SpikeRaster& raster, const EncodedSnippet& s, double tail) {
    for (const auto& neuron : raster.second_layer)
        for (double t : neuron)
            if (t >= s.event_start && t <= s.event_end + tail) return true;
    return false;
}

bool gi_gate_opened(std::span<const double> gi_times, double onset) {
    bool active = false;
    for (double t : gi_times) {
        if (t >= onset - kGiActiveLookback && t <= onset + kGiLatency) active = true;
        if (t > onset + kGiLatency && t <= onset + kGiLatency + kGiGap) return false;
    }
    return active;
}

SnippetOutcome evaluate_snippet(const snn::NetworkConfig& cfg, const EncodedSnippet& s) {
    snn::RunOptions opts;
    opts.t0 = s.t0;
    opts.poisson_times = poisson_for(cfg, s);
    const auto raster = snn::Network(cfg).run(s.up, s.dn, s.duration, opts);
    return {responded(raster, s), gi_gate_opened(raster.global_inhibitory, s.onset)};
}

std::size_t CalibrationGrid::size() const {
    return sl_tau.size() * sl_threshold.size() * di_tau.size() * di_threshold.size() * gi_tau.size() *
           gi_threshold.size() * poisson_weight.size();
}

CalibrationGrid default_grid() {
    CalibrationGrid g;
    g.sl_tau = {3e-3, 4e-3, 6e-3, 8e-3, 11e-3, 16e-3};
    for (double th = 12.0; th <= 22.0 + 1e-9; th += 0.5) g.sl_threshold.push_back(th);
    g.di_tau = {0.5e-3, 1e-3, 2e-3, 5e-3};
    g.di_threshold = {40.0, 60.0, 100.0, 160.0};
    g.gi_tau = {0.4e-3, 1.5e-3, 4e-3};
    g.gi_threshold = {1.5, 4.0, 8.0};
    g.poisson_weight = {5.0, 10.0, 25.0};
    return g;
}

bool tonic_inhibition(const snn::NetworkConfig& cfg) {
    snn::RunOptions opts;
    opts.skip_second_layer = true;
    const std::vector<double> none;
    const auto raster = snn::Network(cfg).run(none, none, 1.0, opts);
    return static_cast<double>(raster.global_inhibitory.size()) >= kMinTonicFraction * cfg.poisson_rate;
}

CalibrationResult calibrate_unknowns(std::span<const EncodedSnippet> snippets, const snn::NetworkConfig& base,
                                     const CalibrationGrid& grid, SearchMode mode) {
    base.validate();
    std::vector<const EncodedSnippet*> hfos, transients, noises;
    for (const auto& s : snippets) {
        if (s.kind == synth::SnippetKind::Hfo) hfos.push_back(&s);
        if (s.kind == synth::SnippetKind::Transient) transients.push_back(&s);
        if (s.kind == synth::SnippetKind::Noise) noises.push_back(&s);
    }
    if (hfos.empty() || transients.empty())
        throw Error(ErrorCode::EmptyCorpus, "calibration needs at least one HFO and one transient snippet");
    if (grid.size() == 0) throw Error(ErrorCode::InvalidArgument, "calibration grid is empty");

    // Specificity is checked before sensitivity so candidates can be dropped
    // early: transients, then background, then HFOs.
    std::vector<const EncodedSnippet*> order(transients);
    order.insert(order.end(), noises.begin(), noises.end());
    order.insert(order.end(), hfos.begin(), hfos.end());

    struct Replay {
        ReplayWindow window;
        std::vector<double> drive;
        std::vector<double> poisson;
        std::vector<std::vector<double>> bound;  // per SL tau, per neuron
    };
    std::vector<Replay> replays;
    replays.reserve(order.size());
    for (const auto* s : order) {
        Replay r;
        r.window = replay_window(*s, base.tick);
        r.drive = snn::second_layer_drive(base, s->up, s->dn, r.window.duration, s->t0);
        r.poisson = poisson_for(base, *s);
        for (double tau : grid.sl_tau) {
            snn::NetworkConfig cfg = base;
            cfg.second_layer.tau_mem = tau;
            r.bound.push_back(snn::second_layer_bound(cfg, r.drive, r.window.duration, r.window.first_tick));
        }
        replays.push_back(std::move(r));
    }

    struct Stage {
        snn::NetworkConfig cfg;
        std::vector<std::vector<double>> gi;  // per entry of `order`
        std::size_t gates = 0;
    };
    std::vector<Stage> stages;
    for (double di_tau : grid.di_tau)
        for (double di_th : grid.di_threshold)
            for (double gi_tau : grid.gi_tau)
                for (double gi_th : grid.gi_threshold)
                    for (double wp : grid.poisson_weight) {
                        Stage st;
                        st.cfg = base;
                        st.cfg.dis_inhibitory.tau_mem = di_tau;
                        st.cfg.dis_inhibitory.i_threshold = di_th;
                        st.cfg.global_inhibitory.tau_mem = gi_tau;
                        st.cfg.global_inhibitory.i_threshold = gi_th;
                        st.cfg.poiss_gi.weight = wp;
                        if (!tonic_inhibition(st.cfg)) continue;
                        const snn::Network net(st.cfg);
                        for (std::size_t j = 0; j < order.size(); ++j) {
                            const auto& s = *order[j];
                            snn::RunOptions opts;
                            opts.t0 = s.t0;
                            opts.poisson_times = replays[j].poisson;
                            opts.skip_second_layer = true;
                            auto raster = net.run(s.up, s.dn, s.duration, opts);
                            if (s.kind == synth::SnippetKind::Hfo && gi_gate_opened(raster.global_inhibitory, s.onset))
                                ++st.gates;
                            st.gi.push_back(std::move(raster.global_inhibitory));
                        }
                        stages.push_back(std::move(st));
                    }
    std::stable_sort(stages.begin(), stages.end(), [](const Stage& a, const Stage& b) { return a.gates > b.gates; });

    CalibrationResult res;
    res.n_hfo = hfos.size();
    res.n_transient = transients.size();
    res.n_noise = noises.size();
    // Lexicographic: fewest responses to transients and background, then
    // fewest missed HFOs. Stages are sorted by gates, so a later tie never
    // improves.
    std::size_t best_false = order.size() + 1, best_missed = order.size() + 1;
    std::vector<std::uint8_t> mask(base.n_second_layer);
    for (const auto& st : stages) {
        for (std::size_t ti = 0; ti < grid.sl_tau.size(); ++ti)
            for (double sl_th : grid.sl_threshold) {
                snn::NetworkConfig cfg = st.cfg;
                cfg.second_layer.tau_mem = grid.sl_tau[ti];
                cfg.second_layer.i_threshold = sl_th;
                snn::NetworkConfig strict = cfg;
                strict.second_layer.i_threshold = sl_th * (1.0 - kSpecificityMargin);
                ++res.evaluated;
                std::size_t false_tr = 0, false_noise = 0, missed = 0;
                bool beaten = false;
                for (std::size_t j = 0; j < order.size() && !beaten; ++j) {
                    const auto& s = *order[j];
                    const auto& r = replays[j];
                    const auto& used = s.kind == synth::SnippetKind::Hfo ? cfg : strict;
                    bool any = false;
                    for (std::size_t i = 0; i < mask.size(); ++i) {
                        mask[i] = r.bound[ti][i] >= used.second_layer.i_threshold;
                        any = any || mask[i];
                    }
                    bool hit = false;
                    if (any) {
                        const auto spikes = snn::second_layer_response(used, r.drive, st.gi[j], r.window.duration,
                                                                       s.t0, r.window.first_tick, true, mask);
                        hit = std::any_of(spikes.begin(), spikes.end(), [](const auto& v) { return !v.empty(); });
                    }
                    if (s.kind == synth::SnippetKind::Hfo) missed += !hit;
                    else if (s.kind == synth::SnippetKind::Transient) false_tr += hit;
                    else false_noise += hit;
                    const std::size_t fals = false_tr + false_noise;
                    beaten = fals > best_false || (fals == best_false && missed >= best_missed);
                }
                if (beaten) continue;
                best_false = false_tr + false_noise;
                best_missed = missed;
                res.config = cfg;
                res.hfo_detected = res.n_hfo - missed;
                res.transient_rejected = res.n_transient - false_tr;
                res.noise_silent = res.n_noise - false_noise;
                res.gates_opened = st.gates;
                res.admissible = best_false == 0 && missed == 0;
                res.latency_met = res.admissible && st.gates == res.n_hfo;
                if (res.admissible) return res;
            }
    }
    if (stages.empty()) {
        if (mode == SearchMode::BestEffort) return res;
        throw Error(ErrorCode::NoAdmissibleConfig, "no grid cell keeps the global-inhibitory neuron tonically active");
    }
    if (mode == SearchMode::BestEffort) return res;
    throw Error(ErrorCode::NoAdmissibleConfig,
                "no configuration among " + std::to_string(res.evaluated) +
                    " candidates detects every HFO while rejecting every transient and staying silent on background "
                    "(best: " + std::to_string(res.hfo_detected) + "/" + std::to_string(res.n_hfo) + " HFOs, " +
                    std::to_string(res.transient_rejected) + "/" + std::to_string(res.n_transient) +
                    " transients rejected, " + std::to_string(res.noise_silent) + "/" + std::to_string(res.n_noise) +
                    " background stretches silent)");
}

}  // namespace hfo::calib
