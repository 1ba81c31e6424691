#include "hfo/synth.hpp"

#include "hfo/dsp.hpp"
#include "hfo/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

namespace hfo::synth {

const char* to_string(SnippetKind k) {
    switch (k) {
        case SnippetKind::Hfo: return "hfo";
        case SnippetKind::Transient: return "transient";
        case SnippetKind::Noise: return "noise";
    }
    return "?";
}

SnippetKind parse_snippet_kind(const std::string& text) {
    if (text == "hfo") return SnippetKind::Hfo;
    if (text == "transient") return SnippetKind::Transient;
    if (text == "noise") return SnippetKind::Noise;
    throw Error(ErrorCode::InvalidArgument, "unknown snippet kind '" + text + "'");
}

namespace {

/// Portable uniform / normal draws on top of mt19937_64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
    // splitmix64 finaliser
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

dsp::FilterCoefficients band_filter(double sample_rate) {
    return dsp::design_bandpass({250.0, 500.0, 2, sample_rate});
}

/// Pink noise scaled so its fast-ripple-band component has the given RMS.
std::vector<double> band_normalised_noise(std::size_t n, std::uint64_t seed, double band_rms, double sample_rate) {
    auto noise = pink_noise(n, seed);
    const auto filtered = dsp::filter_signal(noise, band_filter(sample_rate));
    const std::size_t skip = std::min<std::size_t>(n / 10, static_cast<std::size_t>(0.05 * sample_rate));
    double acc = 0.0;
    for (std::size_t i = skip; i < n; ++i) acc += filtered[i] * filtered[i];
    const double rms = std::sqrt(acc / static_cast<double>(std::max<std::size_t>(1, n - skip)));
    const double scale = rms > 0.0 ? band_rms / rms : 0.0;
    for (auto& v : noise) v *= scale;
    return noise;
}

double peak_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Adds a Hann-windowed burst starting at sample `first`.
void add_hfo(std::vector<double>& out, std::size_t first, double freq, double duration, double peak_band_uv,
             double phase, double sample_rate) {
    const auto coeffs = band_filter(sample_rate);
    const double gain = std::abs(coeffs.response(freq));
    const double amp = peak_band_uv / std::max(gain, 1e-3);
    const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
    for (std::size_t i = 0; i < n && first + i < out.size(); ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
        out[first + i] += amp * w * std::sin(2.0 * std::numbers::pi * freq * t + phase);
    }
}

/// Adds a biphasic deflection scaled so its band-passed peak equals
/// `peak_band_uv`. Returns the number of samples it spans.
std::size_t add_transient(std::vector<double>& out, std::size_t first, double width, double peak_band_uv,
                          double polarity, double sample_rate) {
    auto shape = biphasic_deflection(width, sample_rate);
    // Pad so the filter's ringing is part of the peak measurement.
    std::vector<double> padded(shape);
    padded.resize(shape.size() + static_cast<std::size_t>(0.02 * sample_rate), 0.0);
    const double band_peak = peak_abs(dsp::filter_signal(padded, band_filter(sample_rate)));
    const double scale = band_peak > 0.0 ? polarity * peak_band_uv / band_peak : 0.0;
    for (std::size_t i = 0; i < shape.size() && first + i < out.size(); ++i) out[first + i] += scale * shape[i];
    return shape.size();
}

}  // namespace

void SnippetSpec::validate() const {
    if (!(sample_rate > 0.0) || !(duration > 0.0) || preroll < 0.0)
        throw Error(ErrorCode::InvalidArgument, "snippet needs positive rate and duration");
    if (!(band_noise_uv >= 0.0) || !(amplitude_snr >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "snippet amplitudes must be non-negative");
    if (kind == SnippetKind::Hfo) {
        if (hfo_duration < kMinHfoDuration - 1e-12)
            throw Error(ErrorCode::InvalidArgument, "HFO duration below 9 ms");
        if (hfo_freq < 250.0 || hfo_freq > 500.0)
            throw Error(ErrorCode::InvalidArgument, "HFO frequency outside 250-500 Hz");
        if (event_offset < 0.0 || event_offset + hfo_duration > duration + 1e-12)
            throw Error(ErrorCode::InvalidArgument, "HFO does not fit inside the snippet container");
    }
    if (kind == SnippetKind::Transient) {
        if (transient_width < 2e-3 - 1e-12 || transient_width > 5e-3 + 1e-12)
            throw Error(ErrorCode::InvalidArgument, "transient width outside 2-5 ms");
        if (event_offset < 0.0 || event_offset + transient_width > duration + 1e-12)
            throw Error(ErrorCode::InvalidArgument, "transient does not fit inside the snippet container");
    }
}

std::vector<double> pink_noise(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(n);
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    // Warm the shaping filter so the first samples are stationary.
    for (int i = 0; i < 2000; ++i) {
        const double w = rng.normal();
        b0 = 0.99765 * b0 + w * 0.0990460;
        b1 = 0.96300 * b1 + w * 0.2965164;
        b2 = 0.57000 * b2 + w * 1.0526913;
    }
    double acc = 0.0;
    for (auto& v : out) {
        const double w = rng.normal();
        b0 = 0.99765 * b0 + w * 0.0990460;
        b1 = 0.96300 * b1 + w * 0.2965164;
        b2 = 0.57000 * b2 + w * 1.0526913;
        v = b0 + b1 + b2 + w * 0.1848;
        acc += v;
    }
    if (n == 0) return out;
    const double mean = acc / static_cast<double>(n);
    double var = 0.0;
    for (auto& v : out) {
        v -= mean;
        var += v * v;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    if (sd > 0.0)
        for (auto& v : out) v /= sd;
    return out;
}

std::vector<double> biphasic_deflection(double width, double sample_rate) {
    const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(width * sample_rate)));
    const double half = width / 2.0;
    const double rise = half / 6.0;
    const double decay = half / 3.0;
    auto pulse = [&](double t) {
        if (t < 0.0) return 0.0;
        return (1.0 - std::exp(-t / rise)) * std::exp(-t / decay);
    };
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        out[i] = pulse(t) - pulse(t - half);
    }
    const double m = peak_abs(out);
    if (m > 0.0)
        for (auto& v : out) v /= m;
    return out;
}

Snippet generate_snippet(const SnippetSpec& spec) {
    spec.validate();
    Snippet s;
    s.spec = spec;
    const auto n_pre = static_cast<std::size_t>(std::llround(spec.preroll * spec.sample_rate));
    const auto n_box = static_cast<std::size_t>(std::llround(spec.duration * spec.sample_rate));
    s.samples = band_normalised_noise(n_pre + n_box, spec.seed, spec.band_noise_uv, spec.sample_rate);
    s.container_start = static_cast<double>(n_pre) / spec.sample_rate;
    s.event_component.assign(s.samples.size(), 0.0);

    const auto first = n_pre + static_cast<std::size_t>(std::llround(spec.event_offset * spec.sample_rate));
    const double peak = spec.amplitude_snr * spec.band_noise_uv;
    Rng rng(mix_seed(spec.seed, 0xE7E47));
    s.event_start = static_cast<double>(first) / spec.sample_rate;
    switch (spec.kind) {
        case SnippetKind::Hfo:
            add_hfo(s.event_component, first, spec.hfo_freq, spec.hfo_duration, peak, rng.uniform(0.0, 2.0 * std::numbers::pi),
                    spec.sample_rate);
            s.event_end = s.event_start + spec.hfo_duration;
            break;
        case SnippetKind::Transient: {
            const double polarity = rng.uniform() < 0.5 ? 1.0 : -1.0;
            add_transient(s.event_component, first, spec.transient_width, peak, polarity, spec.sample_rate);
            s.event_end = s.event_start + spec.transient_width;
            break;
        }
        case SnippetKind::Noise:
            s.event_start = s.container_start;
            s.event_end = s.container_start + spec.duration;
            break;
    }
    for (std::size_t i = 0; i < s.samples.size(); ++i) s.samples[i] += s.event_component[i];
    return s;
}

std::size_t Corpus::count(SnippetKind k) const {
    return static_cast<std::size_t>(
        std::count_if(snippets.begin(), snippets.end(), [k](const Snippet& s) { return s.kind() == k; }));
}

namespace {

SnippetSpec draw_spec(SnippetKind kind, std::uint64_t seed) {
    Rng rng(seed);
    SnippetSpec spec;
    spec.kind = kind;
    spec.seed = seed;
    if (kind == SnippetKind::Hfo) {
        spec.hfo_duration = std::clamp(0.024 * std::exp(0.3 * rng.normal()), kMinHfoDuration, 0.044);
        spec.hfo_freq = rng.uniform(250.0, 500.0);
        spec.amplitude_snr = rng.uniform(3.0, 6.0);
        spec.event_offset = rng.uniform(0.002, spec.duration - spec.hfo_duration - 0.002);
    } else if (kind == SnippetKind::Transient) {
        spec.transient_width = rng.uniform(2e-3, 5e-3);
        spec.amplitude_snr = rng.uniform(3.0, 6.0);
        spec.event_offset = rng.uniform(0.01, 0.03);
    }
    return spec;
}

}  // namespace

Corpus generate_corpus(std::size_t n_hfo, std::size_t n_transient, std::uint64_t base_seed, std::size_t n_noise,
                       double noise_duration) {
    if (n_hfo + n_transient + n_noise == 0) throw Error(ErrorCode::EmptyCorpus, "corpus needs at least one snippet");
    Corpus c;
    c.base_seed = base_seed;
    std::uint64_t index = 0;
    auto add = [&](SnippetKind kind, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            auto spec = draw_spec(kind, mix_seed(base_seed, index++));
            if (kind == SnippetKind::Noise) spec.duration = noise_duration;
            c.snippets.push_back(generate_snippet(spec));
        }
    };
    add(SnippetKind::Hfo, n_hfo);
    add(SnippetKind::Transient, n_transient);
    add(SnippetKind::Noise, n_noise);
    return c;
}

void export_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["base_seed"] = corpus.base_seed;
    manifest["snippets"] = nlohmann::json::array();
    for (std::size_t i = 0; i < corpus.snippets.size(); ++i) {
        const auto& s = corpus.snippets[i];
        char name[32];
        std::snprintf(name, sizeof name, "snippet_%03zu.csv", i);
        std::ofstream out(dir / name);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / name).string());
        out << "time,signal\n";
        out.precision(17);
        for (std::size_t k = 0; k < s.samples.size(); ++k)
            out << static_cast<double>(k) / s.spec.sample_rate << ',' << s.samples[k] << '\n';

        nlohmann::json e;
        e["file"] = name;
        e["label"] = to_string(s.kind());
        e["seed"] = s.spec.seed;
        e["sample_rate"] = s.spec.sample_rate;
        e["container_start_s"] = s.container_start;
        e["container_duration_s"] = s.spec.duration;
        e["event_start_s"] = s.event_start;
        e["event_end_s"] = s.event_end;
        e["amplitude_snr"] = s.spec.amplitude_snr;
        e["band_noise_uv"] = s.spec.band_noise_uv;
        if (s.kind() == SnippetKind::Hfo) {
            e["hfo_freq_hz"] = s.spec.hfo_freq;
            e["hfo_duration_s"] = s.spec.hfo_duration;
        } else if (s.kind() == SnippetKind::Transient) {
            e["transient_width_s"] = s.spec.transient_width;
        }
        manifest["snippets"].push_back(e);
    }
    std::ofstream out(dir / "manifest.json");
    if (!out) throw Error(ErrorCode::Io, "cannot write manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
}

SyntheticRecording generate_recording(const RecordingSpec& spec) {
    if (spec.labels.size() != spec.hfo_rates_per_min.size())
        throw Error(ErrorCode::InvalidArgument, "one HFO rate per channel label is required");
    if (!(spec.duration_s > 2.0)) throw Error(ErrorCode::InvalidArgument, "synthetic recordings need > 2 s");
    const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate));
    std::vector<ChannelSignal> channels;
    std::vector<InsertedEvent> events;
    const double minutes = spec.duration_s / 60.0;
    // Events avoid the first 1.2 s so the static baseline window stays clean.
    const double lead = 1.2, tail = 0.1;
    for (std::size_t c = 0; c < spec.labels.size(); ++c) {
        const auto ch_seed = mix_seed(spec.seed, c);
        ChannelSignal ch;
        ch.label = spec.labels[c];
        ch.samples = band_normalised_noise(n, ch_seed, spec.band_noise_uv, spec.sample_rate);

        const auto n_hfo = static_cast<std::size_t>(std::llround(spec.hfo_rates_per_min[c] * minutes));
        const auto n_tr = static_cast<std::size_t>(std::llround(spec.transient_rate_per_min * minutes));
        std::vector<SnippetKind> kinds(n_hfo, SnippetKind::Hfo);
        kinds.insert(kinds.end(), n_tr, SnippetKind::Transient);
        Rng rng(mix_seed(ch_seed, 0x5107));
        // Fisher-Yates with the portable generator.
        for (std::size_t i = kinds.size(); i > 1; --i)
            std::swap(kinds[i - 1], kinds[static_cast<std::size_t>(rng.uniform() * static_cast<double>(i))]);

        const double slot = (spec.duration_s - lead - tail) / static_cast<double>(std::max<std::size_t>(1, kinds.size()));
        if (!kinds.empty() && slot < 0.1)
            throw Error(ErrorCode::InvalidArgument, "too many events for the recording length");
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            auto draw = draw_spec(kinds[i], mix_seed(ch_seed, 1000 + i));
            const double len = kinds[i] == SnippetKind::Hfo ? draw.hfo_duration : draw.transient_width;
            const double start = lead + slot * static_cast<double>(i) + rng.uniform(0.0, std::max(0.0, slot - len - 0.05));
            const auto first = static_cast<std::size_t>(std::llround(start * spec.sample_rate));
            const double peak = draw.amplitude_snr * spec.band_noise_uv;
            if (kinds[i] == SnippetKind::Hfo) {
                add_hfo(ch.samples, first, draw.hfo_freq, draw.hfo_duration, peak, rng.uniform(0.0, 2.0 * std::numbers::pi),
                        spec.sample_rate);
            } else {
                add_transient(ch.samples, first, draw.transient_width, peak, rng.uniform() < 0.5 ? 1.0 : -1.0,
                              spec.sample_rate);
            }
            events.push_back({c, kinds[i], static_cast<double>(first) / spec.sample_rate,
                              static_cast<double>(first) / spec.sample_rate + len});
        }
        channels.push_back(std::move(ch));
    }
    return {Recording(spec.sample_rate, std::move(channels), spec.patient_id, spec.phase), std::move(events)};
}

std::vector<CohortPatient> reference_cohort(std::uint64_t seed, double pre_minutes, double post_minutes,
                                            std::size_t channels) {
    if (channels == 0) throw Error(ErrorCode::InvalidArgument, "cohort channels must be positive");
    struct Row {
        const char* id;
        int followup;
        int ilae;
        double pre;
        double post;
    };
    static constexpr Row rows[] = {
        {"P1", 33, 1, 3.4, 0.5},  {"P2", 24, 1, 9.7, 0.5}, {"P3", 30, 1, 1.3, 0.5},  {"P4", 18, 1, 11.5, 0.5},
        {"P5", 13, 1, 30.0, 0.5}, {"P6", 20, 3, 45.0, 13.9}, {"P7", 29, 1, 1.4, 0.5}, {"P8", 12, 1, 1.9, 0.5},
    };
    static constexpr double fractions[] = {1.0, 0.4, 0.2, 0.1, 0.0, 0.0};
    // Four post-resection channels of patient 6 stay above 1 HFO/min.
    static constexpr double p6_post[] = {13.9, 5.0, 2.5, 1.5, 0.5, 0.0};

    std::vector<std::string> labels;
    for (std::size_t c = 0; c < channels; ++c) labels.push_back(std::to_string(c + 1) + "-" + std::to_string(c + 2));
    auto rates = [&](const double* pattern, double scale) {
        std::vector<double> r(channels, 0.0);
        for (std::size_t c = 0; c < channels && c < 6; ++c) r[c] = scale * pattern[c];
        return r;
    };

    std::vector<CohortPatient> out;
    std::uint64_t k = 0;
    for (const auto& row : rows) {
        CohortPatient p;
        p.id = row.id;
        p.ilae = row.ilae;
        p.followup_months = row.followup;
        for (auto phase : {Phase::PreResection, Phase::PostResection}) {
            RecordingSpec spec;
            spec.patient_id = row.id;
            spec.phase = phase;
            spec.labels = labels;
            spec.transient_rate_per_min = 3.0;
            spec.seed = mix_seed(seed, k++);
            if (phase == Phase::PreResection) {
                spec.duration_s = pre_minutes * 60.0;
                spec.hfo_rates_per_min = rates(fractions, row.pre);
                p.pre = spec;
            } else {
                spec.duration_s = post_minutes * 60.0;
                spec.hfo_rates_per_min = row.post > 1.0 ? rates(p6_post, 1.0) : rates(fractions, row.post);
                p.post = spec;
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace hfo::synth
