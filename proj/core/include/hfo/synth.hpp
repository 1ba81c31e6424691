#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hfo/recording.hpp"

namespace hfo::synth {

enum class SnippetKind : std::uint8_t { Hfo, Transient, Noise };

const char* to_string(SnippetKind k);
SnippetKind parse_snippet_kind(const std::string& text);

/// Minimum HFO duration the generator accepts, in seconds.
inline constexpr double kMinHfoDuration = 9e-3;

struct SnippetSpec {
    SnippetKind kind = SnippetKind::Noise;
    double duration = 0.05;         // snippet container, seconds
    double hfo_freq = 350.0;        // Hz
    double hfo_duration = 0.024;    // seconds
    double transient_width = 3e-3;  // seconds, whole biphasic deflection
    double amplitude_snr = 3.0;     // event peak in the fast-ripple band / band noise RMS
    double event_offset = 0.013;    // event start inside the container, seconds
    std::uint64_t seed = 0;
    double preroll = 1.0;           // noise-only lead-in, seconds
    double band_noise_uv = 2.0;     // RMS of the background in the 250-500 Hz band
    double sample_rate = 2000.0;

    void validate() const;
};

/// A labelled stretch of wideband signal: `preroll` seconds of background
/// followed by the `duration`-second container that holds the event.
struct Snippet {
    SnippetSpec spec;
    std::vector<double> samples;          // microvolts at spec.sample_rate
    std::vector<double> event_component;  // the inserted event alone, same length
    double container_start = 0.0;
    double event_start = 0.0;
    double event_end = 0.0;

    SnippetKind kind() const { return spec.kind; }
    double total_duration() const { return static_cast<double>(samples.size()) / spec.sample_rate; }
};

/// Seeded 1/f noise (Kellet's three-pole shaping of Gaussian white noise),
/// zero mean, unit broadband variance before any scaling.
std::vector<double> pink_noise(std::size_t n, std::uint64_t seed);

/// Unit-peak biphasic deflection: an exponential-rise/exponential-decay
/// pulse followed by its inverted copy half a width later.
std::vector<double> biphasic_deflection(double width, double sample_rate);

Snippet generate_snippet(const SnippetSpec& spec);

struct Corpus {
    std::uint64_t base_seed = 0;
    std::vector<Snippet> snippets;

    std::size_t count(SnippetKind k) const;
};

/// Durations, frequencies and amplitudes are drawn from seeded distributions
/// centred on the reference medians (HFO 24 ms; transient cycle ~3.2 ms).
/// Noise snippets use a `noise_duration` container. Throws EmptyCorpus when
/// every count is zero.
Corpus generate_corpus(std::size_t n_hfo, std::size_t n_transient, std::uint64_t base_seed, std::size_t n_noise = 0,
                       double noise_duration = 0.05);

/// One `snippet_NNN.csv` per snippet plus `manifest.json`.
void export_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Recording of `channels` pink-noise channels at 2 kHz with HFOs inserted
/// at `hfo_rates_per_min[c]` and transients at `transient_rate_per_min`.
struct RecordingSpec {
    std::string patient_id;
    Phase phase = Phase::PreResection;
    double duration_s = 60.0;
    std::vector<std::string> labels;
    std::vector<double> hfo_rates_per_min;
    double transient_rate_per_min = 0.0;
    double band_noise_uv = 2.0;
    double sample_rate = 2000.0;
    std::uint64_t seed = 0;
};

struct InsertedEvent {
    std::size_t channel = 0;
    SnippetKind kind = SnippetKind::Hfo;
    double start = 0.0;
    double end = 0.0;
};

struct SyntheticRecording {
    Recording recording;
    std::vector<InsertedEvent> events;
};

SyntheticRecording generate_recording(const RecordingSpec& spec);

struct CohortPatient {
    std::string id;
    int ilae = 1;
    int followup_months = 0;
    RecordingSpec pre;
    RecordingSpec post;
};

/// Eight pseudo-patients whose busiest channel carries the published maximum
/// SNN-detector rates (pre 3.4 ... 1.9 HFO/min; post below 1 except patient
/// 6 at 13.9) together with their follow-up and ILAE class. Other channels
/// carry fixed fractions of the maximum.
std::vector<CohortPatient> reference_cohort(std::uint64_t seed, double pre_minutes = 4.0, double post_minutes = 4.0,
                                            std::size_t channels = 6);

}  // namespace hfo::synth
