#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hfo/pipeline.hpp"
#include "hfo/snn.hpp"
#include "hfo/spike_codec.hpp"
#include "hfo/synth.hpp"

namespace hfo::calib {

/// Lead of the network window before the snippet container, seconds. Gives
/// the Poisson-driven inhibitory pair time to settle.
inline constexpr double kNetworkLead = 0.15;
/// Time after an event's end that still counts as a response to it.
inline constexpr double kResponseTail = 0.015;
/// GI must fall silent no later than this after HFO onset.
inline constexpr double kGiLatency = 3e-3;
/// Minimum GI silence that counts as a gate opening.
inline constexpr double kGiGap = 10e-3;
/// GI must have been active within this span before onset.
inline constexpr double kGiActiveLookback = 30e-3;
/// Without input the GI neuron must fire at least this fraction of the
/// Poisson rate.
inline constexpr double kMinTonicFraction = 0.5;
/// Transient and noise snippets must stay silent with the second-layer
/// threshold lowered by this fraction.
inline constexpr double kSpecificityMargin = 0.15;

/// A corpus snippet reduced to what the network sees.
struct EncodedSnippet {
    synth::SnippetKind kind = synth::SnippetKind::Noise;
    std::size_t index = 0;       // position in the corpus
    codec::SpikeTrain train;     // events inside the network window
    std::vector<double> up, dn;  // the same, split by polarity
    double t0 = 0.0;             // network window start
    double duration = 0.0;       // network window length
    double container_start = 0.0;
    double event_start = 0.0;
    double event_end = 0.0;
    double threshold = 0.0;  // ADM threshold, microvolts
    /// Span where the band-passed event alone reaches the ADM threshold;
    /// empty (start > end) when it never does.
    double support_start = 1.0;
    double support_end = 0.0;
    double onset = 0.0;  // start of the first UP-DN cycle inside the support
    std::size_t cycles = 0;

    bool has_support() const { return support_start <= support_end; }
};

/// Encodes the full snippet (preroll included) and keeps the network window
/// [container_start - kNetworkLead, container end).
EncodedSnippet encode_snippet(const synth::Snippet& snippet, const FrontEndConfig& fe, std::size_t index = 0);

std::vector<EncodedSnippet> encode_corpus(const synth::Corpus& corpus, const FrontEndConfig& fe);

struct CycleStats {
    std::vector<std::size_t> hfo;
    std::vector<std::size_t> transient;
    double hfo_median = 0.0;
    double transient_median = 0.0;
};

CycleStats cycle_stats(std::span<const EncodedSnippet> snippets);

/// Poisson seed used for snippet `index` under base seed `seed`.
std::uint64_t snippet_seed(std::uint64_t seed, std::size_t index);

/// True when any second-layer spike lands in [event_start, event_end + tail].
bool responded(const snn::SpikeRaster& raster, const EncodedSnippet& s, double tail = kResponseTail);

/// GI fired within kGiActiveLookback before `onset` and then stayed silent
/// over (onset + kGiLatency, onset + kGiLatency + kGiGap].
bool gi_gate_opened(std::span<const double> gi_times, double onset);

struct SnippetOutcome {
    bool responded = false;
    bool gate_opened = false;
};

/// Runs the whole network over the snippet window.
SnippetOutcome evaluate_snippet(const snn::NetworkConfig& cfg, const EncodedSnippet& s);

/// Candidate values for the neuron constants the reference leaves open.
struct CalibrationGrid {
    std::vector<double> sl_tau, sl_threshold;
    std::vector<double> di_tau, di_threshold;
    std::vector<double> gi_tau, gi_threshold;
    std::vector<double> poisson_weight;

    std::size_t size() const;
};

CalibrationGrid default_grid();

/// Poisson drive alone keeps GI firing at kMinTonicFraction of its rate.
bool tonic_inhibition(const snn::NetworkConfig& cfg);

enum class SearchMode {
    Strict,
    /// Return the candidate with the fewest misclassified snippets instead of
    /// throwing.
    BestEffort,
};

struct CalibrationResult {
    snn::NetworkConfig config;
    std::size_t n_hfo = 0, hfo_detected = 0;
    std::size_t n_transient = 0, transient_rejected = 0;
    std::size_t n_noise = 0, noise_silent = 0;
    std::size_t gates_opened = 0;  // HFO snippets whose GI gate opened in time
    bool admissible = false;       // every HFO detected, every transient and noise snippet silent
    bool latency_met = false;      // admissible and every gate opened
    std::size_t evaluated = 0;     // configurations tried
};

/// Staged search. The inhibitory pair is simulated once per (DI, GI, Poisson
/// weight) candidate that keeps GI tonically active; the second layer is then
/// replayed for every (SL tau, threshold) against the recorded GI spikes.
/// A snippet is handled when HFOs draw a second-layer spike and transient and
/// noise snippets draw none, within [event_start, event_end + kResponseTail];
/// silence is judged with the threshold lowered by kSpecificityMargin.
/// Returns the first configuration handling every snippet and opening the GI
/// gate for every HFO; failing that, the one handling every snippet with the
/// most gates, latency_met false. When no configuration handles every
/// snippet, Strict throws NoAdmissibleConfig and BestEffort returns the
/// candidate ranked best by fewest transient and noise responses, then fewest
/// missed HFOs, then most gates. Throws EmptyCorpus without HFOs or
/// transients.
CalibrationResult calibrate_unknowns(std::span<const EncodedSnippet> snippets, const snn::NetworkConfig& base,
                                     const CalibrationGrid& grid = default_grid(),
                                     SearchMode mode = SearchMode::Strict);

}  // namespace hfo::calib
