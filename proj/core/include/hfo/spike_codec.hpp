#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hfo/dsp.hpp"

namespace hfo::codec {

enum class Polarity : std::uint8_t { Up, Dn };

const char* to_string(Polarity p);

/// How the modulator's error variable follows the input.
enum class Tracking {
    /// Error accumulates input change since the last reset; it is held at zero
    /// during refractory and changes arriving then are dropped.
    Literal,
    /// Error is input minus the staircase reconstruction; emission is blocked
    /// during refractory but the residual keeps tracking.
    Residual,
};

const char* to_string(Tracking t);
Tracking parse_tracking(const std::string& text);

struct AdmConfig {
    double threshold = 1.0;                          // microvolts
    double refractory = 300e-6;                      // seconds
    double tick = 1.0 / dsp::kOversampleRate;        // seconds
    Tracking tracking = Tracking::Residual;

    void validate() const;
    /// Whole ticks the modulator is blocked after an emission.
    std::int64_t refractory_ticks() const;
};

struct SpikeEvent {
    double time_s = 0.0;
    Polarity polarity = Polarity::Up;

    bool operator==(const SpikeEvent&) const = default;
};

struct SpikeTrain {
    std::vector<SpikeEvent> events;

    std::size_t count(Polarity p) const;
    /// Timestamps of one polarity, in order.
    std::vector<double> times(Polarity p) const;

    bool operator==(const SpikeTrain&) const = default;
};

/// Tick-synchronous delta modulator. One shared error state drives both
/// polarities. Samples are pushed one per tick; the first sample only primes
/// the state.
class AdmEncoder {
public:
    explicit AdmEncoder(AdmConfig cfg, double t0 = 0.0);

    /// Takes effect from the next pushed sample.
    void set_threshold(double threshold);
    const AdmConfig& config() const { return cfg_; }

    void push(double sample, std::vector<SpikeEvent>& out);
    std::int64_t ticks_seen() const { return tick_; }

private:
    AdmConfig cfg_;
    double t0_;
    std::int64_t refractory_ticks_;
    std::int64_t tick_ = 0;
    std::int64_t blocked_until_ = 0;
    bool primed_ = false;
    double prev_ = 0.0;
    double error_ = 0.0;
    double reference_ = 0.0;
};

/// Encodes a signal sampled on the tick grid starting at t0. Throws
/// NonFiniteSample.
SpikeTrain encode(std::span<const double> signal, const AdmConfig& cfg, double t0 = 0.0);

/// Staircase r(t) = initial + threshold * (#UP - #DN) over events at or
/// before t, sampled on the tick grid t0 + k * tick for k < n_ticks.
std::vector<double> decode(const SpikeTrain& train, const AdmConfig& cfg, double initial, std::size_t n_ticks,
                           double t0 = 0.0);

struct UpDnCycle {
    double start = 0.0;
    double end = 0.0;
    std::size_t up_count = 0;
    std::size_t dn_count = 0;

    double length() const { return end - start; }
    bool operator==(const UpDnCycle&) const = default;
};

/// A cycle is a maximal UP run followed by a maximal DN run. Leading DN runs
/// and a trailing unpaired UP run are not cycles.
std::vector<UpDnCycle> segment_cycles(const SpikeTrain& train);

void write_events_csv(const SpikeTrain& train, std::ostream& out);
/// Parses `timestamp_s,polarity`. Throws MalformedHeader with the line number.
SpikeTrain read_events_csv(std::istream& in, const std::string& origin = "<events>");

}  // namespace hfo::codec
