#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hfo/recording.hpp"
#include "hfo/snn.hpp"

namespace hfo::detect {

inline constexpr double kDefaultWindow = 0.015;

struct HfoEvent {
    std::string channel;
    double start = 0.0;
    double end = 0.0;
    std::size_t n_spikes = 0;

    double length() const { return end - start; }
    bool operator==(const HfoEvent&) const = default;
};

/// Tiles time into [t0 + k*w, t0 + (k+1)*w), marks every window holding at
/// least one spike and merges each maximal run of marked windows into one
/// event. `spike_times` must be sorted.
std::vector<HfoEvent> extract_events(std::span<const double> spike_times, double window = kDefaultWindow,
                                     double t0 = 0.0, const std::string& channel = {});

/// Pools every second-layer neuron before windowing.
std::vector<HfoEvent> extract_events(const snn::SpikeRaster& raster, double window = kDefaultWindow, double t0 = 0.0,
                                     const std::string& channel = {});

struct ChannelRateReport {
    std::string channel;
    std::size_t n_events = 0;
    double analyzed_minutes = 0.0;
    double rate = 0.0;  // events per minute

    bool operator==(const ChannelRateReport&) const = default;
};

struct ChannelEvents {
    std::string channel;
    std::size_t n_events = 0;
    double analyzed_minutes = 0.0;
};

/// rate = n_events / analyzed_minutes, sorted by channel label. Throws
/// ZeroDuration.
std::vector<ChannelRateReport> compute_rates(std::span<const ChannelEvents> channels);

/// Total length of `intervals` clipped to [0, total_s], overlaps merged.
double excluded_length(std::span<const Interval> intervals, double total_s);

}  // namespace hfo::detect
