#include "hfo/detector.hpp"

#include "hfo/error.hpp"

#include <algorithm>
#include <cmath>

namespace hfo::detect {

std::vector<HfoEvent> extract_events(std::span<const double> spike_times, double window, double t0,
                                     const std::string& channel) {
    if (!(window > 0.0)) throw Error(ErrorCode::InvalidArgument, "window length must be positive");
    std::vector<HfoEvent> events;
    bool open = false;
    long long last_window = 0;
    for (double t : spike_times) {
        if (t < t0) continue;
        const auto k = static_cast<long long>(std::floor((t - t0) / window));
        if (open && k <= last_window + 1) {
            if (k == last_window + 1) events.back().end = t0 + static_cast<double>(k + 1) * window;
            last_window = std::max(last_window, k);
            ++events.back().n_spikes;
            continue;
        }
        events.push_back({channel, t0 + static_cast<double>(k) * window, t0 + static_cast<double>(k + 1) * window, 1});
        last_window = k;
        open = true;
    }
    return events;
}

std::vector<HfoEvent> extract_events(const snn::SpikeRaster& raster, double window, double t0,
                                     const std::string& channel) {
    const auto pooled = raster.pooled_second_layer();
    return extract_events(pooled, window, t0, channel);
}

std::vector<ChannelRateReport> compute_rates(std::span<const ChannelEvents> channels) {
    std::vector<ChannelRateReport> out;
    out.reserve(channels.size());
    for (const auto& c : channels) {
        if (!(c.analyzed_minutes > 0.0))
            throw Error(ErrorCode::ZeroDuration, "channel '" + c.channel + "' has no analyzed time");
        out.push_back({c.channel, c.n_events, c.analyzed_minutes, static_cast<double>(c.n_events) / c.analyzed_minutes});
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.channel < b.channel; });
    return out;
}

double excluded_length(std::span<const Interval> intervals, double total_s) {
    std::vector<Interval> clipped;
    for (const auto& iv : intervals) {
        const double a = std::max(0.0, iv.start_s);
        const double b = std::min(total_s, iv.end_s);
        if (b > a) clipped.push_back({a, b});
    }
    std::sort(clipped.begin(), clipped.end(), [](const auto& x, const auto& y) { return x.start_s < y.start_s; });
    double total = 0.0, cur_a = 0.0, cur_b = -1.0;
    for (const auto& iv : clipped) {
        if (iv.start_s > cur_b) {
            if (cur_b > cur_a) total += cur_b - cur_a;
            cur_a = iv.start_s;
            cur_b = iv.end_s;
        } else {
            cur_b = std::max(cur_b, iv.end_s);
        }
    }
    if (cur_b > cur_a) total += cur_b - cur_a;
    return total;
}

}  // namespace hfo::detect
