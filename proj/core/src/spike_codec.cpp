#include "hfo/spike_codec.hpp"

#include "hfo/error.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

namespace hfo::codec {

const char* to_string(Polarity p) { return p == Polarity::Up ? "UP" : "DN"; }

const char* to_string(Tracking t) { return t == Tracking::Literal ? "literal" : "residual"; }

Tracking parse_tracking(const std::string& text) {
    if (text == "literal") return Tracking::Literal;
    if (text == "residual") return Tracking::Residual;
    throw Error(ErrorCode::InvalidArgument, "unknown tracking mode '" + text + "'");
}

void AdmConfig::validate() const {
    if (!(threshold > 0.0) || !std::isfinite(threshold))
        throw Error(ErrorCode::InvalidArgument, "ADM threshold must be positive");
    if (!(tick > 0.0) || !(tick < refractory))
        throw Error(ErrorCode::InvalidArgument, "ADM tick must be positive and shorter than the refractory period");
}

std::int64_t AdmConfig::refractory_ticks() const {
    // 300 us at 35 kHz is 10.5 ticks; the next emission may come on tick 11.
    return static_cast<std::int64_t>(std::ceil(refractory / tick - 1e-9));
}

std::size_t SpikeTrain::count(Polarity p) const {
    std::size_t n = 0;
    for (const auto& e : events) n += e.polarity == p;
    return n;
}

std::vector<double> SpikeTrain::times(Polarity p) const {
    std::vector<double> out;
    for (const auto& e : events)
        if (e.polarity == p) out.push_back(e.time_s);
    return out;
}

AdmEncoder::AdmEncoder(AdmConfig cfg, double t0) : cfg_(cfg), t0_(t0) {
    cfg_.validate();
    refractory_ticks_ = cfg_.refractory_ticks();
}

void AdmEncoder::set_threshold(double threshold) {
    AdmConfig next = cfg_;
    next.threshold = threshold;
    next.validate();
    cfg_ = next;
}

void AdmEncoder::push(double sample, std::vector<SpikeEvent>& out) {
    const std::int64_t k = tick_++;
    if (!primed_) {
        primed_ = true;
        prev_ = sample;
        reference_ = sample;
        return;
    }
    const bool blocked = k < blocked_until_;
    double e = 0.0;
    if (cfg_.tracking == Tracking::Literal) {
        error_ = blocked ? 0.0 : error_ + (sample - prev_);
        e = error_;
    } else {
        e = sample - reference_;
    }
    prev_ = sample;
    if (blocked) return;

    if (e > cfg_.threshold || e < -cfg_.threshold) {
        const Polarity p = e > 0.0 ? Polarity::Up : Polarity::Dn;
        out.push_back({t0_ + static_cast<double>(k) * cfg_.tick, p});
        reference_ += p == Polarity::Up ? cfg_.threshold : -cfg_.threshold;
        error_ = 0.0;
        blocked_until_ = k + refractory_ticks_;
    }
}

SpikeTrain encode(std::span<const double> signal, const AdmConfig& cfg, double t0) {
    AdmEncoder enc(cfg, t0);
    SpikeTrain train;
    for (std::size_t i = 0; i < signal.size(); ++i) {
        if (!std::isfinite(signal[i]))
            throw Error(ErrorCode::NonFiniteSample, "sample " + std::to_string(i) + " is not finite");
        enc.push(signal[i], train.events);
    }
    return train;
}

std::vector<double> decode(const SpikeTrain& train, const AdmConfig& cfg, double initial, std::size_t n_ticks,
                           double t0) {
    std::vector<double> out(n_ticks);
    std::size_t next = 0;
    double level = initial;
    for (std::size_t k = 0; k < n_ticks; ++k) {
        const double t = t0 + static_cast<double>(k) * cfg.tick;
        // Half-tick slack so events stamped on this tick are counted despite rounding.
        while (next < train.events.size() && train.events[next].time_s <= t + 0.5 * cfg.tick) {
            level += train.events[next].polarity == Polarity::Up ? cfg.threshold : -cfg.threshold;
            ++next;
        }
        out[k] = level;
    }
    return out;
}

std::vector<UpDnCycle> segment_cycles(const SpikeTrain& train) {
    std::vector<UpDnCycle> cycles;
    const auto& ev = train.events;
    std::size_t i = 0;
    while (i < ev.size()) {
        if (ev[i].polarity == Polarity::Dn) {
            ++i;
            continue;
        }
        UpDnCycle c;
        c.start = ev[i].time_s;
        while (i < ev.size() && ev[i].polarity == Polarity::Up) {
            ++c.up_count;
            ++i;
        }
        if (i == ev.size()) break;  // trailing unpaired UP run
        while (i < ev.size() && ev[i].polarity == Polarity::Dn) {
            ++c.dn_count;
            c.end = ev[i].time_s;
            ++i;
        }
        cycles.push_back(c);
    }
    return cycles;
}

void write_events_csv(const SpikeTrain& train, std::ostream& out) {
    out << "timestamp_s,polarity\n";
    char buf[64];
    for (const auto& e : train.events) {
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, e.time_s);
        out.write(buf, p - buf);
        out << ',' << to_string(e.polarity) << '\n';
    }
}

SpikeTrain read_events_csv(std::istream& in, const std::string& origin) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line.rfind("timestamp_s,polarity", 0) != 0)
        throw Error(ErrorCode::MalformedHeader, origin + ":1: expected header 'timestamp_s,polarity'");
    SpikeTrain train;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw Error(ErrorCode::MalformedHeader, origin + ":" + std::to_string(line_no) + ": missing comma");
        SpikeEvent e;
        auto [p, ec] = std::from_chars(line.data(), line.data() + comma, e.time_s);
        if (ec != std::errc{} || p != line.data() + comma)
            throw Error(ErrorCode::MalformedHeader, origin + ":" + std::to_string(line_no) + ": bad timestamp");
        auto pol = line.substr(comma + 1);
        if (pol == "UP")
            e.polarity = Polarity::Up;
        else if (pol == "DN")
            e.polarity = Polarity::Dn;
        else
            throw Error(ErrorCode::MalformedHeader, origin + ":" + std::to_string(line_no) + ": polarity must be UP or DN");
        train.events.push_back(e);
    }
    return train;
}

}  // namespace hfo::codec
