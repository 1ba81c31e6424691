#include "hfo/dsp.hpp"

#include "hfo/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace hfo::dsp {

using cplx = std::complex<double>;

void FilterSpec::validate() const {
    if (!(sample_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "filter sample rate must be positive");
    if (order < 1 || order > 8) throw Error(ErrorCode::InvalidArgument, "filter order must be in [1, 8]");
    if (!(low_hz > 0.0) || !(low_hz < high_hz))
        throw Error(ErrorCode::InvalidArgument, "band edges must satisfy 0 < low < high");
    if (!(high_hz < sample_rate / 2.0))
        throw Error(ErrorCode::InvalidArgument, "band edge at or above Nyquist (" + std::to_string(sample_rate / 2.0) + " Hz)");
}

std::complex<double> FilterCoefficients::response(double freq_hz) const {
    cplx z1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate);  // z^-1
    cplx z2 = z1 * z1;
    cplx h{1.0, 0.0};
    for (const auto& s : sections) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    return h;
}

std::vector<std::complex<double>> FilterCoefficients::poles() const {
    std::vector<cplx> out;
    for (const auto& s : sections) {
        // z^2 + a1 z + a2 = 0
        cplx disc = std::sqrt(cplx(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
        out.push_back((-s.a1 + disc) / 2.0);
        out.push_back((-s.a1 - disc) / 2.0);
    }
    return out;
}

FilterCoefficients design_bandpass(const FilterSpec& spec) {
    spec.validate();
    const int n = spec.order;
    const double fs2 = 2.0 * spec.sample_rate;
    const double wl = fs2 * std::tan(std::numbers::pi * spec.low_hz / spec.sample_rate);
    const double wh = fs2 * std::tan(std::numbers::pi * spec.high_hz / spec.sample_rate);
    const double bw = wh - wl;
    const double w0 = std::sqrt(wl * wh);

    // Analog low-pass prototype -> band-pass -> bilinear.
    std::vector<cplx> upper;  // poles with Im > 0, one per conjugate pair
    std::vector<double> real_poles;
    for (int k = 1; k <= n; ++k) {
        cplx proto = std::polar(1.0, std::numbers::pi * (2.0 * k + n - 1) / (2.0 * n));
        cplx half = proto * bw / 2.0;
        cplx root = std::sqrt(half * half - w0 * w0);
        for (cplx s : {half + root, half - root}) {
            cplx z = (fs2 + s) / (fs2 - s);
            if (z.imag() > 1e-12)
                upper.push_back(z);
            else if (std::abs(z.imag()) <= 1e-12)
                real_poles.push_back(z.real());
        }
    }
    std::sort(upper.begin(), upper.end(), [](cplx a, cplx b) { return std::arg(a) < std::arg(b); });
    std::sort(real_poles.begin(), real_poles.end());

    FilterCoefficients out;
    out.sample_rate = spec.sample_rate;
    for (cplx z : upper) out.sections.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
    for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2)
        out.sections.push_back({1.0, 0.0, -1.0, -(real_poles[i] + real_poles[i + 1]), real_poles[i] * real_poles[i + 1]});

    // Unity gain at the digital image of the analog centre frequency.
    const double f_centre = spec.sample_rate / std::numbers::pi * std::atan(w0 / fs2);
    const double g = std::pow(1.0 / std::abs(out.response(f_centre)), 1.0 / static_cast<double>(out.sections.size()));
    for (auto& s : out.sections) {
        s.b0 *= g;
        s.b1 *= g;
        s.b2 *= g;
    }
    return out;
}

SosFilter::SosFilter(FilterCoefficients coeffs) : coeffs_(std::move(coeffs)), state_(coeffs_.sections.size()) {
    reset();
}

void SosFilter::reset() {
    for (auto& s : state_) s = {0.0, 0.0};
}

double SosFilter::step(double x) {
    for (std::size_t i = 0; i < coeffs_.sections.size(); ++i) {
        const auto& c = coeffs_.sections[i];
        auto& w = state_[i];
        double y = c.b0 * x + w[0];
        w[0] = c.b1 * x - c.a1 * y + w[1];
        w[1] = c.b2 * x - c.a2 * y;
        x = y;
    }
    return x;
}

std::vector<double> filter_signal(std::span<const double> samples, const FilterCoefficients& coeffs) {
    SosFilter f(coeffs);
    std::vector<double> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i]))
            throw Error(ErrorCode::NonFiniteSample, "sample " + std::to_string(i) + " is not finite");
        out[i] = f.step(samples[i]);
    }
    return out;
}

std::vector<double> oversample(std::span<const double> samples, double rate_in, double rate_out) {
    if (samples.empty()) throw Error(ErrorCode::EmptyInput, "cannot oversample an empty signal");
    if (!(rate_in > 0.0) || !(rate_out >= rate_in))
        throw Error(ErrorCode::InvalidArgument, "oversampling needs 0 < rate_in <= rate_out");

    const std::size_t n = samples.size();
    const auto last = n - 1;

    // Integer rates: positions k * rate_in / rate_out are exact rationals.
    const bool integral = rate_in == std::floor(rate_in) && rate_out == std::floor(rate_out) && rate_out < 1e12;
    if (integral) {
        const auto num = static_cast<std::uint64_t>(rate_in);
        const auto den = static_cast<std::uint64_t>(rate_out);
        const std::uint64_t count = static_cast<std::uint64_t>(n) * den / num;
        std::vector<double> out(count);
        for (std::uint64_t k = 0; k < count; ++k) {
            const std::uint64_t p = k * num;
            const std::uint64_t idx = p / den;
            const std::uint64_t rem = p % den;
            if (idx >= last) {
                out[k] = samples[last];
            } else if (rem == 0) {
                out[k] = samples[idx];
            } else {
                const double frac = static_cast<double>(rem) / static_cast<double>(den);
                out[k] = samples[idx] + frac * (samples[idx + 1] - samples[idx]);
            }
        }
        return out;
    }

    const auto count = static_cast<std::size_t>(std::floor(static_cast<double>(n) * rate_out / rate_in));
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double pos = static_cast<double>(k) * rate_in / rate_out;
        const auto idx = static_cast<std::size_t>(pos);
        if (idx >= last) {
            out[k] = samples[last];
        } else {
            const double frac = pos - static_cast<double>(idx);
            out[k] = samples[idx] + frac * (samples[idx + 1] - samples[idx]);
        }
    }
    return out;
}

BaselineEstimate estimate_baseline(std::span<const double> filtered, double sample_rate, double window_s,
                                   double sub_window_s, double window_start) {
    if (!(window_s > 0.0) || !(sub_window_s > 0.0) || sub_window_s > window_s)
        throw Error(ErrorCode::InvalidArgument, "baseline needs 0 < sub_window <= window");
    const auto window = static_cast<std::size_t>(std::llround(window_s * sample_rate));
    const auto sub = static_cast<std::size_t>(std::llround(sub_window_s * sample_rate));
    const auto first = static_cast<std::size_t>(std::llround(window_start * sample_rate));
    if (sub == 0 || first + window > filtered.size())
        throw Error(ErrorCode::SignalTooShort, "baseline window needs " + std::to_string(window) +
                                                   " samples from offset " + std::to_string(first) + ", have " +
                                                   std::to_string(filtered.size()));

    const std::size_t n_sub = window / sub;
    BaselineEstimate est;
    est.window_start = window_start;
    est.sub_window_maxima.reserve(n_sub);
    for (std::size_t s = 0; s < n_sub; ++s) {
        auto seg = filtered.subspan(first + s * sub, sub);
        double m = 0.0;
        for (double v : seg) m = std::max(m, std::abs(v));
        est.sub_window_maxima.push_back(m);
    }
    std::sort(est.sub_window_maxima.begin(), est.sub_window_maxima.end());
    const std::size_t q = std::max<std::size_t>(1, n_sub / 4);
    est.amplitude = std::accumulate(est.sub_window_maxima.begin(), est.sub_window_maxima.begin() + q, 0.0) /
                    static_cast<double>(q);
    return est;
}

}  // namespace hfo::dsp
