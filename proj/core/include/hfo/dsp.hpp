#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace hfo::dsp {

/// Conversion rate of the spike encoder, in Hz.
inline constexpr double kOversampleRate = 35000.0;

struct FilterSpec {
    double low_hz = 250.0;
    double high_hz = 500.0;
    int order = 2;  // design order: `order` poles per band edge
    double sample_rate = 2000.0;

    void validate() const;
};

/// One second-order section, a0 normalised to 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

struct FilterCoefficients {
    std::vector<Biquad> sections;
    double sample_rate = 0.0;

    /// H(e^{j 2 pi f / fs}) of the whole cascade.
    std::complex<double> response(double freq_hz) const;
    /// Poles of every section (two per section).
    std::vector<std::complex<double>> poles() const;
};

/// Digital Butterworth band-pass via bilinear transform with prewarped band
/// edges, realised as `order` biquads. Unity gain at the geometric centre of
/// the prewarped band.
FilterCoefficients design_bandpass(const FilterSpec& spec);

/// Streaming transposed direct-form II cascade.
class SosFilter {
public:
    explicit SosFilter(FilterCoefficients coeffs);

    double step(double x);
    void reset();

private:
    FilterCoefficients coeffs_;
    std::vector<std::array<double, 2>> state_;
};

/// Causal single-pass filtering from zero state. Throws NonFiniteSample.
std::vector<double> filter_signal(std::span<const double> samples, const FilterCoefficients& coeffs);

/// Linear interpolation onto the grid k / rate_out. Output holds
/// floor(n * rate_out / rate_in) samples; positions past the last input
/// sample hold its value.
std::vector<double> oversample(std::span<const double> samples, double rate_in, double rate_out = kOversampleRate);

struct BaselineEstimate {
    double amplitude = 0.0;                 // microvolts
    double window_start = 0.0;              // seconds
    std::vector<double> sub_window_maxima;  // ascending
};

/// Mean of the lowest quartile of the |x| maxima of consecutive
/// non-overlapping sub-windows inside [window_start, window_start + window_s).
BaselineEstimate estimate_baseline(std::span<const double> filtered, double sample_rate, double window_s = 1.0,
                                   double sub_window_s = 0.05, double window_start = 0.0);

}  // namespace hfo::dsp
