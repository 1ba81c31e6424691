#include "support.hpp"

#include "hfo/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace hfo;
using hfo::test::code_of;

namespace {

// Magnitude of the analog Butterworth band-pass prototype evaluated at the
// bilinear image of `f`.
double analog_oracle(double f, double lo, double hi, int order, double fs) {
    auto warp = [fs](double x) { return 2.0 * fs * std::tan(std::numbers::pi * x / fs); };
    const double w = warp(f), wl = warp(lo), wh = warp(hi);
    if (w == 0.0) return 0.0;
    const double x = (w * w - wl * wh) / (w * (wh - wl));
    return 1.0 / std::sqrt(1.0 + std::pow(x, 2 * order));
}

// Direct-form I evaluation of each section in turn.
std::vector<double> direct_form_one(std::span<const double> x, const dsp::FilterCoefficients& c) {
    std::vector<double> y(x.begin(), x.end());
    for (const auto& s : c.sections) {
        double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
        for (auto& v : y) {
            const double out = s.b0 * v + s.b1 * x1 + s.b2 * x2 - s.a1 * y1 - s.a2 * y2;
            x2 = x1;
            x1 = v;
            y2 = y1;
            y1 = out;
            v = out;
        }
    }
    return y;
}

}  // namespace

TEST_CASE("band-pass magnitude matches the analog prototype") {
    for (double fs : {2000.0, dsp::kOversampleRate})
        for (int order : {1, 2, 3, 4}) {
            const auto c = dsp::design_bandpass({250.0, 500.0, order, fs});
            CHECK(c.sections.size() == static_cast<std::size_t>(order));
            for (double f = 10.0; f < std::min(fs / 2.0, 5000.0); f += 37.0)
                CHECK(std::abs(c.response(f)) == doctest::Approx(analog_oracle(f, 250, 500, order, fs)).epsilon(1e-9));
            CHECK(std::abs(c.response(250.0)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
            CHECK(std::abs(c.response(500.0)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
            CHECK(std::abs(c.response(0.0)) < 1e-12);
        }
}

TEST_CASE("band-pass poles lie inside the unit circle") {
    for (double fs : {2000.0, dsp::kOversampleRate})
        for (int order : {1, 2, 4, 6})
            for (const auto& p : dsp::design_bandpass({250.0, 500.0, order, fs}).poles()) CHECK(std::abs(p) < 1.0);
}

TEST_CASE("band edges at or above Nyquist are rejected") {
    CHECK(code_of([] { dsp::design_bandpass({250.0, 1000.0, 2, 2000.0}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { dsp::design_bandpass({250.0, 1200.0, 2, 2000.0}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { dsp::design_bandpass({500.0, 250.0, 2, 2000.0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("streaming cascade equals direct-form I recursion") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 10.0);
    std::vector<double> x(4000);
    for (auto& v : x) v = n(rng);
    const auto c = dsp::design_bandpass({250.0, 500.0, 2, 2000.0});
    const auto y = dsp::filter_signal(x, c);
    const auto oracle = direct_form_one(x, c);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(y[k] == doctest::Approx(oracle[k]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("filtering stops at the first non-finite sample") {
    std::vector<double> x(10, 1.0);
    x[6] = std::nan("");
    CHECK(code_of([&] { dsp::filter_signal(x, dsp::design_bandpass({})); }) == ErrorCode::NonFiniteSample);
}

TEST_CASE("oversampling interpolates onto the exact rational grid") {
    const std::vector<double> x{0.0, 2.0, -4.0, 1.0};
    const auto y = dsp::oversample(x, 2000.0);
    CHECK(y.size() == 70);  // floor(4 * 35000 / 2000)
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double pos = static_cast<double>(k) * 2000.0 / 35000.0;
        const auto i = static_cast<std::size_t>(std::floor(pos));
        const double expect = i >= 3 ? x[3] : x[i] + (pos - i) * (x[i + 1] - x[i]);
        CHECK(y[k] == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
    }
    CHECK(code_of([] { dsp::oversample(std::vector<double>{}, 2000.0); }) == ErrorCode::EmptyInput);
}

TEST_CASE("baseline equals a brute-force quartile mean of window maxima") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 3.0);
    std::vector<double> x(5000);
    for (auto& v : x) v = n(rng);
    const double fs = 2000.0;
    const auto est = dsp::estimate_baseline(x, fs, 1.0, 0.05, 0.5);

    std::vector<double> maxima;
    for (std::size_t s = 0; s < 20; ++s) {
        double m = 0.0;
        for (std::size_t k = 1000 + s * 100; k < 1000 + (s + 1) * 100; ++k) m = std::max(m, std::abs(x[k]));
        maxima.push_back(m);
    }
    std::sort(maxima.begin(), maxima.end());
    const double oracle = (maxima[0] + maxima[1] + maxima[2] + maxima[3] + maxima[4]) / 5.0;
    CHECK(est.amplitude == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(est.sub_window_maxima == maxima);

    std::vector<double> scaled(x), flipped(x);
    for (auto& v : scaled) v *= 3.5;
    for (auto& v : flipped) v = -v;
    CHECK(dsp::estimate_baseline(scaled, fs, 1.0, 0.05, 0.5).amplitude ==
          doctest::Approx(3.5 * est.amplitude).epsilon(1e-12));
    CHECK(dsp::estimate_baseline(flipped, fs, 1.0, 0.05, 0.5).amplitude == est.amplitude);
}

TEST_CASE("baseline needs a full window") {
    std::vector<double> x(1999, 1.0);
    CHECK(code_of([&] { dsp::estimate_baseline(x, 2000.0); }) == ErrorCode::SignalTooShort);
}
