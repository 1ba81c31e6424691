// Acceptance run: one PASS/FAIL line per criterion, then a tally.
// Exits non-zero only when a check could not be carried out at all.

#include "cli.hpp"
#include "hfo/calibration.hpp"
#include "hfo/config_io.hpp"
#include "hfo/detector.hpp"
#include "hfo/dsp.hpp"
#include "hfo/outcome.hpp"
#include "hfo/pipeline.hpp"
#include "hfo/spike_codec.hpp"
#include "hfo/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

using namespace hfo;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

int passed = 0, failed = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Verdict()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < budget_s;
    const bool ok = v.pass && in_time;
    (ok ? passed : failed)++;
    std::printf("%s %d %s: %s; %.2f s (budget %.0f s%s)\n", ok ? "PASS" : "FAIL", id, name, v.detail.c_str(), secs,
                budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// |H| of a biquad cascade at f, evaluated from the coefficients directly.
double cascade_gain(const dsp::FilterCoefficients& c, double f) {
    const std::complex<double> z = std::polar(1.0, 2.0 * std::numbers::pi * f / c.sample_rate);
    const auto zi = 1.0 / z, zi2 = zi * zi;
    std::complex<double> h = 1.0;
    for (const auto& s : c.sections) h *= (s.b0 + s.b1 * zi + s.b2 * zi2) / (1.0 + s.a1 * zi + s.a2 * zi2);
    return std::abs(h);
}

// Analog Butterworth band-pass prototype at the bilinear image of f.
double analog_gain(double f, double lo, double hi, int order, double fs) {
    auto warp = [fs](double x) { return 2.0 * fs * std::tan(std::numbers::pi * x / fs); };
    const double w = warp(f), wl = warp(lo), wh = warp(hi);
    if (w == 0.0) return 0.0;
    const double x = (w * w - wl * wh) / (w * (wh - wl));
    return 1.0 / std::sqrt(1.0 + std::pow(x, 2 * order));
}

// Mark every window holding a spike, then merge runs of marked windows.
std::vector<detect::HfoEvent> mark_and_merge(const std::vector<double>& spikes, double w) {
    std::map<long long, std::size_t> marked;
    for (double t : spikes) ++marked[static_cast<long long>(std::floor(t / w))];
    std::vector<detect::HfoEvent> out;
    long long prev = 0;
    for (auto [k, n] : marked) {
        if (!out.empty() && k == prev + 1) {
            out.back().end = static_cast<double>(k + 1) * w;
            out.back().n_spikes += n;
        } else {
            out.push_back({{}, static_cast<double>(k) * w, static_cast<double>(k + 1) * w, n});
        }
        prev = k;
    }
    return out;
}

// Lower Clopper-Pearson bound by bisection on the binomial upper tail.
double cp_low(std::size_t x, std::size_t n, double alpha) {
    auto tail = [&](double p) {
        double sum = 0.0;
        for (std::size_t k = x; k <= n; ++k)
            sum += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                            (n - k) * std::log1p(-p));
        return sum;
    };
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (tail(mid) >= alpha / 2 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

double median(std::vector<std::size_t> v) {
    if (v.empty()) return NAN;
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? static_cast<double>(v[n / 2]) : 0.5 * static_cast<double>(v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

int main() {
    const auto work = fs::temp_directory_path() / "hfo_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    criterion(1, "filter fidelity", 1.0, [] {
        const dsp::FilterSpec spec{250.0, 500.0, 2, 2000.0};
        const auto c = dsp::design_bandpass(spec);
        const double g250 = cascade_gain(c, 250.0), g500 = cascade_gain(c, 500.0), g0 = cascade_gain(c, 0.0);
        double worst = 0.0;
        for (double f = 1.0; f < 1000.0; f += 1.0)
            worst = std::max(worst, std::abs(cascade_gain(c, f) - analog_gain(f, 250.0, 500.0, 2, 2000.0)));
        const bool ok = g250 >= 0.687 && g250 <= 0.727 && g500 >= 0.687 && g500 <= 0.727 && g0 < 1e-6 && worst < 1e-9;
        return Verdict{ok, fmt("|H(250)|=%.6f |H(500)|=%.6f |H(0)|=%.2e, max deviation from analog prototype %.1e",
                               g250, g500, g0, worst)};
    });

    criterion(2, "ADM properties", 10.0, [] {
        // Band-limited test signals: 250-500 Hz filtered pink noise at random gain,
        // threshold set by the front end's own rule (half the baseline).
        std::size_t bound_ok = 0, isi_ok = 0, anti_ok = 0, overloaded_fail = 0;
        double worst_ratio = 0.0;
        const FrontEndConfig fe;
        for (std::uint64_t s = 0; s < 100; ++s) {
            std::mt19937_64 rng(1000 + s);
            std::uniform_real_distribution<double> gain(1.0, 30.0);
            auto x = synth::pink_noise(4000, 77 + s);
            const double g = gain(rng);
            for (auto& v : x) v *= g;
            const auto band = dsp::filter_signal(x, dsp::design_bandpass({}));
            const auto fast = dsp::oversample(band, 2000.0);
            codec::AdmConfig cfg;
            cfg.threshold = fe.threshold_fraction * dsp::estimate_baseline(band, 2000.0).amplitude;
            const auto train = codec::encode(fast, cfg);

            // Staircase rebuilt here from the event list.
            double level = fast[0], slope = 0.0, err = 0.0;
            std::size_t next = 0;
            for (std::size_t k = 0; k < fast.size(); ++k) {
                const double t = static_cast<double>(k) * cfg.tick;
                while (next < train.events.size() && train.events[next].time_s <= t + 0.5 * cfg.tick)
                    level += train.events[next++].polarity == codec::Polarity::Up ? cfg.threshold : -cfg.threshold;
                err = std::max(err, std::abs(fast[k] - level));
                if (k) slope = std::max(slope, std::abs(fast[k] - fast[k - 1]) / cfg.tick);
            }
            const double bound = cfg.threshold + slope * 300e-6;
            worst_ratio = std::max(worst_ratio, err / bound);
            if (err <= bound) {
                ++bound_ok;
            } else if (slope * static_cast<double>(cfg.refractory_ticks()) * cfg.tick > cfg.threshold) {
                ++overloaded_fail;
            }

            bool isi = true;
            for (std::size_t i = 1; i < train.events.size(); ++i)
                isi &= train.events[i].time_s - train.events[i - 1].time_s >= 300e-6 - cfg.tick - 1e-12;
            isi_ok += isi;

            std::vector<double> neg(fast);
            for (auto& v : neg) v = -v;
            const auto mirrored = codec::encode(neg, cfg);
            bool anti = mirrored.events.size() == train.events.size();
            for (std::size_t i = 0; anti && i < train.events.size(); ++i)
                anti = mirrored.events[i].time_s == train.events[i].time_s &&
                       mirrored.events[i].polarity != train.events[i].polarity;
            anti_ok += anti;
        }
        const bool ok = bound_ok == 100 && isi_ok == 100 && anti_ok == 100;
        return Verdict{ok, fmt("error bound held on %zu/100 (all %zu violations under slope overload, worst "
                               "error/bound %.3f), refractory on %zu/100, antisymmetry on %zu/100",
                               bound_ok, overloaded_fail, worst_ratio, isi_ok, anti_ok)};
    });

    criterion(3, "window concatenation oracle", 5.0, [] {
        std::mt19937_64 rng(2024);
        std::size_t agree = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            std::uniform_int_distribution<int> count(0, 80);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            std::vector<double> s(static_cast<std::size_t>(count(rng)));
            for (auto& t : s) t = u(rng);
            std::sort(s.begin(), s.end());
            agree += detect::extract_events(s) == mark_and_merge(s, detect::kDefaultWindow);
        }
        return Verdict{agree == 1000, fmt("%zu/1000 rasters agree with brute-force mark-and-merge", agree)};
    });

    // Criteria 4 and 5 share the configuration the calibrate command writes.
    std::optional<config::CalibrationFile> calibrated;
    criterion(4, "calibration feasibility", 600.0, [&] {
        const int rc = cli::run({"hfo", "calibrate", "--best-effort", "--out", work.string()});
        if (rc != cli::kOk) return Verdict{false, fmt("hfo calibrate exited %d", rc)};
        calibrated = config::load_calibration(work / "calibration.json");
        // Re-check the stored configuration with full network runs.
        const auto corpus = synth::generate_corpus(11, 11, calibrated->corpus_seed, 8, 5.0);
        const auto snippets = calib::encode_corpus(corpus, calibrated->front_end);
        std::size_t hfo = 0, rejected = 0, gates = 0, quiet = 0;
        for (const auto& s : snippets) {
            const auto o = calib::evaluate_snippet(calibrated->network, s);
            if (s.kind == synth::SnippetKind::Hfo) {
                hfo += o.responded;
                gates += o.gate_opened;
            } else if (s.kind == synth::SnippetKind::Transient) {
                rejected += !o.responded;
            } else {
                quiet += !o.responded;
            }
        }
        const bool ok = hfo == 11 && rejected == 11 && gates == 11;
        return Verdict{ok, fmt("HFO detected %zu/11, transients rejected %zu/11, GI silenced within 3 ms of onset "
                               "%zu/11 (background stretches silent %zu/8; calibrate reported admissible=%s)",
                               hfo, rejected, gates, quiet, calibrated->search.admissible ? "yes" : "no")};
    });

    criterion(5, "end-to-end label soundness", 600.0, [&] {
        if (!calibrated) return Verdict{false, "no calibration available"};
        const auto corpus = synth::generate_corpus(100, 100, 12345);
        const auto snippets = calib::encode_corpus(corpus, calibrated->front_end);
        std::size_t tp = 0, fp = 0;
        for (const auto& s : snippets) {
            const bool r = calib::evaluate_snippet(calibrated->network, s).responded;
            (s.kind == synth::SnippetKind::Hfo ? tp : fp) += r;
        }
        const bool ok = tp >= 95 && fp == 0;
        return Verdict{ok, fmt("held-out corpus (seed 12345): sensitivity %zu%%, transient false positives %zu/100",
                               tp, fp)};
    });

    criterion(6, "outcome table reproduction", 1.0, [] {
        const double pre[] = {3.4, 9.7, 1.3, 11.5, 30, 45, 1.4, 1.9};
        const double post[] = {0.5, 0.5, 0.5, 0.5, 0.5, 13.9, 0.5, 0.5};
        const int ilae[] = {1, 1, 1, 1, 1, 3, 1, 1};
        std::vector<outcome::OutcomeClass> classes;
        for (int i = 0; i < 8; ++i)
            classes.push_back(outcome::make_prediction({"P" + std::to_string(i + 1), ilae[i], 12}, post[i], pre[i]).cls);
        const auto m = outcome::cohort_metrics(classes);
        const double oracle = cp_low(8, 8, 0.05);
        const bool ok = m.tn == 7 && m.tp == 1 && m.fp == 0 && m.fn == 0 && m.accuracy == 1.0 &&
                        std::abs(m.accuracy_ci.low - 0.6306) <= 0.002 && m.accuracy_ci.high == 1.0 &&
                        std::abs(m.accuracy_ci.low - oracle) < 1e-9;
        return Verdict{ok, fmt("TN=%zu TP=%zu FP=%zu FN=%zu accuracy=%.3f CI=[%.4f, %.4f] (tail-scan oracle %.6f)",
                               m.tn, m.tp, m.fp, m.fn, m.accuracy, m.accuracy_ci.low, m.accuracy_ci.high, oracle)};
    });

    criterion(7, "cycle statistics", 30.0, [] {
        const auto snippets = calib::encode_corpus(synth::generate_corpus(11, 11, 1), FrontEndConfig{});
        std::vector<std::size_t> hfo, tr;
        for (const auto& s : snippets) {
            // UP run followed by DN run, counted inside the event's support.
            std::size_t cycles = 0;
            bool in_up = false;
            for (const auto& e : s.train.events) {
                if (!s.has_support() || e.time_s < s.support_start || e.time_s > s.support_end) continue;
                if (e.polarity == codec::Polarity::Up) {
                    in_up = true;
                } else if (in_up) {
                    ++cycles;
                    in_up = false;
                }
            }
            (s.kind == synth::SnippetKind::Hfo ? hfo : tr).push_back(cycles);
        }
        const double mh = median(hfo), mt = median(tr);
        return Verdict{mh >= 4.0 && mt <= 2.0, fmt("median UP-DN cycles: HFO %.1f, transient %.1f", mh, mt)};
    });

    criterion(8, "throughput and worker invariance", 120.0, [] {
        synth::RecordingSpec spec;
        spec.patient_id = "T";
        spec.duration_s = 210.0;
        spec.labels = {"1-2", "2-3", "3-4"};
        spec.hfo_rates_per_min = {10.0, 3.0, 0.0};
        spec.transient_rate_per_min = 3.0;
        spec.seed = 8;
        const auto rec = synth::generate_recording(spec).recording;
        const auto net = snn::NetworkConfig::with_grid();
        const PipelineConfig pc;

        const auto t0 = std::chrono::steady_clock::now();
        const auto single = process_channel(rec.channel(0), rec.sample_rate(), pc, net, 3);
        const double one_channel = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const auto w1 = process_recording(rec, pc, net, 3, 1);
        const auto w3 = process_recording(rec, pc, net, 3, 3);
        bool same = w1[0].raster == single.raster;
        for (std::size_t c = 0; c < 3; ++c) same &= w1[c].raster == w3[c].raster && w1[c].events == w3[c].events;
        const std::size_t neurons = snn::Network(net).dynamic_neuron_count();
        const bool ok = one_channel < 60.0 && same && neurons == 66;
        return Verdict{ok, fmt("3.5 min channel with %zu neurons in %.2f s single-threaded; workers 1 vs 3 %s",
                               neurons, one_channel, same ? "identical" : "DIFFER")};
    });

    std::printf("%d passed, %d failed\n", passed, failed);
    return 0;
}
