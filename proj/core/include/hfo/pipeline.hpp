#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hfo/detector.hpp"
#include "hfo/dsp.hpp"
#include "hfo/recording.hpp"
#include "hfo/snn.hpp"
#include "hfo/spike_codec.hpp"

namespace hfo {

enum class BaselineMode { Static, Rolling };

const char* to_string(BaselineMode m);
BaselineMode parse_baseline_mode(const std::string& text);

/// Everything between a wideband channel and its spike train.
struct FrontEndConfig {
    double low_hz = 250.0;
    double high_hz = 500.0;
    int filter_order = 2;
    /// Filter at 35 kHz after oversampling instead of at the native rate.
    bool oversample_first = false;
    BaselineMode baseline_mode = BaselineMode::Static;
    double baseline_window_s = 1.0;
    double baseline_subwindow_s = 0.05;
    double threshold_fraction = 0.5;
    double refractory = 300e-6;
    codec::Tracking tracking = codec::Tracking::Residual;
};

struct EncodedChannel {
    std::vector<double> band;       // filtered signal at 35 kHz
    std::vector<double> baselines;  // one per applied window (a single entry when static)
    codec::SpikeTrain train;
    double duration_s = 0.0;
};

/// Filter, oversample, estimate the baseline and encode one channel.
/// Baseline windows overlapping `excluded` are skipped.
EncodedChannel encode_channel(std::span<const double> samples, double sample_rate, const FrontEndConfig& cfg,
                              std::span<const Interval> excluded = {});

struct PipelineConfig {
    FrontEndConfig front_end;
    double window_s = detect::kDefaultWindow;
};

struct ChannelResult {
    std::string label;
    bool excluded = false;
    double baseline_uv = 0.0;
    std::size_t n_input_spikes = 0;
    snn::SpikeRaster raster;
    std::vector<detect::HfoEvent> events;
    double analyzed_minutes = 0.0;
};

/// Runs one channel end to end. Events overlapping excluded intervals are
/// dropped and those intervals are removed from the analyzed duration.
ChannelResult process_channel(const ChannelSignal& channel, double sample_rate, const PipelineConfig& cfg,
                              const snn::NetworkConfig& net, std::uint64_t seed);

/// Channels run on `workers` threads; channel i uses seed base_seed ^ i.
/// Excluded channels are reported but not processed.
std::vector<ChannelResult> process_recording(const Recording& rec, const PipelineConfig& cfg,
                                             const snn::NetworkConfig& net, std::uint64_t base_seed,
                                             std::size_t workers = 1);

}  // namespace hfo
