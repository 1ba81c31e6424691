#include "support.hpp"

#include "hfo/pipeline.hpp"
#include "hfo/synth.hpp"

using namespace hfo;
using hfo::test::code_of;

namespace {

Recording short_recording(double seconds = 10.0, std::size_t channels = 3) {
    synth::RecordingSpec spec;
    spec.patient_id = "T";
    spec.duration_s = seconds;
    for (std::size_t c = 0; c < channels; ++c) spec.labels.push_back(std::to_string(c + 1) + "-" + std::to_string(c + 2));
    spec.hfo_rates_per_min.assign(channels, 0.0);
    spec.hfo_rates_per_min[0] = 60.0;
    spec.seed = 21;
    return synth::generate_recording(spec).recording;
}

}  // namespace

TEST_CASE("worker count does not change results") {
    const auto rec = short_recording();
    const auto net = snn::NetworkConfig::with_grid();
    const auto one = process_recording(rec, PipelineConfig{}, net, 5, 1);
    const auto three = process_recording(rec, PipelineConfig{}, net, 5, 3);
    REQUIRE(one.size() == three.size());
    for (std::size_t c = 0; c < one.size(); ++c) {
        CHECK(one[c].raster == three[c].raster);
        CHECK(one[c].events == three[c].events);
    }
}

TEST_CASE("channel seeds follow base seed xor index") {
    const auto rec = short_recording(4.0, 2);
    const auto net = snn::NetworkConfig::with_grid();
    const auto all = process_recording(rec, PipelineConfig{}, net, 40, 1);
    const auto second = process_channel(rec.channel(1), rec.sample_rate(), PipelineConfig{}, net, 40 ^ 1);
    CHECK(all[1].raster == second.raster);
}

TEST_CASE("excluded channels and intervals") {
    const auto base = short_recording(6.0, 2);
    std::vector<ChannelSignal> ch(base.channels().begin(), base.channels().end());
    ch[1].excluded = true;
    ch[0].excluded_intervals = {{0.0, 1.5}, {4.0, 4.5}};
    const Recording rec(base.sample_rate(), ch);
    const auto out = process_recording(rec, PipelineConfig{}, snn::NetworkConfig::with_grid(), 1, 1);
    CHECK(out[1].excluded);
    CHECK(out[1].events.empty());
    CHECK(out[0].analyzed_minutes == doctest::Approx(4.0 / 60.0));
    for (const auto& e : out[0].events) {
        CHECK_FALSE(Interval{0.0, 1.5}.overlaps(e.start, e.end));
        CHECK_FALSE(Interval{4.0, 4.5}.overlaps(e.start, e.end));
    }
}

TEST_CASE("static baseline skips excluded windows and rolling updates each second") {
    const auto rec = short_recording(5.0, 1);
    const auto& x = rec.channel(0).samples;
    FrontEndConfig fe;
    const auto plain = encode_channel(x, 2000.0, fe);
    const std::vector<Interval> first_second{{0.2, 0.4}};
    const auto skipped = encode_channel(x, 2000.0, fe, first_second);
    CHECK(plain.baselines.size() == 1);
    CHECK(skipped.baselines.front() ==
          doctest::Approx(dsp::estimate_baseline(plain.band, dsp::kOversampleRate, 1.0, 0.05, 1.0).amplitude));
    fe.baseline_mode = BaselineMode::Rolling;
    const auto rolling = encode_channel(x, 2000.0, fe);
    CHECK(rolling.baselines.size() == 5);
    CHECK(rolling.baselines[0] == plain.baselines[0]);
    CHECK(rolling.baselines[1] == plain.baselines[0]);
}

TEST_CASE("channels shorter than the baseline window are rejected") {
    std::vector<double> x(1000, 0.5);
    CHECK(code_of([&] { encode_channel(x, 2000.0, FrontEndConfig{}); }) == ErrorCode::SignalTooShort);
}
