#include "support.hpp"

#include "hfo/recording.hpp"

#include <cstring>
#include <fstream>

using namespace hfo;
using hfo::test::code_of;

namespace {

Recording two_channel(double scale = 1.0) {
    std::vector<ChannelSignal> ch(3);
    for (std::size_t c = 0; c < 3; ++c) {
        ch[c].label = std::to_string(c + 1);
        for (int k = 0; k < 50; ++k) ch[c].samples.push_back(scale * (0.25 * k - 3.0 * c + (k % 7) * 0.5));
    }
    return Recording(2000.0, std::move(ch), "P1", Phase::PreResection);
}

template <class T>
void le(std::vector<char>& out, T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));  // host is little-endian
}

}  // namespace

TEST_CASE("recording rejects channels of unequal length") {
    std::vector<ChannelSignal> ch(2);
    ch[0] = {"a", {1, 2, 3}};
    ch[1] = {"b", {1, 2}};
    CHECK(code_of([&] { Recording(2000.0, ch); }) == ErrorCode::ChannelLengthMismatch);
}

TEST_CASE("bipolar montage subtracts cathode from anode and labels the pair") {
    const auto rec = two_channel();
    const auto bip = apply_bipolar_montage(rec, MontageMap{{{0, 1}, {1, 2}}});
    REQUIRE(bip.channel_count() == 2);
    CHECK(bip.channel(0).label == "1-2");
    CHECK(bip.channel(1).label == "2-3");
    for (std::size_t k = 0; k < rec.sample_count(); ++k) {
        CHECK(bip.channel(0).samples[k] == rec.channel(0).samples[k] - rec.channel(1).samples[k]);
        CHECK(bip.channel(1).samples[k] == rec.channel(1).samples[k] - rec.channel(2).samples[k]);
    }
}

TEST_CASE("bipolar montage is linear in the input") {
    const double a = -2.5;
    const auto x = apply_bipolar_montage(two_channel(), MontageMap{{{0, 2}, {2, 1}}});
    const auto ax = apply_bipolar_montage(two_channel(a), MontageMap{{{0, 2}, {2, 1}}});
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < x.sample_count(); ++k)
            CHECK(ax.channel(c).samples[k] == doctest::Approx(a * x.channel(c).samples[k]).epsilon(1e-12));
}

TEST_CASE("montage pair errors") {
    const auto rec = two_channel();
    CHECK(code_of([&] { apply_bipolar_montage(rec, MontageMap{{{0, 0}}}); }) == ErrorCode::InvalidPair);
    CHECK(code_of([&] { apply_bipolar_montage(rec, MontageMap{{{0, 3}}}); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("binary layout matches a hand-assembled byte stream") {
    std::vector<ChannelSignal> ch(2);
    ch[0] = {"A1", {1.5, -2.0}};
    ch[1] = {"B", {0.25, 8.0}};
    const Recording rec(2000.0, ch);

    std::vector<char> expected{'H', 'F', 'O', '1'};
    le<std::uint32_t>(expected, 2);
    le<double>(expected, 2000.0);
    le<std::uint64_t>(expected, 2);
    le<std::uint32_t>(expected, 2);
    expected.push_back('A');
    expected.push_back('1');
    le<std::uint32_t>(expected, 1);
    expected.push_back('B');
    for (float f : {1.5f, -2.0f, 0.25f, 8.0f}) le<float>(expected, f);

    CHECK(serialize_binary(rec) == expected);
    const auto back = parse_binary_recording(expected, "bytes");
    CHECK(back.channel(0).label == "A1");
    CHECK(back.channel(1).samples == std::vector<double>{0.25, 8.0});
}

TEST_CASE("binary round trip is bit-exact for f32-representable samples") {
    std::vector<ChannelSignal> ch(2);
    std::mt19937_64 rng(3);
    std::normal_distribution<float> n(0.0f, 40.0f);
    for (auto& c : ch) {
        c.label = "x" + std::to_string(&c - ch.data());
        for (int k = 0; k < 1000; ++k) c.samples.push_back(n(rng));
    }
    const Recording rec(2000.0, ch);
    const auto bytes = serialize_binary(rec);
    const auto back = parse_binary_recording(bytes, "bytes");
    CHECK(serialize_binary(back) == bytes);
    for (std::size_t c = 0; c < 2; ++c) CHECK(back.channel(c).samples == rec.channel(c).samples);
}

TEST_CASE("binary parser reports malformed streams") {
    auto bytes = serialize_binary(two_channel());
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK(code_of([&] { parse_binary_recording(bad_magic, "m"); }) == ErrorCode::MalformedHeader);
    auto short_block = bytes;
    short_block.resize(short_block.size() - 4);
    CHECK(code_of([&] { parse_binary_recording(short_block, "s"); }) == ErrorCode::ChannelLengthMismatch);
    auto ragged = bytes;
    ragged.pop_back();
    CHECK(code_of([&] { parse_binary_recording(ragged, "r"); }) == ErrorCode::UnsupportedEncoding);
    std::vector<char> truncated(bytes.begin(), bytes.begin() + 10);
    CHECK(code_of([&] { parse_binary_recording(truncated, "t"); }) == ErrorCode::MalformedHeader);
}

TEST_CASE("csv parser") {
    const auto rec = parse_csv_recording("time,a,b\n0,1,2\n0.0005,3,4\n", 2000.0, "c.csv");
    CHECK(rec.channel_count() == 2);
    CHECK(rec.channel(1).samples == std::vector<double>{2, 4});
    CHECK(code_of([] { parse_csv_recording("t,a\n0,1\n", 2000.0, "c"); }) == ErrorCode::MalformedHeader);
    CHECK(code_of([] { parse_csv_recording("time,a,b\n0,1\n", 2000.0, "c"); }) == ErrorCode::ChannelLengthMismatch);
    CHECK(code_of([] { parse_csv_recording("time,a\n0,abc\n", 2000.0, "c"); }) == ErrorCode::UnsupportedEncoding);
}

TEST_CASE("sidecar exclusions and montage are applied by the prepared loader") {
    const auto dir = hfo::test::scratch_dir("sidecar");
    const auto file = dir / "P9_post.hfo1";
    save_binary(two_channel(), file);
    std::ofstream(dir / "P9_post.json") << R"({"sample_rate": 2000, "patient_id": "P9", "phase": "post",
        "montage": [[0,1],[1,2]], "excluded": ["2-3"], "excluded_intervals": {"1-2": [[0.001, 0.002]]}})";
    const auto rec = load_prepared_recording(file, RecordingFormat::Binary);
    CHECK(rec.patient_id() == "P9");
    CHECK(rec.phase() == Phase::PostResection);
    REQUIRE(rec.channel_count() == 2);
    CHECK_FALSE(rec.channel(0).excluded);
    CHECK(rec.channel(1).excluded);
    REQUIRE(rec.channel(0).excluded_intervals.size() == 1);
    CHECK(rec.channel(0).excluded_intervals[0].end_s == 0.002);
}

TEST_CASE("binary without sidecar takes patient and phase from the stem") {
    const auto dir = hfo::test::scratch_dir("stem");
    save_binary(two_channel(), dir / "P3_pre.hfo1");
    const auto rec = load_recording(dir / "P3_pre.hfo1", RecordingFormat::Binary);
    CHECK(rec.patient_id() == "P3");
    CHECK(rec.phase() == Phase::PreResection);
}

TEST_CASE("csv recordings need a sidecar") {
    const auto dir = hfo::test::scratch_dir("csv_sidecar");
    save_csv(two_channel(), dir / "r.csv");
    std::filesystem::remove(dir / "r.json");
    CHECK(code_of([&] { load_recording(dir / "r.csv", RecordingFormat::Csv); }) == ErrorCode::MalformedHeader);
}
