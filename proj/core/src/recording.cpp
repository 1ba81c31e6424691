#include "hfo/recording.hpp"

#include "hfo/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hfo {

using json = nlohmann::json;

const char* to_string(Phase phase) {
    return phase == Phase::PreResection ? "pre" : "post";
}

Phase parse_phase(const std::string& text) {
    if (text == "pre" || text == "PreResection") return Phase::PreResection;
    if (text == "post" || text == "PostResection") return Phase::PostResection;
    throw Error(ErrorCode::InvalidArgument, "unknown phase '" + text + "'");
}

Recording::Recording(double sample_rate, std::vector<ChannelSignal> channels, std::string patient_id,
                     Phase phase)
    : sample_rate_(sample_rate), channels_(std::move(channels)), patient_id_(std::move(patient_id)), phase_(phase) {
    if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_))
        throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
    if (!channels_.empty()) sample_count_ = channels_.front().samples.size();
    for (const auto& ch : channels_) {
        if (ch.samples.size() != sample_count_)
            throw Error(ErrorCode::ChannelLengthMismatch,
                        "channel '" + ch.label + "' has " + std::to_string(ch.samples.size()) + " samples, expected " +
                            std::to_string(sample_count_));
    }
}

void MontageMap::validate(std::size_t channel_count) const {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto [a, c] = pairs[i];
        if (a == c) throw Error(ErrorCode::InvalidPair, "pair " + std::to_string(i) + " references channel twice");
        if (a >= channel_count || c >= channel_count)
            throw Error(ErrorCode::IndexOutOfRange, "pair " + std::to_string(i) + " exceeds channel count " +
                                                        std::to_string(channel_count));
    }
}

Recording apply_bipolar_montage(const Recording& rec, const MontageMap& map) {
    map.validate(rec.channel_count());
    std::vector<ChannelSignal> out;
    out.reserve(map.pairs.size());
    for (auto [a, c] : map.pairs) {
        const auto& anode = rec.channel(a);
        const auto& cathode = rec.channel(c);
        ChannelSignal ch;
        ch.label = anode.label + "-" + cathode.label;
        ch.samples.resize(rec.sample_count());
        for (std::size_t i = 0; i < ch.samples.size(); ++i) ch.samples[i] = anode.samples[i] - cathode.samples[i];
        ch.excluded = anode.excluded || cathode.excluded;
        out.push_back(std::move(ch));
    }
    return Recording(rec.sample_rate(), std::move(out), rec.patient_id(), rec.phase());
}

// ---------------------------------------------------------------------------
// Sidecar

Sidecar parse_sidecar(const std::string& json_text, const std::string& origin) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedHeader,
                    origin + ": invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::MalformedHeader, origin + ": sidecar must be a JSON object");

    Sidecar s;
    try {
        if (j.contains("sample_rate")) s.sample_rate = j.at("sample_rate").get<double>();
        s.patient_id = j.value("patient_id", std::string{});
        s.phase = parse_phase(j.value("phase", std::string{"pre"}));
        if (j.contains("montage")) {
            MontageMap m;
            for (const auto& p : j.at("montage")) {
                if (!p.is_array() || p.size() != 2)
                    throw Error(ErrorCode::MalformedHeader, origin + ": montage entries must be [anode, cathode]");
                m.pairs.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
            }
            s.montage = std::move(m);
        }
        if (j.contains("excluded")) s.excluded = j.at("excluded").get<std::vector<std::string>>();
        if (j.contains("excluded_intervals")) {
            for (const auto& [label, ranges] : j.at("excluded_intervals").items()) {
                auto& dst = s.excluded_intervals[label];
                for (const auto& r : ranges) {
                    if (!r.is_array() || r.size() != 2)
                        throw Error(ErrorCode::MalformedHeader, origin + ": interval must be [start, end]");
                    Interval iv{r[0].get<double>(), r[1].get<double>()};
                    if (!(iv.end_s > iv.start_s))
                        throw Error(ErrorCode::MalformedHeader, origin + ": empty interval for '" + label + "'");
                    dst.push_back(iv);
                }
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedHeader, origin + ": " + e.what());
    }
    if (s.sample_rate && !(*s.sample_rate > 0.0))
        throw Error(ErrorCode::MalformedHeader, origin + ": sample_rate must be positive");
    return s;
}

Sidecar load_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open sidecar " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_sidecar(ss.str(), path.string());
}

std::string serialize_sidecar(const Sidecar& s) {
    json j;
    if (s.sample_rate) j["sample_rate"] = *s.sample_rate;
    j["patient_id"] = s.patient_id;
    j["phase"] = to_string(s.phase);
    if (s.montage) {
        json pairs = json::array();
        for (auto [a, c] : s.montage->pairs) pairs.push_back({a, c});
        j["montage"] = pairs;
    }
    j["excluded"] = s.excluded;
    json iv = json::object();
    for (const auto& [label, ranges] : s.excluded_intervals) {
        json arr = json::array();
        for (const auto& r : ranges) arr.push_back({r.start_s, r.end_s});
        iv[label] = arr;
    }
    j["excluded_intervals"] = iv;
    return j.dump(2);
}

Recording apply_exclusions(const Recording& rec, const Sidecar& sidecar) {
    std::vector<ChannelSignal> channels(rec.channels().begin(), rec.channels().end());
    for (auto& ch : channels) {
        if (std::find(sidecar.excluded.begin(), sidecar.excluded.end(), ch.label) != sidecar.excluded.end())
            ch.excluded = true;
        if (auto it = sidecar.excluded_intervals.find(ch.label); it != sidecar.excluded_intervals.end())
            ch.excluded_intervals = it->second;
    }
    return Recording(rec.sample_rate(), std::move(channels), rec.patient_id(), rec.phase());
}

std::filesystem::path sidecar_path_for(const std::filesystem::path& signal_path) {
    auto p = signal_path;
    p.replace_extension(".json");
    return p;
}

std::optional<RecordingFormat> format_from_extension(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    if (ext == ".csv") return RecordingFormat::Csv;
    if (ext == ".hfo1" || ext == ".bin") return RecordingFormat::Binary;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

Recording parse_csv_recording(const std::string& text, double sample_rate, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedHeader, origin + ": empty file");
    ++line_no;
    auto header = split_commas(trim(line));
    if (header.size() < 2 || trim(header[0]) != "time")
        throw Error(ErrorCode::MalformedHeader, origin + ":1: header must be 'time,<label1>,...'");

    std::vector<ChannelSignal> channels(header.size() - 1);
    for (std::size_t c = 0; c + 1 < header.size(); ++c) {
        channels[c].label = std::string(trim(header[c + 1]));
        if (channels[c].label.empty())
            throw Error(ErrorCode::MalformedHeader, origin + ":1: empty channel label in column " + std::to_string(c + 2));
    }

    while (std::getline(in, line)) {
        ++line_no;
        auto row = trim(line);
        if (row.empty()) continue;
        auto cells = split_commas(row);
        if (cells.size() > header.size())
            throw Error(ErrorCode::MalformedHeader, origin + ":" + std::to_string(line_no) + ": too many columns");
        for (std::size_t c = 1; c < cells.size(); ++c) {
            auto cell = trim(cells[c]);
            if (cell.empty()) continue;  // ragged row: this channel ended earlier
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || ptr != cell.data() + cell.size())
                throw Error(ErrorCode::UnsupportedEncoding, origin + ":" + std::to_string(line_no) +
                                                                ": cannot parse sample '" + std::string(cell) + "'");
            auto& ch = channels[c - 1];
            if (ch.samples.size() + 2 != line_no)
                throw Error(ErrorCode::ChannelLengthMismatch, origin + ":" + std::to_string(line_no) + ": channel '" +
                                                                  ch.label + "' has a gap before this row");
            ch.samples.push_back(v);
        }
    }
    std::size_t n = channels.front().samples.size();
    for (const auto& ch : channels) {
        if (ch.samples.size() != n)
            throw Error(ErrorCode::ChannelLengthMismatch,
                        origin + ":" + std::to_string(std::min(ch.samples.size(), n) + 2) + ": channel '" + ch.label +
                            "' has " + std::to_string(ch.samples.size()) + " samples, first channel has " +
                            std::to_string(n));
    }
    return Recording(sample_rate, std::move(channels));
}

void save_csv(const Recording& rec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << "time";
    for (const auto& ch : rec.channels()) out << ',' << ch.label;
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < rec.sample_count(); ++i) {
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, static_cast<double>(i) / rec.sample_rate());
        out.write(buf, p - buf);
        for (const auto& ch : rec.channels()) {
            auto [q, ec2] = std::to_chars(buf, buf + sizeof buf, ch.samples[i]);
            out << ',';
            out.write(buf, q - buf);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Binary ("HFO1", little-endian)

namespace {

template <typename T>
void put_le(std::vector<char>& out, T value) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    auto bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class ByteReader {
public:
    ByteReader(std::span<const char> bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

    template <typename T>
    T get(const char* what) {
        using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
        need(sizeof(T), what);
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            bits |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return std::bit_cast<T>(bits);
    }

    std::string_view take(std::size_t n, const char* what) {
        need(n, what);
        std::string_view s(bytes_.data() + pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    [[noreturn]] void fail(ErrorCode code, const std::string& msg) const {
        throw Error(code, origin_ + " @ byte " + std::to_string(pos_) + ": " + msg);
    }

private:
    void need(std::size_t n, const char* what) const {
        if (remaining() < n) fail(ErrorCode::MalformedHeader, std::string("truncated while reading ") + what);
    }

    std::span<const char> bytes_;
    std::string origin_;
    std::size_t pos_ = 0;
};

constexpr char kMagic[4] = {'H', 'F', 'O', '1'};

}  // namespace

std::vector<char> serialize_binary(const Recording& rec) {
    std::vector<char> out(kMagic, kMagic + 4);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.channel_count()));
    put_le<double>(out, rec.sample_rate());
    put_le<std::uint64_t>(out, rec.sample_count());
    for (const auto& ch : rec.channels()) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ch.label.size()));
        out.insert(out.end(), ch.label.begin(), ch.label.end());
    }
    out.reserve(out.size() + rec.channel_count() * rec.sample_count() * 4);
    for (const auto& ch : rec.channels())
        for (double v : ch.samples) put_le<float>(out, static_cast<float>(v));
    return out;
}

Recording parse_binary_recording(std::span<const char> bytes, const std::string& origin) {
    ByteReader r(bytes, origin);
    auto magic = r.take(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0) r.fail(ErrorCode::MalformedHeader, "bad magic, expected HFO1");
    auto n_channels = r.get<std::uint32_t>("channel count");
    auto rate = r.get<double>("sample rate");
    auto n_samples = r.get<std::uint64_t>("sample count");
    if (n_channels == 0) r.fail(ErrorCode::MalformedHeader, "zero channels");
    if (!(rate > 0.0) || !std::isfinite(rate)) r.fail(ErrorCode::MalformedHeader, "sample rate must be positive");

    std::vector<ChannelSignal> channels(n_channels);
    for (auto& ch : channels) {
        auto len = r.get<std::uint32_t>("label length");
        ch.label = std::string(r.take(len, "label"));
    }
    std::uint64_t expected = static_cast<std::uint64_t>(n_channels) * n_samples * 4;
    if (r.remaining() != expected) {
        if (r.remaining() % 4 != 0) r.fail(ErrorCode::UnsupportedEncoding, "sample block is not a whole number of f32");
        r.fail(ErrorCode::ChannelLengthMismatch, "sample block holds " + std::to_string(r.remaining() / 4) +
                                                     " values, header declares " + std::to_string(expected / 4));
    }
    for (auto& ch : channels) {
        ch.samples.resize(n_samples);
        for (auto& v : ch.samples) {
            float f = r.get<float>("sample");
            if (!std::isfinite(f)) r.fail(ErrorCode::UnsupportedEncoding, "non-finite sample in channel " + ch.label);
            v = f;
        }
    }
    return Recording(rate, std::move(channels));
}

void save_binary(const Recording& rec, const std::filesystem::path& path) {
    auto bytes = serialize_binary(rec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------

namespace {

std::string read_file(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::pair<std::string, Phase> identity_from_stem(const std::filesystem::path& path) {
    auto stem = path.stem().string();
    auto us = stem.rfind('_');
    if (us != std::string::npos) {
        auto suffix = stem.substr(us + 1);
        if (suffix == "pre" || suffix == "post") return {stem.substr(0, us), parse_phase(suffix)};
    }
    return {stem, Phase::PreResection};
}

Recording with_identity(Recording rec, std::string patient, Phase phase) {
    std::vector<ChannelSignal> channels(rec.channels().begin(), rec.channels().end());
    return Recording(rec.sample_rate(), std::move(channels), std::move(patient), phase);
}

}  // namespace

Recording load_recording(const std::filesystem::path& path, RecordingFormat format) {
    auto sidecar_file = sidecar_path_for(path);
    std::optional<Sidecar> sidecar;
    if (std::filesystem::exists(sidecar_file)) sidecar = load_sidecar(sidecar_file);

    if (format == RecordingFormat::Csv) {
        if (!sidecar || !sidecar->sample_rate)
            throw Error(ErrorCode::MalformedHeader, path.string() + ": CSV recordings need a sidecar with sample_rate");
        auto rec = parse_csv_recording(read_file(path), *sidecar->sample_rate, path.string());
        return with_identity(std::move(rec), sidecar->patient_id, sidecar->phase);
    }

    auto bytes = read_file(path, std::ios::in | std::ios::binary);
    auto rec = parse_binary_recording(bytes, path.string());
    if (sidecar) {
        if (sidecar->sample_rate && *sidecar->sample_rate != rec.sample_rate())
            throw Error(ErrorCode::MalformedHeader, path.string() + ": sidecar sample_rate disagrees with header");
        return with_identity(std::move(rec), sidecar->patient_id, sidecar->phase);
    }
    auto [patient, phase] = identity_from_stem(path);
    return with_identity(std::move(rec), patient, phase);
}

Recording load_prepared_recording(const std::filesystem::path& path, RecordingFormat format) {
    auto rec = load_recording(path, format);
    auto sidecar_file = sidecar_path_for(path);
    if (!std::filesystem::exists(sidecar_file)) return rec;
    auto sidecar = load_sidecar(sidecar_file);
    if (sidecar.montage) rec = apply_bipolar_montage(rec, *sidecar.montage);
    return apply_exclusions(rec, sidecar);
}

}  // namespace hfo
