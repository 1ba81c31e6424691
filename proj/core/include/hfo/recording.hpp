#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hfo {

enum class Phase { PreResection, PostResection };

const char* to_string(Phase phase);
Phase parse_phase(const std::string& text);

/// Half-open time range [start_s, end_s) in seconds from recording start.
struct Interval {
    double start_s = 0.0;
    double end_s = 0.0;

    double length() const { return end_s - start_s; }
    bool overlaps(double a, double b) const { return a < end_s && start_s < b; }
};

struct ChannelSignal {
    std::string label;
    std::vector<double> samples;  // microvolts
    bool excluded = false;
    std::vector<Interval> excluded_intervals;
};

/// Multichannel sampled signal. Immutable once constructed; all channels share
/// one sample count.
class Recording {
public:
    Recording(double sample_rate, std::vector<ChannelSignal> channels, std::string patient_id = {},
              Phase phase = Phase::PreResection);

    double sample_rate() const { return sample_rate_; }
    std::size_t sample_count() const { return sample_count_; }
    double duration_s() const { return static_cast<double>(sample_count_) / sample_rate_; }
    std::size_t channel_count() const { return channels_.size(); }
    std::span<const ChannelSignal> channels() const { return channels_; }
    const ChannelSignal& channel(std::size_t i) const { return channels_.at(i); }
    const std::string& patient_id() const { return patient_id_; }
    Phase phase() const { return phase_; }

private:
    double sample_rate_;
    std::vector<ChannelSignal> channels_;
    std::size_t sample_count_ = 0;
    std::string patient_id_;
    Phase phase_;
};

/// Bipolar pairs (anode, cathode) over referential channel indices.
struct MontageMap {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;

    /// Throws InvalidPair for anode == cathode, IndexOutOfRange past channel_count.
    void validate(std::size_t channel_count) const;
};

/// Output channel i = anode - cathode, labelled "<anode>-<cathode>".
Recording apply_bipolar_montage(const Recording& rec, const MontageMap& map);

/// Per-recording metadata kept next to the signal file.
struct Sidecar {
    std::optional<double> sample_rate;
    std::string patient_id;
    Phase phase = Phase::PreResection;
    std::optional<MontageMap> montage;
    std::vector<std::string> excluded;
    std::map<std::string, std::vector<Interval>> excluded_intervals;
};

Sidecar parse_sidecar(const std::string& json_text, const std::string& origin = "<sidecar>");
Sidecar load_sidecar(const std::filesystem::path& path);
std::string serialize_sidecar(const Sidecar& sidecar);

/// Returns a copy of rec with channel exclusion flags and excluded intervals
/// taken from the sidecar (matched by label).
Recording apply_exclusions(const Recording& rec, const Sidecar& sidecar);

enum class RecordingFormat { Csv, Binary };

/// `<stem>.json` next to the signal file.
std::filesystem::path sidecar_path_for(const std::filesystem::path& signal_path);

/// Loads a recording. CSV requires the sidecar (sample rate lives there);
/// for the binary format the sidecar is optional and, when missing, the
/// patient id and phase are parsed from a `<patient>_<pre|post>` file stem.
/// The montage and exclusions from the sidecar are NOT applied here.
Recording load_recording(const std::filesystem::path& path, RecordingFormat format);

/// Loads and applies the sidecar montage and exclusions in one go.
Recording load_prepared_recording(const std::filesystem::path& path, RecordingFormat format);

std::optional<RecordingFormat> format_from_extension(const std::filesystem::path& path);

Recording parse_csv_recording(const std::string& text, double sample_rate, const std::string& origin);
std::vector<char> serialize_binary(const Recording& rec);
Recording parse_binary_recording(std::span<const char> bytes, const std::string& origin);

void save_binary(const Recording& rec, const std::filesystem::path& path);
void save_csv(const Recording& rec, const std::filesystem::path& path);

}  // namespace hfo
