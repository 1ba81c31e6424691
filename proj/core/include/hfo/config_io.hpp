#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hfo/calibration.hpp"
#include "hfo/outcome.hpp"
#include "hfo/pipeline.hpp"
#include "hfo/snn.hpp"

namespace hfo::config {

/// Pretty-printed JSON. Every field is written, so the file doubles as a
/// template.
std::string network_to_json(const snn::NetworkConfig& cfg);
/// Missing keys keep the with_grid() defaults; unknown keys and wrong types
/// throw MalformedHeader naming `origin`. The result is validated.
snn::NetworkConfig network_from_json(const std::string& text, const std::string& origin = "<network>");

std::string front_end_to_json(const FrontEndConfig& fe);
FrontEndConfig front_end_from_json(const std::string& text, const std::string& origin = "<front-end>");

/// What cmd_calibrate persists: the network with its resolved unknowns, the
/// front end it was calibrated under and a summary of the search.
struct CalibrationFile {
    snn::NetworkConfig network;
    FrontEndConfig front_end;
    std::uint64_t corpus_seed = 0;
    calib::CalibrationResult search;  // `config` mirrors `network`
};

std::string calibration_to_json(const CalibrationFile& file);
CalibrationFile calibration_from_json(const std::string& text, const std::string& origin = "<calibration>");

void save_calibration(const CalibrationFile& file, const std::filesystem::path& path);
/// Throws MissingCalibration when the file does not exist.
CalibrationFile load_calibration(const std::filesystem::path& path);

struct PatientInputs {
    std::string id;
    std::vector<std::filesystem::path> pre;
    std::vector<std::filesystem::path> post;
};

/// Everything one detect run needs. Relative paths in the file resolve
/// against the file's own directory.
struct RunConfig {
    std::vector<PatientInputs> patients;
    std::optional<std::filesystem::path> outcomes;
    std::optional<std::filesystem::path> network;
    std::optional<std::filesystem::path> calibration;
    std::filesystem::path output_dir = "out";
    unsigned workers = 1;
    std::uint64_t seed = 1;
    /// Overrides the front end stored with the calibration.
    std::optional<FrontEndConfig> front_end;

    /// Throws Io naming the first referenced input that does not exist.
    void validate_paths() const;
};

RunConfig run_config_from_json(const std::string& text, const std::filesystem::path& base_dir,
                               const std::string& origin = "<run>");
RunConfig load_run_config(const std::filesystem::path& path);
/// Paths are written relative to `base_dir`.
std::string run_config_to_json(const RunConfig& rc, const std::filesystem::path& base_dir);

/// `patient_id,ilae,followup_months` with a header row.
std::vector<outcome::PatientOutcome> parse_outcomes_csv(const std::string& text, const std::string& origin);
std::vector<outcome::PatientOutcome> load_outcomes(const std::filesystem::path& path);
std::string outcomes_to_csv(const std::vector<outcome::PatientOutcome>& rows);

std::string grid_to_json(const calib::CalibrationGrid& grid);
/// Missing keys keep the default_grid() values.
calib::CalibrationGrid grid_from_json(const std::string& text, const std::string& origin = "<grid>");

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace hfo::config
