#include "support.hpp"

#include "cli.hpp"
#include "hfo/config_io.hpp"

#include <fstream>

using namespace hfo;
namespace fs = std::filesystem;

namespace {

int hfo_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "hfo");
    return cli::run(args);
}

std::string slurp(const fs::path& p) { return config::read_text_file(p); }

}  // namespace

TEST_CASE("usage errors") {
    CHECK(hfo_cli({}) == cli::kUsage);
    CHECK(hfo_cli({"frobnicate"}) == cli::kUsage);
    CHECK(hfo_cli({"detect", "--workers", "many"}) == cli::kUsage);
    CHECK(hfo_cli({"detect", "--baseline-mode", "weekly"}) == cli::kUsage);
    CHECK(hfo_cli({"--help"}) == cli::kOk);
}

TEST_CASE("synth rejects an empty corpus") {
    const auto dir = hfo::test::scratch_dir("cli_empty");
    CHECK(hfo_cli({"synth", "--n-hfo", "0", "--n-transient", "0", "--out", dir.string()}) == cli::kBadInput);
    CHECK(hfo_cli({"synth", "--n-hfo", "1", "--n-transient", "1", "--out", dir.string()}) == cli::kOk);
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("detect input errors map to exit codes") {
    const auto dir = hfo::test::scratch_dir("cli_detect_err");
    const auto cal = dir / "calibration.json";
    CHECK(hfo_cli({"detect", "--input", dir.string(), "--calibration", cal.string()}) == cli::kBadInput);
    config::save_calibration({snn::NetworkConfig::with_grid(), {}, 1, {}}, cal);
    CHECK(hfo_cli({"detect", "--input", dir.string(), "--calibration", cal.string()}) == cli::kBadInput);
    std::ofstream(dir / "bad.hfo1") << "not a recording";
    CHECK(hfo_cli({"detect", "--input", dir.string(), "--calibration", cal.string()}) == cli::kBadInput);
    std::ofstream(dir / "run.json") << R"({"patients": [{"id": "A", "pre": "missing.hfo1"}]})";
    CHECK(hfo_cli({"detect", "--config", (dir / "run.json").string(), "--calibration", cal.string()}) ==
          cli::kBadInput);
    std::ofstream(dir / "broken.json") << "{";
    CHECK(hfo_cli({"detect", "--config", (dir / "broken.json").string()}) == cli::kBadInput);
}

TEST_CASE("detect without a calibration file exits 2") {
    const auto dir = hfo::test::scratch_dir("cli_nocal");
    CHECK(hfo_cli({"synth", "--cohort", "--pre-minutes", "0.1", "--post-minutes", "0.1", "--channels", "2", "--out",
                   dir.string()}) == cli::kOk);
    CHECK(hfo_cli({"detect", "--config", (dir / "run.json").string()}) == cli::kMissingCalibration);
}

TEST_CASE("calibrate exits 4 when no cell is admissible unless best effort is asked for") {
    const auto dir = hfo::test::scratch_dir("cli_cal");
    std::ofstream(dir / "grid.json") << R"({"sl_tau": [0.004], "sl_threshold": [1000], "di_tau": [0.0005],
        "di_threshold": [160], "gi_tau": [0.0004], "gi_threshold": [8], "poisson_weight": [5]})";
    const std::vector<std::string> base{"calibrate", "--n-hfo", "2", "--n-transient", "2", "--n-background", "0",
                                        "--grid", (dir / "grid.json").string(), "--out", dir.string()};
    CHECK(hfo_cli(base) == cli::kNoAdmissibleConfig);
    CHECK_FALSE(fs::exists(dir / "calibration.json"));
    auto best = base;
    best.push_back("--best-effort");
    CHECK(hfo_cli(best) == cli::kOk);
    const auto cal = config::load_calibration(dir / "calibration.json");
    CHECK_FALSE(cal.search.admissible);
    CHECK(cal.network.second_layer.i_threshold == 1000.0);
}

TEST_CASE("cohort round trip is deterministic across worker counts") {
    const auto dir = hfo::test::scratch_dir("cli_cohort");
    REQUIRE(hfo_cli({"synth", "--cohort", "--pre-minutes", "0.25", "--post-minutes", "0.25", "--channels", "2",
                     "--out", dir.string()}) == cli::kOk);
    config::save_calibration({snn::NetworkConfig::with_grid(), {}, 1, {}}, dir / "calibration.json");
    const auto run = (dir / "run.json").string();
    REQUIRE(hfo_cli({"detect", "--config", run, "--workers", "1", "--out", (dir / "w1").string()}) == cli::kOk);
    REQUIRE(hfo_cli({"detect", "--config", run, "--workers", "2", "--out", (dir / "w2").string()}) == cli::kOk);
    for (const char* f : {"events.csv", "rates.csv", "cohort.json", "plot_rates.csv", "plot_event_windows.csv"})
        CHECK(slurp(dir / "w1" / f) == slurp(dir / "w2" / f));

    const auto rates = slurp(dir / "w1" / "rates.csv");
    CHECK(rates.rfind("patient,phase,channel,n_events,duration_min,rate_per_min\n", 0) == 0);
    CHECK(rates.find("P8,post,2-3,") != std::string::npos);
    CHECK(slurp(dir / "w1" / "events.csv").rfind("patient,phase,channel,start_s,end_s,n_spikes\n", 0) == 0);

    REQUIRE(hfo_cli({"report", "--rates", (dir / "w1" / "rates.csv").string(), "--outcomes",
                     (dir / "outcomes.csv").string(), "--out", (dir / "rep").string()}) == cli::kOk);
    CHECK(slurp(dir / "rep" / "cohort.json") == slurp(dir / "w1" / "cohort.json"));
}

TEST_CASE("report rejects malformed rates") {
    const auto dir = hfo::test::scratch_dir("cli_report");
    std::ofstream(dir / "rates.csv") << "patient,phase,channel,n_events,duration_min,rate_per_min\nP1,pre,a,1,x,2\n";
    std::ofstream(dir / "o.csv") << "patient_id,ilae,followup_months\nP1,1,3\n";
    CHECK(hfo_cli({"report", "--rates", (dir / "rates.csv").string(), "--outcomes", (dir / "o.csv").string(), "--out",
                   dir.string()}) == cli::kBadInput);
}
