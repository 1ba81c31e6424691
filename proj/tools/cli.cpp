#include "cli.hpp"

#include "hfo/calibration.hpp"
#include "hfo/config_io.hpp"
#include "hfo/detector.hpp"
#include "hfo/error.hpp"
#include "hfo/outcome.hpp"
#include "hfo/pipeline.hpp"
#include "hfo/recording.hpp"
#include "hfo/synth.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace hfo::cli {

namespace fs = std::filesystem;

namespace {

void setup_logging() {
    auto logger = spdlog::get("hfo");
    if (!logger) logger = spdlog::stderr_color_mt("hfo");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("HFO_LOG");
    spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

std::string num(double v, const char* fmt = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::uint64_t recording_seed(std::uint64_t seed, std::size_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Flags shared by the subcommands that touch the front end.
struct FrontEndFlags {
    std::optional<int> filter_order;
    std::optional<std::string> baseline_mode;

    void add(CLI::App* app) {
        app->add_option("--filter-order", filter_order, "Butterworth design order of the band-pass");
        app->add_option("--baseline-mode", baseline_mode, "static or rolling")
            ->check(CLI::IsMember({"static", "rolling"}));
    }

    void apply(FrontEndConfig& fe) const {
        if (filter_order) fe.filter_order = *filter_order;
        if (baseline_mode) fe.baseline_mode = parse_baseline_mode(*baseline_mode);
    }
};

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
    std::size_t n_hfo = 11, n_transient = 11, n_noise = 0;
    std::uint64_t seed = 1;
    std::string out = "corpus";
    bool cohort = false;
    double pre_minutes = 4.0, post_minutes = 4.0;
    std::size_t channels = 6;
};

int write_cohort(const SynthArgs& a) {
    const fs::path dir = a.out;
    fs::create_directories(dir);
    config::RunConfig rc;
    rc.output_dir = dir / "results";
    rc.calibration = dir / "calibration.json";
    rc.outcomes = dir / "outcomes.csv";
    rc.seed = a.seed;
    std::vector<outcome::PatientOutcome> outcomes;
    std::string truth = "patient,phase,channel,kind,start_s,end_s\n";
    for (const auto& p : synth::reference_cohort(a.seed, a.pre_minutes, a.post_minutes, a.channels)) {
        config::PatientInputs in;
        in.id = p.id;
        for (const auto* spec : {&p.pre, &p.post}) {
            const auto syn = synth::generate_recording(*spec);
            const fs::path file = dir / (p.id + "_" + to_string(spec->phase) + ".hfo1");
            save_binary(syn.recording, file);
            Sidecar side;
            side.sample_rate = spec->sample_rate;
            side.patient_id = p.id;
            side.phase = spec->phase;
            config::write_text_file(sidecar_path_for(file), serialize_sidecar(side));
            (spec->phase == Phase::PreResection ? in.pre : in.post).push_back(file);
            for (const auto& e : syn.events)
                truth += p.id + "," + to_string(spec->phase) + "," + spec->labels[e.channel] + "," +
                         synth::to_string(e.kind) + "," + num(e.start) + "," + num(e.end) + "\n";
        }
        rc.patients.push_back(std::move(in));
        outcomes.push_back({p.id, p.ilae, p.followup_months});
    }
    config::write_text_file(dir / "outcomes.csv", config::outcomes_to_csv(outcomes));
    config::write_text_file(dir / "truth_events.csv", truth);
    config::write_text_file(dir / "run.json", config::run_config_to_json(rc, dir));
    spdlog::info("wrote {} pseudo-patients to {}", rc.patients.size(), dir.string());
    return kOk;
}

int cmd_synth(const SynthArgs& a) {
    if (a.cohort) return write_cohort(a);
    const auto corpus = synth::generate_corpus(a.n_hfo, a.n_transient, a.seed, a.n_noise);
    synth::export_corpus(corpus, a.out);
    spdlog::info("wrote {} snippets to {}", corpus.snippets.size(), a.out);
    return kOk;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateArgs {
    std::uint64_t seed = 1;
    std::size_t n_hfo = 11, n_transient = 11, n_background = 8;
    double background_s = 5.0;
    std::optional<std::string> grid;
    std::optional<std::string> config;
    std::string out = ".";
    bool best_effort = false;
    FrontEndFlags fe;
};

void print_cell(const config::CalibrationFile& f) {
    const auto& n = f.network;
    const auto& s = f.search;
    std::cout << "second_layer tau_mem=" << num(n.second_layer.tau_mem * 1e3, "%g") << "ms i_threshold="
              << num(n.second_layer.i_threshold, "%g") << "fA\n"
              << "dis_inhibitory tau_mem=" << num(n.dis_inhibitory.tau_mem * 1e3, "%g") << "ms i_threshold="
              << num(n.dis_inhibitory.i_threshold, "%g") << "fA\n"
              << "global_inhibitory tau_mem=" << num(n.global_inhibitory.tau_mem * 1e3, "%g") << "ms i_threshold="
              << num(n.global_inhibitory.i_threshold, "%g") << "fA\n"
              << "poiss_gi weight=" << num(n.poiss_gi.weight, "%g") << "fA\n"
              << "hfo_detected=" << s.hfo_detected << "/" << s.n_hfo << " transient_rejected=" << s.transient_rejected
              << "/" << s.n_transient << " background_silent=" << s.noise_silent << "/" << s.n_noise
              << " gi_gates=" << s.gates_opened << "/" << s.n_hfo << " admissible=" << (s.admissible ? "yes" : "no")
              << " latency_met=" << (s.latency_met ? "yes" : "no") << " evaluated=" << s.evaluated << "\n";
}

int cmd_calibrate(const CalibrateArgs& a) {
    FrontEndConfig fe;
    a.fe.apply(fe);
    const auto base = a.config ? config::network_from_json(config::read_text_file(*a.config), *a.config)
                               : snn::NetworkConfig::with_grid();
    const auto grid = a.grid ? config::grid_from_json(config::read_text_file(*a.grid), *a.grid) : calib::default_grid();
    const auto corpus = synth::generate_corpus(a.n_hfo, a.n_transient, a.seed, a.n_background, a.background_s);
    const auto snippets = calib::encode_corpus(corpus, fe);
    spdlog::info("searching {} grid cells over {} snippets", grid.size(), snippets.size());
    const auto mode = a.best_effort ? calib::SearchMode::BestEffort : calib::SearchMode::Strict;
    const auto result = calib::calibrate_unknowns(snippets, base, grid, mode);

    config::CalibrationFile file{result.config, fe, a.seed, result};
    const fs::path path = fs::path(a.out) / "calibration.json";
    config::save_calibration(file, path);
    print_cell(file);
    if (!result.admissible)
        spdlog::warn("no grid cell handles every snippet; wrote the best-ranked cell to {}", path.string());
    else if (!result.latency_met)
        spdlog::warn("GI gate opened within {} ms for {}/{} HFOs only", calib::kGiLatency * 1e3, result.gates_opened,
                     result.n_hfo);
    spdlog::info("calibration written to {}", path.string());
    return kOk;
}

// ---------------------------------------------------------------------------
// detect

struct DetectArgs {
    std::optional<std::string> config;
    std::optional<std::string> input;
    std::optional<std::string> outcomes;
    std::optional<std::string> calibration;
    std::optional<std::string> network;
    std::optional<std::string> out;
    std::optional<unsigned> workers;
    std::optional<std::uint64_t> seed;
    std::string ci_method = "clopper-pearson";
    FrontEndFlags fe;
};

struct Job {
    std::string patient;
    Phase phase = Phase::PreResection;
    fs::path file;
};

struct RateRow {
    std::string patient;
    Phase phase = Phase::PreResection;
    detect::ChannelRateReport rate;
};

std::vector<Job> jobs_from_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, dir.string() + ": not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && format_from_extension(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorCode::EmptyInput, dir.string() + ": no recordings found");
    std::vector<Job> jobs;
    for (const auto& f : files) jobs.push_back({{}, Phase::PreResection, f});
    return jobs;
}

struct Summary {
    std::map<std::string, double> max_pre, max_post;
    std::vector<std::string> order;
};

void write_cohort_json(const Summary& sum, const std::vector<outcome::PatientOutcome>& outcomes,
                       const std::string& ci_method, const fs::path& out_dir) {
    std::vector<outcome::OutcomePrediction> rows;
    std::vector<outcome::OutcomeClass> classes;
    for (const auto& o : outcomes) {
        auto post = sum.max_post.find(o.patient_id);
        if (post == sum.max_post.end()) {
            spdlog::warn("patient {} has no post-resection rates; left out of the cohort", o.patient_id);
            continue;
        }
        auto pre = sum.max_pre.find(o.patient_id);
        rows.push_back(outcome::make_prediction(o, post->second, pre == sum.max_pre.end() ? 0.0 : pre->second));
        classes.push_back(rows.back().cls);
    }
    for (const auto& id : sum.order)
        if (std::none_of(outcomes.begin(), outcomes.end(), [&](const auto& o) { return o.patient_id == id; }))
            spdlog::warn("patient {} has no outcome entry", id);
    if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no patient has both an outcome and post-resection rates");
    const auto metrics = outcome::cohort_metrics(classes, 0.95, outcome::parse_ci_method(ci_method));
    config::write_text_file(out_dir / "cohort.json", outcome::cohort_report_json(rows, metrics));
    std::cout << "accuracy=" << num(metrics.accuracy, "%.4f") << " ci=[" << num(metrics.accuracy_ci.low, "%.4f") << ", "
              << num(metrics.accuracy_ci.high, "%.4f") << "] tp=" << metrics.tp << " tn=" << metrics.tn
              << " fp=" << metrics.fp << " fn=" << metrics.fn << "\n";
}

Summary summarize(const std::vector<RateRow>& rates) {
    Summary s;
    for (const auto& r : rates) {
        if (std::find(s.order.begin(), s.order.end(), r.patient) == s.order.end()) s.order.push_back(r.patient);
        auto& m = r.phase == Phase::PreResection ? s.max_pre : s.max_post;
        auto it = m.find(r.patient);
        if (it == m.end() || r.rate.rate > it->second) m[r.patient] = r.rate.rate;
    }
    return s;
}

void write_rates(const std::vector<RateRow>& rates, const Summary& sum, const fs::path& out_dir) {
    std::string csv = "patient,phase,channel,n_events,duration_min,rate_per_min\n";
    std::string plot = "patient,phase,channel,rate_per_min,is_max\n";
    for (const auto& r : rates) {
        const auto& m = r.phase == Phase::PreResection ? sum.max_pre : sum.max_post;
        const std::string head = r.patient + "," + to_string(r.phase) + "," + r.rate.channel + ",";
        csv += head + std::to_string(r.rate.n_events) + "," + num(r.rate.analyzed_minutes) + "," + num(r.rate.rate) + "\n";
        plot += head + num(r.rate.rate) + "," + (r.rate.rate == m.at(r.patient) ? "1" : "0") + "\n";
    }
    config::write_text_file(out_dir / "rates.csv", csv);
    config::write_text_file(out_dir / "plot_rates.csv", plot);
}

int cmd_detect(const DetectArgs& a) {
    config::RunConfig rc;
    std::vector<Job> jobs;
    if (a.config) {
        if (!fs::exists(*a.config)) throw Error(ErrorCode::Io, *a.config + ": no such file");
        rc = config::load_run_config(*a.config);
        rc.validate_paths();
        for (const auto& p : rc.patients) {
            for (const auto& f : p.pre) jobs.push_back({p.id, Phase::PreResection, f});
            for (const auto& f : p.post) jobs.push_back({p.id, Phase::PostResection, f});
        }
        if (jobs.empty()) throw Error(ErrorCode::EmptyInput, *a.config + ": no recordings listed");
    }
    if (a.input) jobs = jobs_from_dir(*a.input);
    if (!a.config && !a.input) throw Error(ErrorCode::InvalidArgument, "detect needs --config or --input");
    if (a.outcomes) rc.outcomes = *a.outcomes;
    if (a.calibration) rc.calibration = *a.calibration;
    if (a.network) rc.network = *a.network;
    if (a.out) rc.output_dir = *a.out;
    if (a.workers) rc.workers = *a.workers;
    if (a.seed) rc.seed = *a.seed;
    if (rc.workers == 0) throw Error(ErrorCode::InvalidArgument, "--workers must be at least 1");

    const fs::path cal_path = rc.calibration.value_or("calibration.json");
    const auto cal = config::load_calibration(cal_path);
    PipelineConfig pc;
    pc.front_end = rc.front_end.value_or(cal.front_end);
    a.fe.apply(pc.front_end);
    const auto net = rc.network ? config::network_from_json(config::read_text_file(*rc.network), rc.network->string())
                                : cal.network;
    if (!cal.search.admissible) spdlog::warn("{} holds a best-effort calibration", cal_path.string());

    std::string events_csv = "patient,phase,channel,start_s,end_s,n_spikes\n";
    std::string windows_csv = "patient,phase,channel,event,start_s,end_s,low_hz,high_hz\n";
    std::vector<RateRow> rates;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        auto& job = jobs[j];
        const auto fmt = format_from_extension(job.file);
        if (!fmt) throw Error(ErrorCode::UnsupportedEncoding, job.file.string() + ": unknown recording extension");
        const Recording rec = load_prepared_recording(job.file, *fmt);
        if (job.patient.empty()) {
            job.patient = rec.patient_id().empty() ? job.file.stem().string() : rec.patient_id();
            job.phase = rec.phase();
        }
        if (job.phase == Phase::PostResection && rec.duration_s() < 60.0)
            spdlog::warn("{}: post-resection recording is shorter than 1 min ({:.1f} s)", job.file.string(),
                         rec.duration_s());
        spdlog::info("{} {} {}: {} channels, {:.2f} min", job.patient, to_string(job.phase), job.file.filename().string(),
                     rec.channel_count(), rec.duration_s() / 60.0);
        const auto results = process_recording(rec, pc, net, recording_seed(rc.seed, j), rc.workers);

        std::vector<detect::ChannelEvents> counts;
        for (const auto& r : results) {
            if (r.excluded) continue;
            counts.push_back({r.label, r.events.size(), r.analyzed_minutes});
            for (std::size_t e = 0; e < r.events.size(); ++e) {
                const auto& ev = r.events[e];
                const std::string head = job.patient + "," + to_string(job.phase) + "," + r.label + ",";
                events_csv += head + num(ev.start) + "," + num(ev.end) + "," + std::to_string(ev.n_spikes) + "\n";
                windows_csv += head + std::to_string(e) + "," + num(ev.start) + "," + num(ev.end) + "," +
                               num(pc.front_end.low_hz, "%g") + "," + num(pc.front_end.high_hz, "%g") + "\n";
            }
        }
        for (const auto& rate : detect::compute_rates(counts)) rates.push_back({job.patient, job.phase, rate});
    }

    const fs::path out_dir = rc.output_dir;
    fs::create_directories(out_dir);
    config::write_text_file(out_dir / "events.csv", events_csv);
    config::write_text_file(out_dir / "plot_event_windows.csv", windows_csv);
    const auto sum = summarize(rates);
    write_rates(rates, sum, out_dir);
    if (rc.outcomes) {
        write_cohort_json(sum, config::load_outcomes(*rc.outcomes), a.ci_method, out_dir);
    } else {
        spdlog::warn("no outcome file given; cohort.json not written");
    }
    spdlog::info("reports written to {}", out_dir.string());
    return kOk;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
    std::string rates;
    std::string outcomes;
    std::string out = ".";
    std::string ci_method = "clopper-pearson";
};

std::vector<RateRow> parse_rates_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<RateRow> rows;
    auto fail = [&](const std::string& what) {
        throw Error(ErrorCode::MalformedHeader, origin + ": line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "patient,phase,channel,n_events,duration_min,rate_per_min") fail("unexpected header");
            continue;
        }
        std::vector<std::string> f;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() != 6) fail("expected 6 fields");
        RateRow r;
        r.patient = f[0];
        try {
            r.phase = parse_phase(f[1]);
            r.rate.channel = f[2];
            r.rate.n_events = std::stoul(f[3]);
            r.rate.analyzed_minutes = std::stod(f[4]);
            r.rate.rate = std::stod(f[5]);
        } catch (const std::exception&) {
            fail("expected numeric n_events, duration_min and rate_per_min");
        }
        if (r.rate.rate < 0.0) fail("negative rate");
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw Error(ErrorCode::EmptyInput, origin + ": no rate rows");
    return rows;
}

int cmd_report(const ReportArgs& a) {
    const auto rates = parse_rates_csv(config::read_text_file(a.rates), a.rates);
    write_cohort_json(summarize(rates), config::load_outcomes(a.outcomes), a.ci_method, a.out);
    return kOk;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingCalibration: return kMissingCalibration;
        case ErrorCode::NoAdmissibleConfig: return kNoAdmissibleConfig;
        default: return kBadInput;
    }
}

}  // namespace

int run(const std::vector<std::string>& args) {
    setup_logging();
    CLI::App app{"Fast-ripple HFO detection with a spiking neural network", "hfo"};
    app.require_subcommand(1);

    SynthArgs sa;
    auto* synth_cmd = app.add_subcommand("synth", "Write a labelled snippet corpus or a synthetic patient cohort");
    synth_cmd->add_option("--n-hfo", sa.n_hfo, "HFO snippets");
    synth_cmd->add_option("--n-transient", sa.n_transient, "Fast-transient snippets");
    synth_cmd->add_option("--n-noise", sa.n_noise, "Background-only snippets");
    synth_cmd->add_option("--seed", sa.seed, "Base seed");
    synth_cmd->add_option("--out", sa.out, "Output directory");
    synth_cmd->add_flag("--cohort", sa.cohort, "Write the eight pseudo-patient cohort instead of snippets");
    synth_cmd->add_option("--pre-minutes", sa.pre_minutes, "Cohort pre-resection recording length");
    synth_cmd->add_option("--post-minutes", sa.post_minutes, "Cohort post-resection recording length");
    synth_cmd->add_option("--channels", sa.channels, "Cohort channels per recording");

    CalibrateArgs ca;
    auto* cal_cmd = app.add_subcommand("calibrate", "Resolve the unknown neuron constants on a synthetic corpus");
    cal_cmd->add_option("--seed", ca.seed, "Corpus seed");
    cal_cmd->add_option("--n-hfo", ca.n_hfo, "HFO snippets");
    cal_cmd->add_option("--n-transient", ca.n_transient, "Fast-transient snippets");
    cal_cmd->add_option("--n-background", ca.n_background, "Background stretches");
    cal_cmd->add_option("--background-s", ca.background_s, "Length of each background stretch, seconds");
    cal_cmd->add_option("--grid", ca.grid, "JSON file restricting the search grid");
    cal_cmd->add_option("--config", ca.config, "Network JSON whose fixed parameters are kept");
    cal_cmd->add_option("--out", ca.out, "Directory for calibration.json");
    cal_cmd->add_flag("--best-effort", ca.best_effort, "Write the best-ranked cell when none is admissible");
    ca.fe.add(cal_cmd);

    DetectArgs da;
    auto* det_cmd = app.add_subcommand("detect", "Detect HFOs and write rate reports");
    det_cmd->add_option("--config", da.config, "Run configuration JSON");
    det_cmd->add_option("--input", da.input, "Directory of recordings (patient and phase from sidecars)");
    det_cmd->add_option("--outcomes", da.outcomes, "patient_id,ilae,followup_months CSV");
    det_cmd->add_option("--calibration", da.calibration, "Calibration file (default ./calibration.json)");
    det_cmd->add_option("--network", da.network, "Network JSON overriding the calibrated one");
    det_cmd->add_option("--out", da.out, "Output directory");
    det_cmd->add_option("--workers", da.workers, "Channel worker threads");
    det_cmd->add_option("--seed", da.seed, "Base seed of the Poisson drive");
    det_cmd->add_option("--ci-method", da.ci_method, "clopper-pearson, wilson or normal")
        ->check(CLI::IsMember({"clopper-pearson", "wilson", "normal"}));
    da.fe.add(det_cmd);

    ReportArgs ra;
    auto* rep_cmd = app.add_subcommand("report", "Cohort metrics from a rates CSV and an outcome file");
    rep_cmd->add_option("--rates", ra.rates, "rates.csv written by detect")->required();
    rep_cmd->add_option("--outcomes", ra.outcomes, "patient_id,ilae,followup_months CSV")->required();
    rep_cmd->add_option("--out", ra.out, "Output directory");
    rep_cmd->add_option("--ci-method", ra.ci_method, "clopper-pearson, wilson or normal")
        ->check(CLI::IsMember({"clopper-pearson", "wilson", "normal"}));

    // CLI11 consumes a reversed argument list without the program name.
    std::vector<std::string> rest;
    if (!args.empty()) rest.assign(args.rbegin(), args.rend() - 1);
    try {
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (synth_cmd->parsed()) return cmd_synth(sa);
        if (cal_cmd->parsed()) return cmd_calibrate(ca);
        if (det_cmd->parsed()) return cmd_detect(da);
        if (rep_cmd->parsed()) return cmd_report(ra);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kBadInput;
    }
    return kUsage;
}

}  // namespace hfo::cli
