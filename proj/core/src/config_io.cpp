#include "hfo/config_io.hpp"

#include "hfo/error.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace hfo::config {

using json = nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& origin, const std::string& what) {
    throw Error(ErrorCode::MalformedHeader, origin + ": " + what);
}

json parse(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        malformed(origin, e.what());
    }
}

// Reads an object while tracking which keys were consumed so leftovers can
// be reported.
class Reader {
public:
    Reader(const json& j, std::string origin, std::string where) : j_(j), origin_(std::move(origin)), where_(std::move(where)) {
        if (!j_.is_object()) malformed(origin_, where_ + " must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            malformed(origin_, where_ + "." + key + " has the wrong type");
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string path(const char* key) const { return where_ + "." + key; }
    const std::string& origin() const { return origin_; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) malformed(origin_, "unknown key " + where_ + "." + it.key());
    }

private:
    const json& j_;
    std::string origin_;
    std::string where_;
    std::set<std::string> seen_;
};

json synapse_json(const snn::SynapseParams& s) {
    return {{"weight", s.weight},
            {"tau", s.tau},
            {"polarity", s.polarity == snn::SynapsePolarity::Excitatory ? "excitatory" : "inhibitory"}};
}

snn::SynapseParams synapse_from(const json& j, const std::string& origin, const std::string& where,
                                snn::SynapseParams s) {
    Reader r(j, origin, where);
    r.get("weight", s.weight);
    r.get("tau", s.tau);
    std::string pol = s.polarity == snn::SynapsePolarity::Excitatory ? "excitatory" : "inhibitory";
    r.get("polarity", pol);
    if (pol == "excitatory") s.polarity = snn::SynapsePolarity::Excitatory;
    else if (pol == "inhibitory") s.polarity = snn::SynapsePolarity::Inhibitory;
    else malformed(origin, where + ".polarity must be excitatory or inhibitory");
    r.finish();
    return s;
}

json neuron_json(const snn::NeuronParams& n) {
    return {{"tau_mem", n.tau_mem}, {"i_threshold", n.i_threshold}, {"refractory", n.refractory}, {"reset", n.reset}};
}

snn::NeuronParams neuron_from(const json& j, const std::string& origin, const std::string& where,
                              snn::NeuronParams n) {
    Reader r(j, origin, where);
    r.get("tau_mem", n.tau_mem);
    r.get("i_threshold", n.i_threshold);
    r.get("refractory", n.refractory);
    r.get("reset", n.reset);
    r.finish();
    return n;
}

json network_json(const snn::NetworkConfig& c) {
    json up = json::array(), dn = json::array();
    for (const auto& s : c.up_sl) up.push_back(synapse_json(s));
    for (const auto& s : c.dn_sl) dn.push_back(synapse_json(s));
    return {{"n_second_layer", c.n_second_layer},
            {"up_sl", up},
            {"dn_sl", dn},
            {"up_di", synapse_json(c.up_di)},
            {"dn_di", synapse_json(c.dn_di)},
            {"di_gi", synapse_json(c.di_gi)},
            {"poiss_gi", synapse_json(c.poiss_gi)},
            {"gi_sl", synapse_json(c.gi_sl)},
            {"poisson_rate", c.poisson_rate},
            {"poisson_seed", c.poisson_seed},
            {"poisson_mode", snn::to_string(c.poisson_mode)},
            {"neurons",
             {{"second_layer", neuron_json(c.second_layer)},
              {"dis_inhibitory", neuron_json(c.dis_inhibitory)},
              {"global_inhibitory", neuron_json(c.global_inhibitory)}}},
            {"tick", c.tick}};
}

snn::NetworkConfig network_from(const json& j, const std::string& origin, const std::string& where) {
    auto c = snn::NetworkConfig::with_grid();
    Reader r(j, origin, where);
    r.get("n_second_layer", c.n_second_layer);
    auto grid = [&](const char* key, std::vector<snn::SynapseParams>& out) {
        const json* arr = r.child(key);
        if (!arr) return;
        if (!arr->is_array()) malformed(origin, r.path(key) + " must be an array");
        std::vector<snn::SynapseParams> v;
        for (std::size_t i = 0; i < arr->size(); ++i)
            v.push_back(synapse_from((*arr)[i], origin, r.path(key) + "[" + std::to_string(i) + "]",
                                     i < out.size() ? out[i] : snn::SynapseParams{}));
        out = std::move(v);
    };
    grid("up_sl", c.up_sl);
    grid("dn_sl", c.dn_sl);
    auto syn = [&](const char* key, snn::SynapseParams& s) {
        if (const json* o = r.child(key)) s = synapse_from(*o, origin, r.path(key), s);
    };
    syn("up_di", c.up_di);
    syn("dn_di", c.dn_di);
    syn("di_gi", c.di_gi);
    syn("poiss_gi", c.poiss_gi);
    syn("gi_sl", c.gi_sl);
    r.get("poisson_rate", c.poisson_rate);
    r.get("poisson_seed", c.poisson_seed);
    std::string mode = snn::to_string(c.poisson_mode);
    r.get("poisson_mode", mode);
    try {
        c.poisson_mode = snn::parse_poisson_mode(mode);
    } catch (const Error&) {
        malformed(origin, r.path("poisson_mode") + " is not poisson, regular or disabled");
    }
    if (const json* n = r.child("neurons")) {
        Reader nr(*n, origin, r.path("neurons"));
        auto pop = [&](const char* key, snn::NeuronParams& p) {
            if (const json* o = nr.child(key)) p = neuron_from(*o, origin, nr.path(key), p);
        };
        pop("second_layer", c.second_layer);
        pop("dis_inhibitory", c.dis_inhibitory);
        pop("global_inhibitory", c.global_inhibitory);
        nr.finish();
    }
    r.get("tick", c.tick);
    r.finish();
    try {
        c.validate();
    } catch (const Error& e) {
        malformed(origin, e.what());
    }
    return c;
}

json front_end_json(const FrontEndConfig& f) {
    return {{"low_hz", f.low_hz},
            {"high_hz", f.high_hz},
            {"filter_order", f.filter_order},
            {"oversample_first", f.oversample_first},
            {"baseline_mode", to_string(f.baseline_mode)},
            {"baseline_window_s", f.baseline_window_s},
            {"baseline_subwindow_s", f.baseline_subwindow_s},
            {"threshold_fraction", f.threshold_fraction},
            {"refractory", f.refractory},
            {"tracking", codec::to_string(f.tracking)}};
}

FrontEndConfig front_end_from(const json& j, const std::string& origin, const std::string& where) {
    FrontEndConfig f;
    Reader r(j, origin, where);
    r.get("low_hz", f.low_hz);
    r.get("high_hz", f.high_hz);
    r.get("filter_order", f.filter_order);
    r.get("oversample_first", f.oversample_first);
    std::string mode = to_string(f.baseline_mode), tracking = codec::to_string(f.tracking);
    r.get("baseline_mode", mode);
    r.get("baseline_window_s", f.baseline_window_s);
    r.get("baseline_subwindow_s", f.baseline_subwindow_s);
    r.get("threshold_fraction", f.threshold_fraction);
    r.get("refractory", f.refractory);
    r.get("tracking", tracking);
    r.finish();
    try {
        f.baseline_mode = parse_baseline_mode(mode);
        f.tracking = codec::parse_tracking(tracking);
    } catch (const Error& e) {
        malformed(origin, e.what());
    }
    return f;
}

std::vector<std::filesystem::path> paths_from(const json& j, const std::filesystem::path& base, const std::string& origin,
                                              const std::string& where) {
    std::vector<std::filesystem::path> out;
    if (j.is_string()) {
        out.push_back(base / j.get<std::string>());
        return out;
    }
    if (!j.is_array()) malformed(origin, where + " must be a path or an array of paths");
    for (const auto& p : j) {
        if (!p.is_string()) malformed(origin, where + " must hold strings");
        out.push_back(base / p.get<std::string>());
    }
    return out;
}

}  // namespace

std::string network_to_json(const snn::NetworkConfig& cfg) { return network_json(cfg).dump(2) + "\n"; }

snn::NetworkConfig network_from_json(const std::string& text, const std::string& origin) {
    return network_from(parse(text, origin), origin, "network");
}

std::string front_end_to_json(const FrontEndConfig& fe) { return front_end_json(fe).dump(2) + "\n"; }

FrontEndConfig front_end_from_json(const std::string& text, const std::string& origin) {
    return front_end_from(parse(text, origin), origin, "front_end");
}

std::string calibration_to_json(const CalibrationFile& file) {
    const auto& s = file.search;
    json j = {{"format", "hfo-calibration"},
              {"version", 1},
              {"network", network_json(file.network)},
              {"front_end", front_end_json(file.front_end)},
              {"search",
               {{"corpus_seed", file.corpus_seed},
                {"n_hfo", s.n_hfo},
                {"hfo_detected", s.hfo_detected},
                {"n_transient", s.n_transient},
                {"transient_rejected", s.transient_rejected},
                {"n_noise", s.n_noise},
                {"noise_silent", s.noise_silent},
                {"gates_opened", s.gates_opened},
                {"admissible", s.admissible},
                {"latency_met", s.latency_met},
                {"evaluated", s.evaluated}}}};
    return j.dump(2) + "\n";
}

CalibrationFile calibration_from_json(const std::string& text, const std::string& origin) {
    const json j = parse(text, origin);
    Reader r(j, origin, "calibration");
    std::string format;
    int version = 0;
    r.get("format", format);
    r.get("version", version);
    if (format != "hfo-calibration") malformed(origin, "not an hfo-calibration file");
    if (version != 1) malformed(origin, "unsupported calibration version " + std::to_string(version));
    CalibrationFile f;
    const json* net = r.child("network");
    if (!net) malformed(origin, "calibration.network is missing");
    f.network = network_from(*net, origin, "calibration.network");
    if (const json* fe = r.child("front_end")) f.front_end = front_end_from(*fe, origin, "calibration.front_end");
    if (const json* s = r.child("search")) {
        Reader sr(*s, origin, "calibration.search");
        sr.get("corpus_seed", f.corpus_seed);
        sr.get("n_hfo", f.search.n_hfo);
        sr.get("hfo_detected", f.search.hfo_detected);
        sr.get("n_transient", f.search.n_transient);
        sr.get("transient_rejected", f.search.transient_rejected);
        sr.get("n_noise", f.search.n_noise);
        sr.get("noise_silent", f.search.noise_silent);
        sr.get("gates_opened", f.search.gates_opened);
        sr.get("admissible", f.search.admissible);
        sr.get("latency_met", f.search.latency_met);
        sr.get("evaluated", f.search.evaluated);
        sr.finish();
    }
    r.finish();
    f.search.config = f.network;
    return f;
}

void save_calibration(const CalibrationFile& file, const std::filesystem::path& path) {
    write_text_file(path, calibration_to_json(file));
}

CalibrationFile load_calibration(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw Error(ErrorCode::MissingCalibration, "calibration file " + path.string() + " not found");
    return calibration_from_json(read_text_file(path), path.string());
}

void RunConfig::validate_paths() const {
    auto check = [](const std::filesystem::path& p) {
        if (!std::filesystem::exists(p)) throw Error(ErrorCode::Io, p.string() + ": no such file");
    };
    for (const auto& pt : patients) {
        for (const auto& p : pt.pre) check(p);
        for (const auto& p : pt.post) check(p);
    }
    if (outcomes) check(*outcomes);
    if (network) check(*network);
}

RunConfig run_config_from_json(const std::string& text, const std::filesystem::path& base_dir,
                               const std::string& origin) {
    const json j = parse(text, origin);
    Reader r(j, origin, "run");
    RunConfig rc;
    if (const json* pts = r.child("patients")) {
        if (!pts->is_array()) malformed(origin, "run.patients must be an array");
        for (std::size_t i = 0; i < pts->size(); ++i) {
            const std::string where = "run.patients[" + std::to_string(i) + "]";
            Reader pr((*pts)[i], origin, where);
            PatientInputs p;
            pr.get("id", p.id);
            if (p.id.empty()) malformed(origin, where + ".id is required");
            if (const json* pre = pr.child("pre")) p.pre = paths_from(*pre, base_dir, origin, where + ".pre");
            if (const json* post = pr.child("post")) p.post = paths_from(*post, base_dir, origin, where + ".post");
            pr.finish();
            rc.patients.push_back(std::move(p));
        }
    }
    auto opt_path = [&](const char* key, std::optional<std::filesystem::path>& out) {
        std::string s;
        r.get(key, s);
        if (!s.empty()) out = base_dir / s;
    };
    opt_path("outcomes", rc.outcomes);
    opt_path("network", rc.network);
    opt_path("calibration", rc.calibration);
    std::string out = rc.output_dir.string();
    r.get("output_dir", out);
    rc.output_dir = base_dir / out;
    r.get("workers", rc.workers);
    r.get("seed", rc.seed);
    if (const json* fe = r.child("front_end")) rc.front_end = front_end_from(*fe, origin, "run.front_end");
    r.finish();
    if (rc.workers == 0) malformed(origin, "run.workers must be at least 1");
    return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return run_config_from_json(read_text_file(path), path.parent_path(), path.string());
}

std::string run_config_to_json(const RunConfig& rc, const std::filesystem::path& base_dir) {
    auto rel = [&](const std::filesystem::path& p) { return p.lexically_relative(base_dir).generic_string(); };
    json pts = json::array();
    for (const auto& p : rc.patients) {
        json pre = json::array(), post = json::array();
        for (const auto& f : p.pre) pre.push_back(rel(f));
        for (const auto& f : p.post) post.push_back(rel(f));
        pts.push_back({{"id", p.id}, {"pre", pre}, {"post", post}});
    }
    json j = {{"patients", pts}, {"output_dir", rel(rc.output_dir)}, {"workers", rc.workers}, {"seed", rc.seed}};
    if (rc.outcomes) j["outcomes"] = rel(*rc.outcomes);
    if (rc.network) j["network"] = rel(*rc.network);
    if (rc.calibration) j["calibration"] = rel(*rc.calibration);
    if (rc.front_end) j["front_end"] = front_end_json(*rc.front_end);
    return j.dump(2) + "\n";
}

std::vector<outcome::PatientOutcome> parse_outcomes_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<outcome::PatientOutcome> rows;
    auto fail = [&](const std::string& what) { malformed(origin, "line " + std::to_string(line_no) + ": " + what); };
    auto to_int = [&](const std::string& s) {
        int v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) fail("'" + s + "' is not an integer");
        return v;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "patient_id,ilae,followup_months") fail("expected header patient_id,ilae,followup_months");
            continue;
        }
        std::vector<std::string> f;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() != 3) fail("expected 3 fields");
        outcome::PatientOutcome p{f[0], to_int(f[1]), to_int(f[2])};
        try {
            p.validate();
        } catch (const Error& e) {
            fail(e.what());
        }
        rows.push_back(std::move(p));
    }
    if (line_no == 0) malformed(origin, "empty outcome file");
    return rows;
}

std::vector<outcome::PatientOutcome> load_outcomes(const std::filesystem::path& path) {
    return parse_outcomes_csv(read_text_file(path), path.string());
}

std::string outcomes_to_csv(const std::vector<outcome::PatientOutcome>& rows) {
    std::string out = "patient_id,ilae,followup_months\n";
    for (const auto& r : rows)
        out += r.patient_id + "," + std::to_string(r.ilae) + "," + std::to_string(r.followup_months) + "\n";
    return out;
}

std::string grid_to_json(const calib::CalibrationGrid& g) {
    json j = {{"sl_tau", g.sl_tau},
              {"sl_threshold", g.sl_threshold},
              {"di_tau", g.di_tau},
              {"di_threshold", g.di_threshold},
              {"gi_tau", g.gi_tau},
              {"gi_threshold", g.gi_threshold},
              {"poisson_weight", g.poisson_weight}};
    return j.dump(2) + "\n";
}

calib::CalibrationGrid grid_from_json(const std::string& text, const std::string& origin) {
    const json j = parse(text, origin);
    auto g = calib::default_grid();
    Reader r(j, origin, "grid");
    r.get("sl_tau", g.sl_tau);
    r.get("sl_threshold", g.sl_threshold);
    r.get("di_tau", g.di_tau);
    r.get("di_threshold", g.di_threshold);
    r.get("gi_tau", g.gi_tau);
    r.get("gi_threshold", g.gi_threshold);
    r.get("poisson_weight", g.poisson_weight);
    r.finish();
    if (g.size() == 0) malformed(origin, "every grid axis needs at least one value");
    return g;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace hfo::config
