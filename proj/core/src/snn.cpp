#include "hfo/snn.hpp"

#include "hfo/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

namespace hfo::snn {

const char* to_string(Population p) {
    switch (p) {
        case Population::SecondLayer: return "SecondLayer";
        case Population::DisInhibitory: return "DisInhibitory";
        case Population::GlobalInhibitory: return "GlobalInhibitory";
    }
    return "?";
}

Population parse_population(const std::string& text) {
    if (text == "SecondLayer") return Population::SecondLayer;
    if (text == "DisInhibitory") return Population::DisInhibitory;
    if (text == "GlobalInhibitory") return Population::GlobalInhibitory;
    throw Error(ErrorCode::InvalidArgument, "unknown population '" + text + "'");
}

const char* to_string(PoissonMode m) {
    switch (m) {
        case PoissonMode::Poisson: return "poisson";
        case PoissonMode::Regular: return "regular";
        case PoissonMode::Disabled: return "disabled";
    }
    return "?";
}

PoissonMode parse_poisson_mode(const std::string& text) {
    if (text == "poisson") return PoissonMode::Poisson;
    if (text == "regular") return PoissonMode::Regular;
    if (text == "disabled") return PoissonMode::Disabled;
    throw Error(ErrorCode::InvalidArgument, "unknown poisson mode '" + text + "'");
}

const char* to_string(Node n) {
    switch (n) {
        case Node::InputUp: return "InputUp";
        case Node::InputDn: return "InputDn";
        case Node::Poisson: return "Poisson";
        case Node::SecondLayer: return "SecondLayer";
        case Node::DisInhibitory: return "DisInhibitory";
        case Node::GlobalInhibitory: return "GlobalInhibitory";
    }
    return "?";
}

NetworkConfig NetworkConfig::with_grid(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw Error(ErrorCode::InvalidArgument, "second-layer grid must be non-empty");
    NetworkConfig cfg;
    cfg.n_second_layer = rows * cols;
    auto lerp = [](double lo, double hi, std::size_t i, std::size_t n) {
        return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double w = lerp(7.0, 14.0, r, rows);
            const double tau = lerp(3e-3, 6e-3, c, cols);
            const double delta = lerp(0.1e-3, 1e-3, (r + c) % 8, 8);
            cfg.up_sl.push_back({w, SynapsePolarity::Excitatory, tau});
            cfg.dn_sl.push_back({w, SynapsePolarity::Inhibitory, tau - delta});
        }
    }
    // What `hfo calibrate` selects on the default corpus.
    cfg.second_layer = {4e-3, 20.5, 1e-3, 0.0};
    cfg.dis_inhibitory = {0.5e-3, 160.0, 0.3e-3, 0.0};
    cfg.global_inhibitory = {0.4e-3, 8.0, 0.5e-3, 0.0};
    return cfg;
}

namespace {

constexpr double kTol = 1e-9;

[[noreturn]] void out_of_range(const std::string& what) { throw Error(ErrorCode::OutOfRangeParam, what); }

void expect_fixed(const SynapseParams& s, double weight, SynapsePolarity pol, double tau, const char* name) {
    if (std::abs(s.weight - weight) > kTol || s.polarity != pol || std::abs(s.tau - tau) > kTol)
        out_of_range(std::string(name) + " must be " + std::to_string(weight) + " fA " +
                     (pol == SynapsePolarity::Excitatory ? "exc" : "inh") + ", tau " + std::to_string(tau * 1e3) +
                     " ms");
}

void expect_neuron(const NeuronParams& n, double tick, const char* name) {
    if (!(n.tau_mem > 0.0) || !(n.i_threshold > 0.0) || !(n.refractory >= tick) || n.reset != 0.0)
        out_of_range(std::string(name) + " neuron needs tau_mem > 0, threshold > 0, refractory >= tick, reset = 0");
}

}  // namespace

void NetworkConfig::validate() const {
    if (n_second_layer == 0 || up_sl.size() != n_second_layer || dn_sl.size() != n_second_layer)
        out_of_range("second layer needs one up/dn synapse pair per neuron");
    if (!(tick > 0.0)) out_of_range("tick must be positive");
    for (std::size_t i = 0; i < n_second_layer; ++i) {
        const auto& up = up_sl[i];
        const auto& dn = dn_sl[i];
        const auto idx = std::to_string(i);
        if (up.polarity != SynapsePolarity::Excitatory || dn.polarity != SynapsePolarity::Inhibitory)
            out_of_range("S_up-sl must be excitatory and S_dn-sl inhibitory (neuron " + idx + ")");
        if (up.weight < 7.0 - kTol || up.weight > 14.0 + kTol)
            out_of_range("S_up-sl weight " + std::to_string(up.weight) + " fA outside [7,14] (neuron " + idx + ")");
        if (up.tau < 3e-3 - kTol || up.tau > 6e-3 + kTol)
            out_of_range("S_up-sl tau outside [3,6] ms (neuron " + idx + ")");
        if (dn.weight < 7.0 - kTol || dn.weight > 14.0 + kTol)
            out_of_range("S_dn-sl weight " + std::to_string(dn.weight) + " fA outside [7,14] (neuron " + idx + ")");
        const double delta = up.tau - dn.tau;
        if (delta < 0.1e-3 - kTol || delta > 1e-3 + kTol)
            out_of_range("S_dn-sl tau must be S_up-sl tau minus [0.1,1] ms (neuron " + idx + ")");
    }
    expect_fixed(up_di, 21.0, SynapsePolarity::Excitatory, 5e-3, "S_up-di");
    expect_fixed(dn_di, 21.0, SynapsePolarity::Excitatory, 5e-3, "S_dn-di");
    expect_fixed(di_gi, 17.5, SynapsePolarity::Inhibitory, 20e-3, "S_di-gi");
    expect_fixed(gi_sl, 24.5, SynapsePolarity::Inhibitory, 5e-3, "S_gi-sl");
    if (!(poiss_gi.weight > 0.0) || poiss_gi.polarity != SynapsePolarity::Excitatory ||
        std::abs(poiss_gi.tau - 5e-3) > kTol)
        out_of_range("S_poiss-gi must be excitatory, positive, tau 5 ms");
    if (!(poisson_rate > 0.0)) out_of_range("poisson rate must be positive");
    expect_neuron(second_layer, tick, "second-layer");
    expect_neuron(dis_inhibitory, tick, "dis-inhibitory");
    expect_neuron(global_inhibitory, tick, "global-inhibitory");
}

ExponentialSynapse::ExponentialSynapse(double weight, double tau, double tick)
    : weight_(weight), decay_(std::exp(-tick / tau)) {}

std::size_t SpikeRaster::second_layer_count() const {
    std::size_t n = 0;
    for (const auto& s : second_layer) n += s.size();
    return n;
}

std::vector<double> SpikeRaster::pooled_second_layer() const {
    std::vector<double> out;
    out.reserve(second_layer_count());
    for (const auto& s : second_layer) out.insert(out.end(), s.begin(), s.end());
    std::sort(out.begin(), out.end());
    return out;
}

void write_raster_csv(const SpikeRaster& raster, std::ostream& out) {
    out << "neuron_id,population,timestamp_s\n";
    out.precision(17);
    for (std::size_t i = 0; i < raster.second_layer.size(); ++i)
        for (double t : raster.second_layer[i]) out << i << ",SecondLayer," << t << '\n';
    for (double t : raster.dis_inhibitory) out << "0,DisInhibitory," << t << '\n';
    for (double t : raster.global_inhibitory) out << "0,GlobalInhibitory," << t << '\n';
}

std::vector<double> make_poisson_train(double rate, std::uint64_t seed, double duration, PoissonMode mode, double t0) {
    std::vector<double> out;
    if (mode == PoissonMode::Disabled || !(duration > 0.0)) return out;
    if (!(rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "poisson rate must be positive");
    if (mode == PoissonMode::Regular) {
        for (std::size_t j = 0;; ++j) {
            const double t = static_cast<double>(j) / rate;
            if (t >= duration) break;
            out.push_back(t0 + t);
        }
        return out;
    }
    // Own uniform -> exponential transform: mt19937_64 output is fixed by the
    // standard, std::exponential_distribution is not.
    std::mt19937_64 gen(seed);
    double t = 0.0;
    while (true) {
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        t += -std::log1p(-u) / rate;
        if (t >= duration) break;
        out.push_back(t0 + t);
    }
    return out;
}

Network::Network(NetworkConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

Network build_network(const NetworkConfig& cfg) { return Network(cfg); }

std::vector<Connection> Network::connections() const {
    std::vector<Connection> out;
    for (std::size_t i = 0; i < cfg_.n_second_layer; ++i) {
        out.push_back({Node::InputUp, Node::SecondLayer, i, cfg_.up_sl[i]});
        out.push_back({Node::InputDn, Node::SecondLayer, i, cfg_.dn_sl[i]});
    }
    out.push_back({Node::InputUp, Node::DisInhibitory, 0, cfg_.up_di});
    out.push_back({Node::InputDn, Node::DisInhibitory, 0, cfg_.dn_di});
    out.push_back({Node::DisInhibitory, Node::GlobalInhibitory, 0, cfg_.di_gi});
    if (cfg_.poisson_mode != PoissonMode::Disabled)
        out.push_back({Node::Poisson, Node::GlobalInhibitory, 0, cfg_.poiss_gi});
    for (std::size_t i = 0; i < cfg_.n_second_layer; ++i)
        out.push_back({Node::GlobalInhibitory, Node::SecondLayer, i, cfg_.gi_sl});
    return out;
}

namespace {

struct Lif {
    double alpha;
    double threshold;
    std::int64_t refractory_ticks;

    Lif(const NeuronParams& p, double tick)
        : alpha(std::exp(-tick / p.tau_mem)),
          threshold(p.i_threshold),
          refractory_ticks(std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(p.refractory / tick - 1e-9)))) {}

    /// Advances one tick; returns true on a spike.
    bool step(double& i_mem, std::int64_t& blocked_until, std::int64_t k, double i_in) const {
        if (k < blocked_until) {
            i_mem = 0.0;
            return false;
        }
        i_mem = alpha * i_mem + (1.0 - alpha) * i_in;
        if (i_mem < 0.0) i_mem = 0.0;
        if (i_mem >= threshold) {
            i_mem = 0.0;
            blocked_until = k + refractory_ticks;
            return true;
        }
        return false;
    }
};

/// Walks a sorted list of times and reports how many land on each tick.
class TickCursor {
public:
    TickCursor(std::span<const double> times, double t0, double tick) : times_(times), t0_(t0), tick_(tick) {}

    int take(std::int64_t k) {
        int n = 0;
        while (pos_ < times_.size()) {
            const auto idx = std::llround((times_[pos_] - t0_) / tick_);
            if (idx > k) break;
            if (idx == k) ++n;
            ++pos_;
        }
        return n;
    }

private:
    std::span<const double> times_;
    double t0_;
    double tick_;
    std::size_t pos_ = 0;
};

}  // namespace

SpikeRaster Network::run(std::span<const double> up, std::span<const double> dn, double duration,
                         const RunOptions& opts, Traces* traces) const {
    const double tick = cfg_.tick;
    const auto n_ticks = static_cast<std::int64_t>(std::llround(duration / tick));
    const std::size_t n = cfg_.n_second_layer;

    std::vector<double> poisson_storage;
    std::span<const double> poisson;
    if (opts.poisson_times) {
        poisson = *opts.poisson_times;
    } else {
        poisson_storage = make_poisson_train(cfg_.poisson_rate, cfg_.poisson_seed, duration, cfg_.poisson_mode, opts.t0);
        poisson = poisson_storage;
    }

    TickCursor up_cur(up, opts.t0, tick), dn_cur(dn, opts.t0, tick), poi_cur(poisson, opts.t0, tick);

    // Second layer: per-neuron input synapses, one shared inhibitory trace from GI.
    std::vector<double> up_i(n, 0.0), dn_i(n, 0.0), up_decay(n), dn_decay(n), up_w(n), dn_w(n);
    for (std::size_t i = 0; i < n; ++i) {
        up_decay[i] = std::exp(-tick / cfg_.up_sl[i].tau);
        dn_decay[i] = std::exp(-tick / cfg_.dn_sl[i].tau);
        up_w[i] = cfg_.up_sl[i].weight;
        dn_w[i] = cfg_.dn_sl[i].weight;
    }
    std::vector<double> sl_mem(n, 0.0);
    std::vector<std::int64_t> sl_block(n, 0);
    ExponentialSynapse gi_sl(cfg_.gi_sl.weight, cfg_.gi_sl.tau, tick);
    ExponentialSynapse up_di(cfg_.up_di.weight, cfg_.up_di.tau, tick);
    ExponentialSynapse dn_di(cfg_.dn_di.weight, cfg_.dn_di.tau, tick);
    ExponentialSynapse di_gi(cfg_.di_gi.weight, cfg_.di_gi.tau, tick);
    ExponentialSynapse poiss_gi(cfg_.poiss_gi.weight, cfg_.poiss_gi.tau, tick);

    const Lif sl_lif(cfg_.second_layer, tick), di_lif(cfg_.dis_inhibitory, tick), gi_lif(cfg_.global_inhibitory, tick);
    double di_mem = 0.0, gi_mem = 0.0;
    std::int64_t di_block = 0, gi_block = 0;
    bool di_fired = false, gi_fired = false;

    SpikeRaster raster;
    raster.second_layer.resize(n);

    const std::size_t probe = opts.trace_second_layer_neuron.value_or(0);
    if (traces) {
        *traces = Traces{};
        traces->sl_probe = probe;
        for (auto* v : {&traces->di_i_mem, &traces->gi_i_in, &traces->gi_i_mem, &traces->sl_i_in, &traces->sl_i_mem})
            v->reserve(static_cast<std::size_t>(std::max<std::int64_t>(n_ticks, 0)));
    }

    for (std::int64_t k = 0; k < n_ticks; ++k) {
        const double t = opts.t0 + static_cast<double>(k) * tick;
        const int n_up = up_cur.take(k);
        const int n_dn = dn_cur.take(k);
        const int n_poi = poi_cur.take(k);

        up_di.step(n_up);
        dn_di.step(n_dn);
        di_gi.step(di_fired ? 1 : 0);
        poiss_gi.step(n_poi);
        gi_sl.step(gi_fired ? 1 : 0);

        di_fired = di_lif.step(di_mem, di_block, k, up_di.current() + dn_di.current());
        if (di_fired) raster.dis_inhibitory.push_back(t);

        const double gi_in = poiss_gi.current() - di_gi.current();
        gi_fired = gi_lif.step(gi_mem, gi_block, k, gi_in);
        if (gi_fired) raster.global_inhibitory.push_back(t);

        if (!opts.skip_second_layer) {
            const double inh = gi_sl.current();
            for (std::size_t i = 0; i < n; ++i) {
                up_i[i] = up_i[i] * up_decay[i] + up_w[i] * n_up;
                dn_i[i] = dn_i[i] * dn_decay[i] + dn_w[i] * n_dn;
                if (sl_lif.step(sl_mem[i], sl_block[i], k, up_i[i] - dn_i[i] - inh)) raster.second_layer[i].push_back(t);
            }
        }

        if (traces) {
            traces->di_i_mem.push_back(di_mem);
            traces->gi_i_in.push_back(gi_in);
            traces->gi_i_mem.push_back(gi_mem);
            const double sl_in = probe < n ? up_i[probe] - dn_i[probe] - gi_sl.current() : 0.0;
            traces->sl_i_in.push_back(sl_in);
            traces->sl_i_mem.push_back(probe < n ? sl_mem[probe] : 0.0);
        }
    }
    return raster;
}

std::vector<double> second_layer_drive(const NetworkConfig& cfg, std::span<const double> up, std::span<const double> dn,
                                       double duration, double t0) {
    const double tick = cfg.tick;
    const auto n_ticks = static_cast<std::size_t>(std::max<std::int64_t>(0, std::llround(duration / tick)));
    const std::size_t n = cfg.n_second_layer;
    std::vector<int> up_n(n_ticks, 0), dn_n(n_ticks, 0);
    {
        TickCursor uc(up, t0, tick), dc(dn, t0, tick);
        for (std::size_t k = 0; k < n_ticks; ++k) {
            up_n[k] = uc.take(static_cast<std::int64_t>(k));
            dn_n[k] = dc.take(static_cast<std::int64_t>(k));
        }
    }
    std::vector<double> drive(n * n_ticks);
    for (std::size_t i = 0; i < n; ++i) {
        const double ud = std::exp(-tick / cfg.up_sl[i].tau), dd = std::exp(-tick / cfg.dn_sl[i].tau);
        const double uw = cfg.up_sl[i].weight, dw = cfg.dn_sl[i].weight;
        double u = 0.0, d = 0.0;
        double* row = drive.data() + i * n_ticks;
        for (std::size_t k = 0; k < n_ticks; ++k) {
            u = u * ud + uw * up_n[k];
            d = d * dd + dw * dn_n[k];
            row[k] = u - d;
        }
    }
    return drive;
}

std::vector<std::vector<double>> second_layer_response(const NetworkConfig& cfg, std::span<const double> drive,
                                                       std::span<const double> gi_times, double duration, double t0,
                                                       std::size_t first_tick, bool stop_at_first,
                                                       std::span<const std::uint8_t> mask) {
    const double tick = cfg.tick;
    const auto n_ticks = static_cast<std::size_t>(std::max<std::int64_t>(0, std::llround(duration / tick)));
    const std::size_t n = cfg.n_second_layer;
    if (drive.size() != n * n_ticks) throw Error(ErrorCode::InvalidArgument, "drive does not match the network size");
    if (!mask.empty() && mask.size() != n) throw Error(ErrorCode::InvalidArgument, "mask does not match the network size");

    std::vector<double> inh(n_ticks, 0.0);
    {
        std::vector<char> fired(n_ticks, 0);
        for (double t : gi_times) {
            const auto k = std::llround((t - t0) / tick);
            if (k >= 0 && static_cast<std::size_t>(k) < n_ticks) fired[static_cast<std::size_t>(k)] = 1;
        }
        ExponentialSynapse gi_sl(cfg.gi_sl.weight, cfg.gi_sl.tau, tick);
        for (std::size_t k = 0; k < n_ticks; ++k) {
            gi_sl.step(k > 0 && fired[k - 1] ? 1 : 0);
            inh[k] = gi_sl.current();
        }
    }

    const Lif lif(cfg.second_layer, tick);
    std::vector<std::vector<double>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask.empty() && !mask[i]) continue;
        const double* row = drive.data() + i * n_ticks;
        double mem = 0.0;
        std::int64_t block = 0;
        for (std::size_t k = 0; k < n_ticks; ++k) {
            const bool spike = lif.step(mem, block, static_cast<std::int64_t>(k), row[k] - inh[k]);
            if (spike && k >= first_tick) {
                out[i].push_back(t0 + static_cast<double>(k) * tick);
                if (stop_at_first) return out;
            }
        }
    }
    return out;
}

std::vector<double> second_layer_bound(const NetworkConfig& cfg, std::span<const double> drive, double duration,
                                       std::size_t first_tick) {
    const auto n_ticks = static_cast<std::size_t>(std::max<std::int64_t>(0, std::llround(duration / cfg.tick)));
    const std::size_t n = cfg.n_second_layer;
    if (drive.size() != n * n_ticks) throw Error(ErrorCode::InvalidArgument, "drive does not match the network size");
    const double alpha = Lif(cfg.second_layer, cfg.tick).alpha;
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = drive.data() + i * n_ticks;
        double m = 0.0, peak = 0.0;
        for (std::size_t k = 0; k < n_ticks; ++k) {
            m = alpha * m + (1.0 - alpha) * row[k];
            if (m < 0.0) m = 0.0;
            if (k >= first_tick && m > peak) peak = m;
        }
        out[i] = peak;
    }
    return out;
}

SpikeRaster Network::run(const codec::SpikeTrain& train, double duration, const RunOptions& opts, Traces* traces) const {
    auto up = train.times(codec::Polarity::Up);
    auto dn = train.times(codec::Polarity::Dn);
    return run(up, dn, duration, opts, traces);
}

}  // namespace hfo::snn
