#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hfo/dsp.hpp"
#include "hfo/spike_codec.hpp"

namespace hfo::snn {

enum class Population : std::uint8_t { SecondLayer, DisInhibitory, GlobalInhibitory };
enum class SynapsePolarity : std::uint8_t { Excitatory, Inhibitory };

const char* to_string(Population p);
Population parse_population(const std::string& text);

struct SynapseParams {
    double weight = 0.0;  // fA, always positive
    SynapsePolarity polarity = SynapsePolarity::Excitatory;
    double tau = 5e-3;  // seconds

    bool operator==(const SynapseParams&) const = default;
};

/// Current-mode leaky integrate-and-fire constants. The membrane current
/// relaxes toward the net synaptic input with time constant tau_mem.
struct NeuronParams {
    double tau_mem = 1e-3;      // seconds
    double i_threshold = 10.0;  // fA
    double refractory = 1e-3;   // seconds
    double reset = 0.0;         // fA

    bool operator==(const NeuronParams&) const = default;
};

struct NeuronState {
    double i_mem = 0.0;  // fA
    double i_in = 0.0;   // fA, net synaptic input
    double refractory_until = 0.0;
};

enum class PoissonMode : std::uint8_t { Poisson, Regular, Disabled };

const char* to_string(PoissonMode m);
PoissonMode parse_poisson_mode(const std::string& text);

/// Full parameterisation of the detector network.
struct NetworkConfig {
    std::size_t n_second_layer = 64;
    std::vector<SynapseParams> up_sl;  // one per second-layer neuron
    std::vector<SynapseParams> dn_sl;
    SynapseParams up_di{21.0, SynapsePolarity::Excitatory, 5e-3};
    SynapseParams dn_di{21.0, SynapsePolarity::Excitatory, 5e-3};
    SynapseParams di_gi{17.5, SynapsePolarity::Inhibitory, 20e-3};
    SynapseParams poiss_gi{5.0, SynapsePolarity::Excitatory, 5e-3};
    SynapseParams gi_sl{24.5, SynapsePolarity::Inhibitory, 5e-3};
    double poisson_rate = 135.0;
    std::uint64_t poisson_seed = 1;
    PoissonMode poisson_mode = PoissonMode::Poisson;
    NeuronParams second_layer;
    NeuronParams dis_inhibitory;
    NeuronParams global_inhibitory;
    double tick = 1.0 / dsp::kOversampleRate;

    /// Second layer laid on a rows x cols grid over weight [7,14] fA x tau
    /// [3,6] ms. DN synapses reuse the UP weight; their tau is shortened by a
    /// delta in [0.1,1] ms assigned by the Latin square (row + col) mod 8 so
    /// every weight row and every tau column sees each delta.
    static NetworkConfig with_grid(std::size_t rows = 8, std::size_t cols = 8);

    /// Throws OutOfRangeParam when a synapse leaves the published ranges.
    void validate() const;

    bool operator==(const NetworkConfig&) const = default;
};

/// Exponentially decaying synaptic current: per tick I <- I * exp(-tick/tau)
/// + weight * spikes.
class ExponentialSynapse {
public:
    ExponentialSynapse() = default;
    ExponentialSynapse(double weight, double tau, double tick);

    void step(int spikes) { current_ = current_ * decay_ + weight_ * spikes; }
    double current() const { return current_; }
    double decay() const { return decay_; }
    void reset() { current_ = 0.0; }

private:
    double weight_ = 0.0;
    double decay_ = 0.0;
    double current_ = 0.0;
};

enum class Node : std::uint8_t { InputUp, InputDn, Poisson, SecondLayer, DisInhibitory, GlobalInhibitory };

const char* to_string(Node n);

struct Connection {
    Node from;
    Node to;
    std::size_t to_index = 0;  // second-layer neuron index, 0 otherwise
    SynapseParams synapse;
};

struct NeuronSpike {
    std::size_t neuron = 0;
    double time_s = 0.0;
};

/// Per-population spike lists; `second_layer[i]` holds neuron i's spike times.
struct SpikeRaster {
    std::vector<std::vector<double>> second_layer;
    std::vector<double> dis_inhibitory;
    std::vector<double> global_inhibitory;

    std::size_t second_layer_count() const;
    /// All second-layer spike times, merged and sorted.
    std::vector<double> pooled_second_layer() const;

    bool operator==(const SpikeRaster&) const = default;
};

/// `neuron_id,population,timestamp_s`, one row per spike.
void write_raster_csv(const SpikeRaster& raster, std::ostream& out);

/// Membrane and input traces of the two artifact-rejection neurons and one
/// second-layer neuron, one sample per tick.
struct Traces {
    std::vector<double> di_i_mem;
    std::vector<double> gi_i_in;
    std::vector<double> gi_i_mem;
    std::vector<double> sl_i_in;
    std::vector<double> sl_i_mem;
    std::size_t sl_probe = 0;
};

struct RunOptions {
    double t0 = 0.0;
    /// Overrides the configured Poisson source when set.
    std::optional<std::vector<double>> poisson_times;
    std::optional<std::size_t> trace_second_layer_neuron;
    /// Skip simulating the second layer; only the artifact-rejection pair is run.
    bool skip_second_layer = false;
};

/// Exponential inter-arrival (or strictly periodic) drive on [t0, t0 + duration).
std::vector<double> make_poisson_train(double rate, std::uint64_t seed, double duration, PoissonMode mode,
                                       double t0 = 0.0);

/// Clock-driven simulation at one tick per step. A spike emitted on tick k
/// reaches its targets on tick k + 1.
class Network {
public:
    explicit Network(NetworkConfig cfg);

    const NetworkConfig& config() const { return cfg_; }
    std::size_t dynamic_neuron_count() const { return cfg_.n_second_layer + 2; }
    std::size_t input_source_count() const { return 2; }
    std::size_t poisson_source_count() const { return cfg_.poisson_mode == PoissonMode::Disabled ? 0 : 1; }

    std::vector<Connection> connections() const;

    SpikeRaster run(std::span<const double> up, std::span<const double> dn, double duration,
                    const RunOptions& opts = {}, Traces* traces = nullptr) const;

    SpikeRaster run(const codec::SpikeTrain& train, double duration, const RunOptions& opts = {},
                    Traces* traces = nullptr) const;

private:
    NetworkConfig cfg_;
};

Network build_network(const NetworkConfig& cfg);

/// Net UP-minus-DN synaptic current into every second-layer neuron, one value
/// per tick, neuron-major (`drive[i * n_ticks + k]`). Independent of the
/// neuron constants and of the inhibitory pair.
std::vector<double> second_layer_drive(const NetworkConfig& cfg, std::span<const double> up, std::span<const double> dn,
                                       double duration, double t0 = 0.0);

/// Replays the second layer against a precomputed drive and a given
/// global-inhibitory spike list. Matches Network::run exactly. Spikes before
/// `first_tick` are simulated but not reported; with `stop_at_first` the
/// function returns as soon as one spike is reported. Neurons whose `mask`
/// entry is zero are left silent (an empty mask simulates all).
std::vector<std::vector<double>> second_layer_response(const NetworkConfig& cfg, std::span<const double> drive,
                                                       std::span<const double> gi_times, double duration,
                                                       double t0 = 0.0, std::size_t first_tick = 0,
                                                       bool stop_at_first = false,
                                                       std::span<const std::uint8_t> mask = {});

/// Per-neuron upper bound on the second-layer membrane current from
/// `first_tick` on, for any non-negative inhibition: the uninhibited,
/// never-reset trajectory's maximum. A neuron whose bound stays below its
/// threshold cannot fire there.
std::vector<double> second_layer_bound(const NetworkConfig& cfg, std::span<const double> drive, double duration,
                                       std::size_t first_tick = 0);

}  // namespace hfo::snn
