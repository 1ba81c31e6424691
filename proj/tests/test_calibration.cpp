#include "support.hpp"

#include "hfo/calibration.hpp"

using namespace hfo;
using namespace hfo::calib;
using hfo::test::code_of;
using synth::SnippetKind;

namespace {

std::vector<EncodedSnippet> separable_corpus() {
    synth::Corpus c;
    for (int i = 0; i < 4; ++i) {
        synth::SnippetSpec s;
        s.kind = SnippetKind::Hfo;
        s.amplitude_snr = 6.0;
        s.hfo_freq = 300.0 + 40.0 * i;
        s.seed = 10 + i;
        c.snippets.push_back(synth::generate_snippet(s));
    }
    for (int i = 0; i < 4; ++i) {
        synth::SnippetSpec s;
        s.kind = SnippetKind::Transient;
        s.seed = 20 + i;
        c.snippets.push_back(synth::generate_snippet(s));
    }
    return encode_corpus(c, FrontEndConfig{});
}

}  // namespace

TEST_CASE("encoded snippet window and support") {
    const auto corpus = synth::generate_corpus(2, 2, 3);
    const auto s = encode_snippet(corpus.snippets[0], FrontEndConfig{}, 0);
    CHECK(s.t0 == doctest::Approx(s.container_start - kNetworkLead));
    CHECK(s.duration == doctest::Approx(kNetworkLead + corpus.snippets[0].spec.duration));
    CHECK(s.threshold > 0.0);
    for (const auto& e : s.train.events) {
        CHECK(e.time_s >= s.t0 - 1e-12);
        CHECK(e.time_s < s.t0 + s.duration);
    }
    REQUIRE(s.has_support());
    CHECK(s.support_start >= s.event_start - 1e-9);
    CHECK(s.support_end <= s.event_end + 0.01);
    CHECK(s.cycles >= 1);
}

TEST_CASE("gate opening needs recent activity and a quiet stretch") {
    const double onset = 1.0;
    CHECK(gi_gate_opened(std::vector<double>{0.99, 1.002, 1.0135}, onset));
    CHECK_FALSE(gi_gate_opened(std::vector<double>{0.99, 1.008}, onset));   // fires inside the gap
    CHECK_FALSE(gi_gate_opened(std::vector<double>{0.95, 1.02}, onset));    // silent before onset too
    CHECK(gi_gate_opened(std::vector<double>{0.975}, onset));
}

TEST_CASE("separable corpus calibrates and the chosen network handles every snippet") {
    const auto snippets = separable_corpus();
    const auto r = calibrate_unknowns(snippets, snn::NetworkConfig::with_grid());
    CHECK(r.admissible);
    CHECK(r.latency_met);
    CHECK(r.hfo_detected == 4);
    CHECK(r.transient_rejected == 4);
    for (const auto& s : snippets) {
        const auto o = evaluate_snippet(r.config, s);
        CHECK(o.responded == (s.kind == SnippetKind::Hfo));
        if (s.kind == SnippetKind::Hfo) CHECK(o.gate_opened);
    }
}

TEST_CASE("indistinguishable HFO and transient snippets have no admissible configuration") {
    auto snippets = separable_corpus();
    snippets.resize(4);
    for (std::size_t i = 0; i < 4; ++i) {
        auto copy = snippets[i];
        copy.kind = SnippetKind::Transient;
        snippets.push_back(copy);
    }
    auto grid = default_grid();
    grid.sl_tau = {3e-3, 6e-3};
    CHECK(code_of([&] { calibrate_unknowns(snippets, snn::NetworkConfig::with_grid(), grid); }) ==
          ErrorCode::NoAdmissibleConfig);
    const auto best = calibrate_unknowns(snippets, snn::NetworkConfig::with_grid(), grid, SearchMode::BestEffort);
    CHECK_FALSE(best.admissible);
    // Specificity ranks first: the best candidate stays silent on every copy.
    CHECK(best.transient_rejected == 4);
}

TEST_CASE("calibration needs both labels") {
    auto snippets = separable_corpus();
    snippets.resize(4);
    CHECK(code_of([&] { calibrate_unknowns(snippets, snn::NetworkConfig::with_grid()); }) == ErrorCode::EmptyCorpus);
}

TEST_CASE("stored calibration stays silent on the default corpus transients and background") {
    const auto corpus = synth::generate_corpus(11, 11, 1, 8, 5.0);
    const auto snippets = encode_corpus(corpus, FrontEndConfig{});
    const auto cfg = snn::NetworkConfig::with_grid();
    std::size_t hfo = 0;
    for (const auto& s : snippets) {
        const auto o = evaluate_snippet(cfg, s);
        if (s.kind == SnippetKind::Hfo)
            hfo += o.responded;
        else
            CHECK_FALSE(o.responded);
    }
    CHECK(hfo >= 1);
}
