#include <doctest.h>

#include <cmath>
#include <variant>

#include "ringdps/errors.hpp"
#include "ringdps/io.hpp"
#include "ringdps/scenario.hpp"

using namespace ringdps;

namespace {

// Small Monte-Carlo scenario used by the fast tests: one 32768-symbol chunk
// through the gated demodulation ring at 12 dB total loss.
ScenarioConfig small_mc() {
    ScenarioConfig c;
    c.demodulator = Demodulator::mrr;
    c.ring = RingSpec{120.1e9, 1.3e9, 23.7, 0.0};
    c.link.total_loss_db = 12.0;
    c.frame_length = 32768;
    c.seed = 7;
    c.mode = RunMode::monte_carlo;
    c.oversampling = 16;
    c.window_fraction = 0.125;
    c.window_alignment = WindowAlignment::leading;
    return c;
}

SweepSpec parse_sweep_preset(const std::string& name) {
    return std::get<SweepSpec>(parse_config_text(preset_json(name), true));
}

ScenarioConfig parse_scenario_preset(const std::string& name) {
    return std::get<ScenarioConfig>(parse_config_text(preset_json(name), true));
}

}  // namespace

TEST_CASE("shipped preset inventory") {
    const auto names = preset_names();
    REQUIRE(names.size() == 5);
    CHECK(names[0] == "paper_bicmos");
    CHECK(names[1] == "paper_colorless");
    CHECK(names[2] == "paper_fig2c");
    CHECK(names[3] == "paper_fig4b");
    CHECK(names[4] == "paper_keyrate");
    CHECK_THROWS_AS(preset_json("nope"), missing_file_error);
}

TEST_CASE("presets parse strictly and round trip through the serializer") {
    for (const auto& name : preset_names()) {
        std::string warnings;
        const ParsedConfig parsed = parse_config_text(preset_json(name), true, &warnings);
        CHECK(warnings.empty());
        const std::string dumped = std::visit(
            [](const auto& c) { return config_to_json(c); }, parsed);
        const ParsedConfig again = parse_config_text(dumped, true);
        const std::string dumped2 = std::visit(
            [](const auto& c) { return config_to_json(c); }, again);
        CHECK(dumped == dumped2);
    }
}

TEST_CASE("extinction sweep reproduces the error-rate rolloff") {
    const SweepSpec spec = parse_sweep_preset("paper_fig2c");
    const ResultTable table = sweep(spec);
    REQUIRE(table.rows.size() == 21);

    double prev = 1.0;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const ResultRow& row = table.rows[i];
        CHECK(row.mode == "analytic");
        CHECK(row.status == "ok");
        CHECK(row.value == doctest::Approx(10.0 + static_cast<double>(i)));
        CHECK(row.qber < prev);
        CHECK(row.qber_sigma == 0.0);
        prev = row.qber;
    }

    // the 18 dB point is the headline number
    CHECK(std::abs(table.rows[8].qber - 0.0232557) < 1e-6);
    CHECK(std::abs(table.rows[8].qber - 0.0193) < 0.005);
}

TEST_CASE("loss sweep bends into a U around the afterpulse-dark crossover") {
    const SweepSpec spec = parse_sweep_preset("paper_fig4b");
    const ResultTable table = sweep(spec);
    REQUIRE(table.rows.size() == 71);

    std::size_t best = 0;
    double prev_rate = 1e18;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const ResultRow& row = table.rows[i];
        CHECK(row.status == "ok");
        CHECK(row.raw_rate_cps < prev_rate);   // rate falls monotonically with loss
        prev_rate = row.raw_rate_cps;
        if (row.qber < table.rows[best].qber) best = i;
    }

    CHECK(best > 0);
    CHECK(best + 1 < table.rows.size());
    CHECK(std::abs(table.rows[best].value - 19.95) < 1.0);
    CHECK(table.rows.front().qber > table.rows[best].qber + 0.001);
    CHECK(table.rows.back().qber > table.rows[best].qber + 0.005);

    // per-point seeds differ for loss sweeps (independent experiments)
    CHECK(table.rows[0].seed != table.rows[1].seed);
}

TEST_CASE("transferred-receiver presets keep the expected ordering") {
    const ResultTable soi = run_scenario(parse_scenario_preset("paper_keyrate"));
    const ResultTable bicmos = run_scenario(parse_scenario_preset("paper_bicmos"));
    REQUIRE(soi.rows.size() == 1);
    REQUIRE(bicmos.rows.size() == 1);

    CHECK(std::abs(soi.rows[0].qber - 0.017430) < 1e-6);
    CHECK(std::abs(bicmos.rows[0].qber - 0.018340) < 1e-6);
    CHECK(bicmos.rows[0].qber > soi.rows[0].qber);
    CHECK(bicmos.rows[0].qber < 0.05);
    CHECK(soi.rows[0].secure_bits_per_symbol > 0.0);
}

TEST_CASE("gated ring scenario measures its own demodulation extinction") {
    const ExtinctionEstimate est = scenario_extinction(small_mc());
    CHECK(!est.ceiling_hit);
    CHECK(std::abs(est.extinction_db - 25.8) < 0.4);
}

TEST_CASE("monte carlo runs are reproducible") {
    const ScenarioConfig config = small_mc();
    const ResultTable a = run_scenario(config);
    const ResultTable b = run_scenario(config);
    REQUIRE(a.rows.size() == 1);
    CHECK(a.rows[0].qber == b.rows[0].qber);
    CHECK(a.rows[0].qber_sigma == b.rows[0].qber_sigma);
    CHECK(a.rows[0].raw_rate_cps == b.rows[0].raw_rate_cps);
    CHECK(a.rows[0].status == b.rows[0].status);

    // one short chunk at 12 dB collects a few dozen clicks only
    CHECK(a.rows[0].status == "warn:clicks_below_target");
    CHECK(a.rows[0].qber_sigma > 0.0);
}

TEST_CASE("mode both yields the analytic row then the sampled row") {
    ScenarioConfig config = small_mc();
    config.mode = RunMode::both;
    const ResultTable table = run_scenario(config);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].mode == "analytic");
    CHECK(table.rows[1].mode == "monte_carlo");
    CHECK(table.rows[0].qber_sigma == 0.0);
}

TEST_CASE("whole-period carrier steps leave the sampled run untouched") {
    SweepSpec spec;
    spec.variable = SweepVariable::channel_index;
    spec.values = {-3.0, 0.0, 2.0};
    spec.base = small_mc();
    const ResultTable table = sweep(spec);
    REQUIRE(table.rows.size() == 3);

    for (const ResultRow& row : table.rows) {
        CHECK(row.seed == spec.base.seed);   // shared randomness by design
        CHECK(row.qber == table.rows[0].qber);
        CHECK(row.qber_sigma == table.rows[0].qber_sigma);
        CHECK(row.raw_rate_cps == table.rows[0].raw_rate_cps);
    }
}

TEST_CASE("sweep records per-point failures in the row") {
    SweepSpec spec;
    spec.variable = SweepVariable::total_loss_db;
    spec.values = {10.0, -3.0, 12.0};
    spec.base = small_mc();
    spec.base.mode = RunMode::analytic;
    spec.base.extinction_db_override = 18.0;
    const ResultTable table = sweep(spec);
    REQUIRE(table.rows.size() == 3);
    CHECK(table.rows[0].status == "ok");
    CHECK(table.rows[1].status.rfind("error:", 0) == 0);
    CHECK(table.rows[2].status == "ok");
    CHECK(table.rows[1].qber == 0.0);
}

TEST_CASE("extinction sweeps demand the analytic mode") {
    SweepSpec spec;
    spec.variable = SweepVariable::extinction_db;
    spec.values = {15.0, 20.0};
    spec.base = small_mc();   // monte_carlo
    CHECK_THROWS_AS(sweep(spec), invariant_error);
}

TEST_CASE("configuration guards") {
    ScenarioConfig c = small_mc();
    c.ring.fwhm_hz = 80e9;
    CHECK_THROWS_AS(c.validate(), invariant_error);

    c = small_mc();
    c.frame_length = 5000;
    CHECK_THROWS_AS(c.validate(), invariant_error);

    c = small_mc();
    c.oversampling = 8;
    CHECK_THROWS_AS(c.validate(), invariant_error);

    c = small_mc();
    c.channel_index = 2000;
    CHECK_THROWS_AS(c.validate(), invariant_error);

    c = small_mc();
    c.window_fraction = 0.0;
    CHECK_THROWS_AS(c.validate(), invariant_error);

    c = small_mc();
    c.channel_index = 2;
    c.carrier_detuning_hz = 1e9;
    CHECK(c.effective_carrier_hz() == doctest::Approx(2.0 * 120.1e9 + 1e9));
}
