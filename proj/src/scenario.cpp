#include "ringdps/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ringdps/errors.hpp"
#include "ringdps/rng.hpp"

namespace ringdps {

namespace {

constexpr std::size_t kChunkSymbols = 32768;
constexpr std::size_t kCalibrationSymbols = 32768;
constexpr std::size_t kExtinctionProbeSymbols = 4096;
constexpr std::uint64_t kClickTarget = 1000;   // below this, error bars widen

const char* mode_name(RunMode mode) {
    switch (mode) {
        case RunMode::analytic: return "analytic";
        case RunMode::monte_carlo: return "monte_carlo";
        case RunMode::both: return "both";
    }
    return "analytic";
}

ResponseFn demod_response(const ScenarioConfig& config) {
    if (config.demodulator == Demodulator::mrr) {
        RingModel model = fit_ring_params(config.ring.fsr_hz, config.ring.fwhm_hz,
                                          config.ring.extinction_db);
        model.resonance_offset_hz = config.ring.resonance_offset_hz;
        return ring_response_fn(model);
    }
    return mzi_response_fn(config.mzi);
}

// Secure bits per transmitted symbol from a QBER and a sifted (= registered
// click) rate; clamped at zero. Past ~37% the collision bound degenerates
// and the fraction is far below zero anyway.
double secure_bits(double qber, double sifted_rate_cps, double symbol_rate_hz,
                   double f_ec) {
    if (!(qber >= 0.0) || qber > 0.375) return 0.0;
    const double fraction = secure_fraction(qber, f_ec);
    return std::max(0.0, sifted_rate_cps * fraction) / symbol_rate_hz;
}

ResultRow analytic_row(const ScenarioConfig& config, const ResponseFn& response) {
    double eps_db;
    if (config.extinction_db_override) {
        eps_db = *config.extinction_db_override;
    } else {
        eps_db = demod_extinction(response, config.link.symbol_rate_hz,
                                  config.effective_carrier_hz(), config.link.mu,
                                  kExtinctionProbeSymbols, config.oversampling,
                                  config.window_fraction, config.window_alignment)
                     .extinction_db;
    }

    LinkParams link = config.link;
    link.extinction_db = eps_db;
    // A gated accept window shortens the dark-count exposure per slot.
    SpadModel spad = config.spad;
    spad.dark_cps *= config.window_fraction;

    const QberBreakdown bd = qber_analytic(link, spad);

    ResultRow row;
    row.value = config.link.total_loss_db;
    row.qber = bd.qber;
    row.qber_sigma = 0.0;
    row.raw_rate_cps = bd.raw_rate_cps;
    row.secure_bits_per_symbol =
        secure_bits(bd.qber, bd.raw_rate_cps, config.link.symbol_rate_hz, config.f_ec);
    row.mode = "analytic";
    row.seed = config.seed;
    return row;
}

ResultRow monte_carlo_row(const ScenarioConfig& config, const ResponseFn& response) {
    const double carrier = config.effective_carrier_hz();
    const double target_photons =
        config.link.mu * std::pow(10.0, -config.link.total_loss_db / 10.0);

    // All full chunks share one pre-sampled response; a short tail chunk
    // resamples once.
    SampledResponse bins;
    auto frame_slots = [&](const SymbolFrame& frame) {
        SampledField field =
            synthesize_field(frame, config.pulse_shape, config.link.mu,
                             config.link.symbol_rate_hz, config.oversampling, carrier);
        if (bins.bins.size() != field.samples.size())
            bins = sample_response(response, field.samples.size(),
                                   field.sample_rate_hz, field.carrier_detuning_hz);
        field = apply_filter(field, bins);
        return integrate_slots(field, config.window_fraction, config.window_alignment);
    };

    // Calibrate the channel scalar on a dedicated frame: whatever the
    // demodulator's insertion and windowing cost, the detector sees a mean
    // of mu*10^(-L/10) photons per slot. Loss is linear and slot-diagonal,
    // so a scalar on slot energies is exact and costs nothing per slot.
    const SymbolFrame cal_frame = random_frame(
        kCalibrationSymbols, mix_seed(config.seed, stream_tag::calibration));
    const SlotEnergies cal_slots = frame_slots(cal_frame);
    double cal_sum = 0.0;
    std::size_t cal_n = 0;
    for (std::size_t k = kLeadingGuardSymbols;
         k < kCalibrationSymbols - kTrailingGuardSymbols; ++k) {
        cal_sum += cal_slots.photons[k];
        ++cal_n;
    }
    const double cal_mean = cal_sum / static_cast<double>(cal_n);
    if (!(cal_mean > 0.0))
        throw invariant_error("monte_carlo: demodulated calibration energy is zero");
    const double alpha = target_photons / cal_mean;

    ClickSimulator sim(config.spad, config.seed);
    std::uint64_t clicks_total = 0, clicks_space = 0, clicks_all = 0;
    std::uint64_t chunk_index = 0;
    std::uint64_t remaining = config.frame_length;
    while (remaining > 0) {
        const auto len = static_cast<std::size_t>(
            std::min<std::uint64_t>(kChunkSymbols, remaining));
        const SymbolFrame frame = random_frame(
            len, mix_seed(config.seed, stream_tag::frame, chunk_index));
        SlotEnergies slots = frame_slots(frame);
        for (auto& p : slots.photons) p *= alpha;

        const std::size_t begin = std::min<std::size_t>(kLeadingGuardSymbols, len);
        const std::size_t end =
            len > kTrailingGuardSymbols ? len - kTrailingGuardSymbols : begin;
        const auto counts = sim.process_frame(slots, frame.diff_bits, begin,
                                              std::max(begin, end));
        clicks_total += counts.clicks_total;
        clicks_space += counts.clicks_space;
        clicks_all += counts.clicks_all;

        remaining -= len;
        ++chunk_index;
    }

    const double elapsed_s =
        static_cast<double>(sim.slots_processed()) / config.link.symbol_rate_hz;

    ResultRow row;
    row.value = config.link.total_loss_db;
    row.mode = "monte_carlo";
    row.seed = config.seed;
    row.raw_rate_cps = static_cast<double>(clicks_all) / elapsed_s;

    const double n = static_cast<double>(clicks_total);
    const double s = static_cast<double>(clicks_space);
    row.qber = clicks_total ? s / n : 0.0;
    if (clicks_total >= kClickTarget) {
        row.qber_sigma = std::sqrt(row.qber * (1.0 - row.qber) / n);
    } else {
        // too few clicks for the plain binomial estimate: widen with the
        // plus-four adjustment and flag the row
        const double n4 = n + 4.0;
        const double q4 = (s + 2.0) / n4;
        row.qber_sigma = std::sqrt(q4 * (1.0 - q4) / n4);
        row.status = "warn:clicks_below_target";
    }
    row.secure_bits_per_symbol =
        secure_bits(row.qber, row.raw_rate_cps, config.link.symbol_rate_hz, config.f_ec);
    return row;
}

}  // namespace

double ScenarioConfig::effective_carrier_hz() const {
    return carrier_detuning_hz + static_cast<double>(channel_index) * ring.fsr_hz;
}

void ScenarioConfig::validate() const {
    if (!(ring.fsr_hz > 0.0))
        throw invariant_error("ring.fsr_hz must be positive");
    if (!(ring.fwhm_hz > 0.0 && ring.fwhm_hz < 0.5 * ring.fsr_hz))
        throw invariant_error("ring.fwhm_hz must lie in (0, fsr_hz/2)");
    if (!(ring.extinction_db > 0.0))
        throw invariant_error("ring.extinction_db must be positive");
    if (!std::isfinite(ring.resonance_offset_hz))
        throw invariant_error("ring.resonance_offset_hz must be finite");
    mzi.validate();
    link.validate();
    spad.validate();
    if (extinction_db_override && !(*extinction_db_override > 0.0))
        throw invariant_error("extinction_db must be positive");
    if (mode != RunMode::analytic && frame_length < 10000)
        throw invariant_error("frame_length must be >= 10000 for monte_carlo");
    if (oversampling < 16 || oversampling > 1024)
        throw invariant_error("oversampling must lie in [16, 1024]");
    if (!(window_fraction > 0.0 && window_fraction <= 1.0))
        throw invariant_error("window_fraction must lie in (0, 1]");
    if (!std::isfinite(carrier_detuning_hz))
        throw invariant_error("carrier_detuning_hz must be finite");
    if (std::abs(channel_index) > 1000)
        throw invariant_error("channel_index must lie in [-1000, 1000]");
    if (!(f_ec >= 1.0))
        throw invariant_error("f_ec must be >= 1");
}

void SweepSpec::validate() const {
    if (values.empty())
        throw invariant_error("sweep.values must not be empty");
    for (const double v : values) {
        if (!std::isfinite(v))
            throw invariant_error("sweep.values must be finite");
    }
    if (variable == SweepVariable::channel_index) {
        for (const double v : values) {
            if (std::abs(v - std::round(v)) > 1e-9)
                throw invariant_error("sweep.values must be integers for channel_index");
        }
    }
    if (variable == SweepVariable::extinction_db && base.mode != RunMode::analytic)
        throw invariant_error(
            "extinction_db sweeps drive the analytic error model; set mode "
            "to analytic (Monte-Carlo extinction is set by the ring itself)");
    base.validate();
}

ResultTable run_scenario(const ScenarioConfig& config) {
    config.validate();
    const ResponseFn response = demod_response(config);

    ResultTable table;
    if (config.mode != RunMode::monte_carlo)
        table.rows.push_back(analytic_row(config, response));
    if (config.mode != RunMode::analytic)
        table.rows.push_back(monte_carlo_row(config, response));
    return table;
}

ResultTable sweep(const SweepSpec& spec) {
    spec.validate();

    ResultTable out;
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        const double v = spec.values[i];
        ScenarioConfig config = spec.base;
        switch (spec.variable) {
            case SweepVariable::extinction_db:
                config.extinction_db_override = v;
                break;
            case SweepVariable::total_loss_db:
                config.link.total_loss_db = v;
                break;
            case SweepVariable::carrier_detuning_hz:
                config.carrier_detuning_hz = v;
                break;
            case SweepVariable::channel_index:
                config.channel_index = static_cast<int>(std::llround(v));
                break;
        }
        // Loss and extinction points are independent experiments and get
        // their own sub-seed. Carrier and channel points deliberately share
        // the base seed: those sweeps compare the filter response across
        // points, and common randomness removes the shot-to-shot floor from
        // the spread.
        if (spec.variable == SweepVariable::extinction_db ||
            spec.variable == SweepVariable::total_loss_db) {
            config.seed = mix_seed(spec.base.seed, stream_tag::sweep_point, i);
        }

        try {
            const ResultTable point = run_scenario(config);
            for (ResultRow row : point.rows) {
                row.value = v;
                out.rows.push_back(std::move(row));
            }
        } catch (const error& e) {
            ResultRow row;
            row.value = v;
            row.mode = mode_name(config.mode);
            row.seed = config.seed;
            row.status = std::string("error:") + e.what();
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

ExtinctionEstimate scenario_extinction(const ScenarioConfig& config) {
    config.validate();
    return demod_extinction(demod_response(config), config.link.symbol_rate_hz,
                            config.effective_carrier_hz(), config.link.mu,
                            kExtinctionProbeSymbols, config.oversampling,
                            config.window_fraction, config.window_alignment);
}

namespace {

// Shipped presets. configs/*.json carries the same bytes; the CLI accepts
// either the name or the file.
const std::map<std::string, std::string>& preset_table() {
    static const std::map<std::string, std::string> presets = {
        {"paper_fig2c", R"({
  "type": "sweep",
  "variable": "extinction_db",
  "values": [10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30],
  "base": {
    "demodulator": "mrr",
    "ring": {"fsr_hz": 120.1e9, "fwhm_hz": 1.3e9, "extinction_db": 23.7},
    "link": {"mu": 0.1, "symbol_rate_hz": 1e9, "total_loss_db": 23.5, "demod_insertion_db": 16.7},
    "spad": {"eta": 0.1, "dark_cps": 550, "afterpulse_prob": 8e-4, "detrap_time_s": 100e-6, "dead_time_s": 1e-6},
    "mode": "analytic",
    "seed": 1
  }
}
)"},
        {"paper_fig4b", R"({
  "type": "sweep",
  "variable": "total_loss_db",
  "values": [5, 5.5, 6, 6.5, 7, 7.5, 8, 8.5, 9, 9.5, 10, 10.5, 11, 11.5, 12, 12.5, 13, 13.5, 14, 14.5,
             15, 15.5, 16, 16.5, 17, 17.5, 18, 18.5, 19, 19.5, 20, 20.5, 21, 21.5, 22, 22.5, 23, 23.5,
             24, 24.5, 25, 25.5, 26, 26.5, 27, 27.5, 28, 28.5, 29, 29.5, 30, 30.5, 31, 31.5, 32, 32.5,
             33, 33.5, 34, 34.5, 35, 35.5, 36, 36.5, 37, 37.5, 38, 38.5, 39, 39.5, 40],
  "base": {
    "demodulator": "mrr",
    "ring": {"fsr_hz": 120.1e9, "fwhm_hz": 1.3e9, "extinction_db": 23.7},
    "link": {"mu": 0.1, "symbol_rate_hz": 1e9, "total_loss_db": 23.5, "demod_insertion_db": 16.7},
    "extinction_db": 18.0,
    "spad": {"eta": 0.1, "dark_cps": 550, "afterpulse_prob": 8e-4, "detrap_time_s": 100e-6, "dead_time_s": 1e-6},
    "mode": "analytic",
    "seed": 1
  }
}
)"},
        {"paper_colorless", R"({
  "type": "sweep",
  "variable": "channel_index",
  "values": [-3, -2, -1, 0, 1, 2, 3],
  "base": {
    "demodulator": "mrr",
    "ring": {"fsr_hz": 120.1e9, "fwhm_hz": 1.3e9, "extinction_db": 23.7},
    "link": {"mu": 0.1, "symbol_rate_hz": 1e9, "total_loss_db": 12.0, "demod_insertion_db": 16.7},
    "spad": {"eta": 0.1, "dark_cps": 550, "afterpulse_prob": 8e-4, "detrap_time_s": 100e-6, "dead_time_s": 1e-6},
    "frame_length": 4194304,
    "seed": 7,
    "mode": "monte_carlo",
    "oversampling": 16,
    "window_fraction": 0.125,
    "window_alignment": "leading"
  }
}
)"},
        {"paper_bicmos", R"({
  "type": "scenario",
  "demodulator": "mrr",
  "ring": {"fsr_hz": 120.1e9, "fwhm_hz": 1.3e9, "extinction_db": 27.3},
  "link": {"mu": 0.1, "symbol_rate_hz": 1e9, "total_loss_db": 27.7, "demod_insertion_db": 17.8},
  "extinction_db": 27.3,
  "spad": {"eta": 0.1, "dark_cps": 550, "afterpulse_prob": 8e-4, "detrap_time_s": 100e-6, "dead_time_s": 1e-6},
  "mode": "analytic",
  "seed": 1
}
)"},
        {"paper_keyrate", R"({
  "type": "scenario",
  "demodulator": "mrr",
  "ring": {"fsr_hz": 120.1e9, "fwhm_hz": 1.3e9, "extinction_db": 23.7},
  "link": {"mu": 0.1, "symbol_rate_hz": 1e9, "total_loss_db": 26.6, "demod_insertion_db": 16.7},
  "extinction_db": 23.7,
  "spad": {"eta": 0.1, "dark_cps": 550, "afterpulse_prob": 8e-4, "detrap_time_s": 100e-6, "dead_time_s": 1e-6},
  "mode": "analytic",
  "seed": 1,
  "f_ec": 1.16
}
)"},
    };
    return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, text] : preset_table()) names.push_back(name);
    return names;
}

const std::string& preset_json(const std::string& name) {
    const auto& presets = preset_table();
    const auto it = presets.find(name);
    if (it == presets.end()) {
        std::string known;
        for (const auto& [n, text] : presets) {
            if (!known.empty()) known += ", ";
            known += n;
        }
        throw missing_file_error("unknown preset '" + name + "' (shipped: " + known + ")");
    }
    return it->second;
}

}  // namespace ringdps
