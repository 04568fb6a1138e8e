#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ringdps/qkd.hpp"

namespace ringdps {

enum class Demodulator { mrr, mzi };
enum class RunMode { analytic, monte_carlo, both };

// Ring specified through spectral figures of merit; (t_self, a_rt) are
// solved at load time so configs stay in measurement units.
struct RingSpec {
    double fsr_hz = 120.1e9;
    double fwhm_hz = 1.3e9;
    double extinction_db = 23.7;
    double resonance_offset_hz = 0.0;
};

struct ScenarioConfig {
    Demodulator demodulator = Demodulator::mrr;
    RingSpec ring;
    MziModel mzi;
    LinkParams link;
    // Set when the config names an extinction explicitly; otherwise the
    // analytic path measures the demodulator's own extinction.
    std::optional<double> extinction_db_override;
    SpadModel spad;
    std::uint64_t frame_length = 1u << 20;   // total symbols for Monte-Carlo
    std::uint64_t seed = 1;
    RunMode mode = RunMode::analytic;
    unsigned oversampling = 32;
    PulseShape pulse_shape = PulseShape::rectangular;
    double window_fraction = 1.0;
    WindowAlignment window_alignment = WindowAlignment::centered;
    double carrier_detuning_hz = 0.0;
    int channel_index = 0;                   // whole-FSR carrier steps
    double f_ec = 1.16;

    double effective_carrier_hz() const;
    void validate() const;
};

enum class SweepVariable { extinction_db, total_loss_db, carrier_detuning_hz, channel_index };

struct SweepSpec {
    SweepVariable variable = SweepVariable::extinction_db;
    std::vector<double> values;
    ScenarioConfig base;

    void validate() const;
};

struct ResultRow {
    double value = 0.0;                 // swept value (total loss for single runs)
    double qber = 0.0;
    double qber_sigma = 0.0;            // binomial estimate, 0 for analytic rows
    double raw_rate_cps = 0.0;
    double secure_bits_per_symbol = 0.0;
    std::string mode;                    // "analytic" or "monte_carlo"
    std::uint64_t seed = 0;
    std::string status = "ok";           // "ok", "warn:...", "error:..."
};

// Fixed, versioned column schema (see write_results).
inline constexpr int kResultSchemaVersion = 1;
inline constexpr const char* kResultHeader =
    "value,qber,qber_sigma,raw_rate_cps,secure_bits_per_symbol,mode,seed,status";

struct ResultTable {
    std::vector<ResultRow> rows;
};

// Single scenario evaluation; mode `both` yields an analytic row followed by
// a monte_carlo row. The Monte-Carlo path follows the field chain
// (synthesize, filter, integrate, scale to the link budget, detect) in
// frames with persistent detector state; the analytic path feeds the
// demodulator's measured (or overridden) extinction into qber_analytic.
ResultTable run_scenario(const ScenarioConfig& config);

// Sweep evaluation. Loss and extinction sweeps give each point its own
// sub-seed; carrier and channel sweeps reuse the base seed for every point
// so the comparison across points shares its randomness and isolates the
// filter response (the QBER spread bands assume exactly this).
ResultTable sweep(const SweepSpec& spec);

// Effective demodulation extinction of a configured scenario (the value the
// analytic path would use). Exposed for reporting and tests.
ExtinctionEstimate scenario_extinction(const ScenarioConfig& config);

// Shipped presets, embedded so runs do not depend on the working directory.
// The same JSON is installed under configs/.
std::vector<std::string> preset_names();
const std::string& preset_json(const std::string& name);   // throws missing_file_error

}  // namespace ringdps
