#pragma once

#include <string>
#include <variant>

#include "ringdps/scenario.hpp"

namespace ringdps {

inline constexpr const char* kToolName = "ringdps";
inline constexpr const char* kToolVersion = "1.0.0";

// Echo of a run for reproducibility: every result file embeds the resolved
// configuration and seed it was produced from.
struct RunManifest {
    std::string tool_version;
    std::string config_json;        // fully resolved, defaults expanded
    std::uint64_t seed = 0;
    std::string timestamp;          // ISO 8601 UTC; the only non-deterministic line
};

using ParsedConfig = std::variant<ScenarioConfig, SweepSpec>;

// Parse a scenario or sweep JSON file. strict rejects unknown keys with the
// offending key path; non-strict reports them on the warning stream.
ParsedConfig parse_config(const std::string& path, bool strict,
                          std::string* warnings = nullptr);
ParsedConfig parse_config_text(const std::string& text, bool strict,
                               std::string* warnings = nullptr,
                               const std::string& origin = "<inline>");

// Serialize a config back to canonical JSON (defaults expanded). parse of
// the output yields an identical resolved config.
std::string config_to_json(const ScenarioConfig& config);
std::string config_to_json(const SweepSpec& spec);

RunManifest make_manifest(const std::string& config_json, std::uint64_t seed);

// Write a result table: `#`-prefixed manifest block, fixed header, one line
// per row. Deterministic byte-for-byte apart from the timestamp line.
void write_results(const ResultTable& table, const RunManifest& manifest,
                   const std::string& path);
std::string format_results(const ResultTable& table, const RunManifest& manifest);

// Spectrum tables (`detuning_ghz,transmission_db` or
// `wavelength_nm,transmission_db`; wavelength converted against 1550 nm).
SpectrumTable read_spectrum(const std::string& path);
void write_spectrum(const SpectrumTable& table, const std::string& path,
                    const RunManifest& manifest);

// Shortest round-trip decimal formatting (std::to_chars), locale independent.
std::string format_double(double v);

}  // namespace ringdps
