#include "ringdps/io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "ringdps/errors.hpp"

namespace ringdps {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kReferenceWavelengthM = 1550e-9;

std::string join_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

// Unknown keys are a hard error in strict mode and a diagnostic otherwise.
void check_keys(const json& obj, std::initializer_list<const char*> known,
                const std::string& path, bool strict, std::string* warnings) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find_if(known.begin(), known.end(), [&](const char* k) {
                return key == k;
            }) != known.end())
            continue;
        const std::string full = join_path(path, key);
        if (strict) throw unknown_key_error("unknown key " + full);
        if (warnings) *warnings += "unknown key " + full + " (ignored)\n";
    }
}

double get_number(const json& obj, const char* key, double fallback,
                  const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number())
        throw syntax_error("expected a number at " + join_path(path, key));
    return it->get<double>();
}

std::uint64_t get_uint(const json& obj, const char* key, std::uint64_t fallback,
                       const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number_unsigned())
        throw syntax_error("expected a non-negative integer at " + join_path(path, key));
    return it->get<std::uint64_t>();
}

int get_int(const json& obj, const char* key, int fallback, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number_integer())
        throw syntax_error("expected an integer at " + join_path(path, key));
    return it->get<int>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback,
                       const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_string())
        throw syntax_error("expected a string at " + join_path(path, key));
    return it->get<std::string>();
}

[[noreturn]] void bad_value(const std::string& path, const char* key,
                            const std::string& got, const char* allowed) {
    throw invariant_error(join_path(path, key) + " must be one of " + allowed +
                          " (got \"" + got + "\")");
}

RunMode parse_mode(const std::string& text, const std::string& path, const char* key) {
    if (text == "analytic") return RunMode::analytic;
    if (text == "monte_carlo" || text == "mc") return RunMode::monte_carlo;
    if (text == "both") return RunMode::both;
    bad_value(path, key, text, "analytic|monte_carlo|both");
}

ScenarioConfig parse_scenario(const json& obj, const std::string& path, bool strict,
                              std::string* warnings, bool top_level) {
    if (!obj.is_object())
        throw syntax_error("expected an object at " +
                           (path.empty() ? std::string("top level") : path));

    ScenarioConfig config;
    std::initializer_list<const char*> known = {
        "type",           "demodulator", "ring",
        "mzi",            "link",        "extinction_db",
        "spad",           "frame_length", "seed",
        "mode",           "oversampling", "pulse_shape",
        "window_fraction", "window_alignment", "carrier_detuning_hz",
        "channel_index",  "f_ec"};
    check_keys(obj, known, path, strict, warnings);
    if (!top_level && obj.contains("type"))
        throw syntax_error("\"type\" belongs to the top level, not " + path);

    const std::string demod = get_string(obj, "demodulator", "mrr", path);
    if (demod == "mrr") {
        config.demodulator = Demodulator::mrr;
    } else if (demod == "mzi") {
        config.demodulator = Demodulator::mzi;
    } else {
        bad_value(path, "demodulator", demod, "mrr|mzi");
    }

    if (const auto it = obj.find("ring"); it != obj.end()) {
        const std::string sub = join_path(path, "ring");
        if (!it->is_object()) throw syntax_error("expected an object at " + sub);
        check_keys(*it, {"fsr_hz", "fwhm_hz", "extinction_db", "resonance_offset_hz"},
                   sub, strict, warnings);
        config.ring.fsr_hz = get_number(*it, "fsr_hz", config.ring.fsr_hz, sub);
        config.ring.fwhm_hz = get_number(*it, "fwhm_hz", config.ring.fwhm_hz, sub);
        config.ring.extinction_db =
            get_number(*it, "extinction_db", config.ring.extinction_db, sub);
        config.ring.resonance_offset_hz =
            get_number(*it, "resonance_offset_hz", config.ring.resonance_offset_hz, sub);
    }

    if (const auto it = obj.find("mzi"); it != obj.end()) {
        const std::string sub = join_path(path, "mzi");
        if (!it->is_object()) throw syntax_error("expected an object at " + sub);
        check_keys(*it, {"delay_s", "port", "phase_trim_rad", "excess_loss_db"},
                   sub, strict, warnings);
        config.mzi.delay_s = get_number(*it, "delay_s", config.mzi.delay_s, sub);
        const std::string port = get_string(
            *it, "port",
            config.mzi.port == MziPort::destructive ? "destructive" : "constructive",
            sub);
        if (port == "destructive") {
            config.mzi.port = MziPort::destructive;
        } else if (port == "constructive") {
            config.mzi.port = MziPort::constructive;
        } else {
            bad_value(sub, "port", port, "destructive|constructive");
        }
        config.mzi.phase_trim_rad =
            get_number(*it, "phase_trim_rad", config.mzi.phase_trim_rad, sub);
        config.mzi.excess_loss_db =
            get_number(*it, "excess_loss_db", config.mzi.excess_loss_db, sub);
    }

    if (const auto it = obj.find("link"); it != obj.end()) {
        const std::string sub = join_path(path, "link");
        if (!it->is_object()) throw syntax_error("expected an object at " + sub);
        check_keys(*it, {"mu", "symbol_rate_hz", "total_loss_db", "demod_insertion_db"},
                   sub, strict, warnings);
        config.link.mu = get_number(*it, "mu", config.link.mu, sub);
        config.link.symbol_rate_hz =
            get_number(*it, "symbol_rate_hz", config.link.symbol_rate_hz, sub);
        config.link.total_loss_db =
            get_number(*it, "total_loss_db", config.link.total_loss_db, sub);
        config.link.demod_insertion_db =
            get_number(*it, "demod_insertion_db", config.link.demod_insertion_db, sub);
    }

    if (obj.contains("extinction_db"))
        config.extinction_db_override = get_number(obj, "extinction_db", 0.0, path);

    if (const auto it = obj.find("spad"); it != obj.end()) {
        const std::string sub = join_path(path, "spad");
        if (!it->is_object()) throw syntax_error("expected an object at " + sub);
        check_keys(*it,
                   {"eta", "dark_cps", "afterpulse_prob", "detrap_time_s", "dead_time_s"},
                   sub, strict, warnings);
        config.spad.eta = get_number(*it, "eta", config.spad.eta, sub);
        config.spad.dark_cps = get_number(*it, "dark_cps", config.spad.dark_cps, sub);
        config.spad.afterpulse_prob =
            get_number(*it, "afterpulse_prob", config.spad.afterpulse_prob, sub);
        config.spad.detrap_time_s =
            get_number(*it, "detrap_time_s", config.spad.detrap_time_s, sub);
        config.spad.dead_time_s =
            get_number(*it, "dead_time_s", config.spad.dead_time_s, sub);
    }

    config.frame_length = get_uint(obj, "frame_length", config.frame_length, path);
    config.seed = get_uint(obj, "seed", config.seed, path);
    config.mode = parse_mode(get_string(obj, "mode", "analytic", path), path, "mode");

    const auto os = get_uint(obj, "oversampling", config.oversampling, path);
    config.oversampling = static_cast<unsigned>(os);

    const std::string shape = get_string(obj, "pulse_shape", "rectangular", path);
    if (shape == "rectangular") {
        config.pulse_shape = PulseShape::rectangular;
    } else if (shape == "raised_cosine") {
        config.pulse_shape = PulseShape::raised_cosine;
    } else {
        bad_value(path, "pulse_shape", shape, "rectangular|raised_cosine");
    }

    config.window_fraction =
        get_number(obj, "window_fraction", config.window_fraction, path);
    const std::string align = get_string(obj, "window_alignment", "centered", path);
    if (align == "centered") {
        config.window_alignment = WindowAlignment::centered;
    } else if (align == "leading") {
        config.window_alignment = WindowAlignment::leading;
    } else {
        bad_value(path, "window_alignment", align, "centered|leading");
    }

    config.carrier_detuning_hz =
        get_number(obj, "carrier_detuning_hz", config.carrier_detuning_hz, path);
    config.channel_index = get_int(obj, "channel_index", config.channel_index, path);
    config.f_ec = get_number(obj, "f_ec", config.f_ec, path);

    config.validate();
    return config;
}

SweepSpec parse_sweep(const json& obj, bool strict, std::string* warnings) {
    SweepSpec spec;
    check_keys(obj, {"type", "variable", "values", "base"}, "", strict, warnings);

    const std::string var = get_string(obj, "variable", "", "");
    if (var == "extinction_db") {
        spec.variable = SweepVariable::extinction_db;
    } else if (var == "total_loss_db") {
        spec.variable = SweepVariable::total_loss_db;
    } else if (var == "carrier_detuning_hz") {
        spec.variable = SweepVariable::carrier_detuning_hz;
    } else if (var == "channel_index") {
        spec.variable = SweepVariable::channel_index;
    } else {
        bad_value("", "variable", var,
                  "extinction_db|total_loss_db|carrier_detuning_hz|channel_index");
    }

    const auto values = obj.find("values");
    if (values == obj.end() || !values->is_array())
        throw syntax_error("expected an array at values");
    for (const auto& v : *values) {
        if (!v.is_number()) throw syntax_error("expected numbers in values");
        spec.values.push_back(v.get<double>());
    }

    const auto base = obj.find("base");
    if (base == obj.end())
        throw syntax_error("sweep config needs a base scenario object");
    spec.base = parse_scenario(*base, "base", strict, warnings, false);

    spec.validate();
    return spec;
}

ojson scenario_to_jobj(const ScenarioConfig& c, bool with_type) {
    ojson o;
    if (with_type) o["type"] = "scenario";
    o["demodulator"] = c.demodulator == Demodulator::mrr ? "mrr" : "mzi";
    o["ring"] = {{"fsr_hz", c.ring.fsr_hz},
                 {"fwhm_hz", c.ring.fwhm_hz},
                 {"extinction_db", c.ring.extinction_db},
                 {"resonance_offset_hz", c.ring.resonance_offset_hz}};
    o["mzi"] = {{"delay_s", c.mzi.delay_s},
                {"port", c.mzi.port == MziPort::destructive ? "destructive"
                                                            : "constructive"},
                {"phase_trim_rad", c.mzi.phase_trim_rad},
                {"excess_loss_db", c.mzi.excess_loss_db}};
    o["link"] = {{"mu", c.link.mu},
                 {"symbol_rate_hz", c.link.symbol_rate_hz},
                 {"total_loss_db", c.link.total_loss_db},
                 {"demod_insertion_db", c.link.demod_insertion_db}};
    if (c.extinction_db_override) o["extinction_db"] = *c.extinction_db_override;
    o["spad"] = {{"eta", c.spad.eta},
                 {"dark_cps", c.spad.dark_cps},
                 {"afterpulse_prob", c.spad.afterpulse_prob},
                 {"detrap_time_s", c.spad.detrap_time_s},
                 {"dead_time_s", c.spad.dead_time_s}};
    o["frame_length"] = c.frame_length;
    o["seed"] = c.seed;
    switch (c.mode) {
        case RunMode::analytic: o["mode"] = "analytic"; break;
        case RunMode::monte_carlo: o["mode"] = "monte_carlo"; break;
        case RunMode::both: o["mode"] = "both"; break;
    }
    o["oversampling"] = c.oversampling;
    o["pulse_shape"] =
        c.pulse_shape == PulseShape::rectangular ? "rectangular" : "raised_cosine";
    o["window_fraction"] = c.window_fraction;
    o["window_alignment"] =
        c.window_alignment == WindowAlignment::centered ? "centered" : "leading";
    o["carrier_detuning_hz"] = c.carrier_detuning_hz;
    o["channel_index"] = c.channel_index;
    o["f_ec"] = c.f_ec;
    return o;
}

std::string sanitize_field(std::string text) {
    for (char& ch : text) {
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    }
    return text;
}

}  // namespace

ParsedConfig parse_config_text(const std::string& text, bool strict,
                               std::string* warnings, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw syntax_error(origin + ": " + e.what());
    }
    if (!root.is_object())
        throw syntax_error(origin + ": top level must be an object");

    const std::string type = get_string(root, "type", "", "");
    if (type == "scenario")
        return parse_scenario(root, "", strict, warnings, true);
    if (type == "sweep")
        return parse_sweep(root, strict, warnings);
    if (type.empty())
        throw syntax_error(origin + ": missing \"type\" (scenario or sweep)");
    bad_value("", "type", type, "scenario|sweep");
}

ParsedConfig parse_config(const std::string& path, bool strict, std::string* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw missing_file_error("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), strict, warnings, path);
}

std::string config_to_json(const ScenarioConfig& config) {
    return scenario_to_jobj(config, true).dump(2) + "\n";
}

std::string config_to_json(const SweepSpec& spec) {
    ojson o;
    o["type"] = "sweep";
    switch (spec.variable) {
        case SweepVariable::extinction_db: o["variable"] = "extinction_db"; break;
        case SweepVariable::total_loss_db: o["variable"] = "total_loss_db"; break;
        case SweepVariable::carrier_detuning_hz:
            o["variable"] = "carrier_detuning_hz";
            break;
        case SweepVariable::channel_index: o["variable"] = "channel_index"; break;
    }
    o["values"] = spec.values;
    o["base"] = scenario_to_jobj(spec.base, false);
    return o.dump(2) + "\n";
}

RunManifest make_manifest(const std::string& config_json, std::uint64_t seed) {
    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.seed = seed;

    // Keep the config echo on one line so the manifest block stays
    // line-oriented.
    try {
        manifest.config_json = json::parse(config_json).dump();
    } catch (const json::parse_error&) {
        manifest.config_json = config_json;
        for (char& ch : manifest.config_json) {
            if (ch == '\n' || ch == '\r') ch = ' ';
        }
    }

    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    manifest.timestamp = buf;
    return manifest;
}

std::string format_results(const ResultTable& table, const RunManifest& manifest) {
    std::string out;
    out += std::string("# ") + kToolName + " " + manifest.tool_version + "\n";
    out += "# schema result-v" + std::to_string(kResultSchemaVersion) + "\n";
    out += "# seed " + std::to_string(manifest.seed) + "\n";
    out += "# timestamp " + manifest.timestamp + "\n";
    out += "# config " + manifest.config_json + "\n";
    out += kResultHeader;
    out += "\n";
    for (const auto& row : table.rows) {
        out += format_double(row.value);
        out += ",";
        out += format_double(row.qber);
        out += ",";
        out += format_double(row.qber_sigma);
        out += ",";
        out += format_double(row.raw_rate_cps);
        out += ",";
        out += format_double(row.secure_bits_per_symbol);
        out += ",";
        out += row.mode;
        out += ",";
        out += std::to_string(row.seed);
        out += ",";
        out += sanitize_field(row.status);
        out += "\n";
    }
    return out;
}

void write_results(const ResultTable& table, const RunManifest& manifest,
                   const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("cannot write results to " + path);
    out << format_results(table, manifest);
    if (!out)
        throw io_error("write failed for " + path);
}

SpectrumTable read_spectrum(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw missing_file_error("cannot open spectrum file " + path);

    SpectrumTable table;
    enum class Axis { none, detuning_ghz, wavelength_nm } axis = Axis::none;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        const std::string where = path + ":" + std::to_string(line_no);
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw syntax_error(where + ": expected two comma-separated columns");
        const std::string left = line.substr(0, comma);
        const std::string right = line.substr(comma + 1);

        if (axis == Axis::none) {
            // header row names the abscissa
            if (left.find("detuning_ghz") != std::string::npos) {
                axis = Axis::detuning_ghz;
                continue;
            }
            if (left.find("wavelength_nm") != std::string::npos) {
                axis = Axis::wavelength_nm;
                continue;
            }
            throw syntax_error(where +
                               ": header must name detuning_ghz or wavelength_nm");
        }

        char* end = nullptr;
        const double x = std::strtod(left.c_str(), &end);
        if (end == left.c_str())
            throw syntax_error(where + ": bad number in first column");
        end = nullptr;
        const double y = std::strtod(right.c_str(), &end);
        if (end == right.c_str())
            throw syntax_error(where + ": bad number in second column");

        double detuning_hz;
        if (axis == Axis::detuning_ghz) {
            detuning_hz = x * 1e9;
        } else {
            if (!(x > 0.0))
                throw syntax_error(where + ": wavelength must be positive");
            detuning_hz =
                kSpeedOfLight / (x * 1e-9) - kSpeedOfLight / kReferenceWavelengthM;
        }
        table.detuning_hz.push_back(detuning_hz);
        table.transmission_db.push_back(y);
    }
    if (axis == Axis::none)
        throw syntax_error(path + ": no header row found");

    // wavelength tables arrive with descending frequency; normalize order
    std::vector<std::size_t> order(table.detuning_hz.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return table.detuning_hz[a] < table.detuning_hz[b];
    });
    SpectrumTable sorted;
    sorted.detuning_hz.reserve(order.size());
    sorted.transmission_db.reserve(order.size());
    for (const std::size_t i : order) {
        sorted.detuning_hz.push_back(table.detuning_hz[i]);
        sorted.transmission_db.push_back(table.transmission_db[i]);
    }
    sorted.validate();
    return sorted;
}

void write_spectrum(const SpectrumTable& table, const std::string& path,
                    const RunManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("cannot write spectrum to " + path);
    out << "# " << kToolName << " " << manifest.tool_version << "\n";
    out << "# seed " << manifest.seed << "\n";
    out << "# timestamp " << manifest.timestamp << "\n";
    out << "# config " << manifest.config_json << "\n";
    out << "detuning_ghz,transmission_db\n";
    for (std::size_t i = 0; i < table.detuning_hz.size(); ++i) {
        out << format_double(table.detuning_hz[i] / 1e9) << ","
            << format_double(table.transmission_db[i]) << "\n";
    }
    if (!out)
        throw io_error("write failed for " + path);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace ringdps
