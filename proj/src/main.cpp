#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <system_error>

#include <CLI11.hpp>

#include "ringdps/errors.hpp"
#include "ringdps/io.hpp"

namespace {

using namespace ringdps;

// --out with a bare filename lands in $RINGDPS_OUT_DIR when that is set;
// paths with a directory component are taken as given.
std::string resolve_out(const std::string& out) {
    if (out.empty() || out.find('/') != std::string::npos) return out;
    const char* dir = std::getenv("RINGDPS_OUT_DIR");
    if (!dir || !*dir) return out;
    return std::string(dir) + "/" + out;
}

// Config arguments name either a file or a shipped preset.
std::string load_config_text(const std::string& arg, std::string* origin) {
    std::ifstream in(arg, std::ios::binary);
    if (in) {
        std::ostringstream buf;
        buf << in.rdbuf();
        *origin = arg;
        return buf.str();
    }
    if (arg.find('/') != std::string::npos ||
        (arg.size() > 5 && arg.substr(arg.size() - 5) == ".json"))
        throw missing_file_error("cannot open config file " + arg);
    *origin = "preset:" + arg;
    return preset_json(arg);
}

RunMode mode_from_flag(const std::string& flag) {
    if (flag == "analytic") return RunMode::analytic;
    if (flag == "mc" || flag == "monte_carlo") return RunMode::monte_carlo;
    return RunMode::both;
}

void emit_results(const ResultTable& table, const RunManifest& manifest,
                  const std::string& out) {
    if (out.empty()) {
        std::cout << format_results(table, manifest);
        return;
    }
    // The file never names its own path, so the bytes depend only on the
    // resolved config, the seed and the timestamp line.
    const std::string path = resolve_out(out);
    write_results(table, manifest, path);
    std::cerr << "wrote " << path << "\n";
}

struct RunFlags {
    std::string config;
    std::string out;
    std::string mode;
    std::uint64_t seed = 0;
    bool strict = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags, const char* config_help) {
    cmd->add_option("config", flags.config, config_help)->required();
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_option("--mode", flags.mode, "override the run mode")
        ->check(CLI::IsMember({"analytic", "mc", "monte_carlo", "both"}));
    cmd->add_flag("--strict", flags.strict, "reject unknown config keys");
    cmd->add_option("--out", flags.out, "output file (default: stdout)");
}

int cmd_simulate(const RunFlags& flags, bool seed_set) {
    std::string warnings, origin;
    const std::string text = load_config_text(flags.config, &origin);
    ParsedConfig parsed = parse_config_text(text, flags.strict, &warnings, origin);
    if (!warnings.empty()) std::cerr << warnings;

    auto* config = std::get_if<ScenarioConfig>(&parsed);
    if (!config)
        throw invariant_error(
            "simulate expects a scenario config; use the sweep command for sweeps");
    if (seed_set) config->seed = flags.seed;
    if (!flags.mode.empty()) config->mode = mode_from_flag(flags.mode);

    const ResultTable table = run_scenario(*config);
    emit_results(table, make_manifest(config_to_json(*config), config->seed),
                 flags.out);
    return 0;
}

int cmd_sweep(const RunFlags& flags, bool seed_set) {
    std::string warnings, origin;
    const std::string text = load_config_text(flags.config, &origin);
    ParsedConfig parsed = parse_config_text(text, flags.strict, &warnings, origin);
    if (!warnings.empty()) std::cerr << warnings;

    auto* spec = std::get_if<SweepSpec>(&parsed);
    if (!spec)
        throw invariant_error(
            "sweep expects a sweep config; use the simulate command for scenarios");
    if (seed_set) spec->base.seed = flags.seed;
    if (!flags.mode.empty()) spec->base.mode = mode_from_flag(flags.mode);

    const ResultTable table = sweep(*spec);
    emit_results(table, make_manifest(config_to_json(*spec), spec->base.seed),
                 flags.out);
    return 0;
}

int cmd_respond(const std::string& config_arg, double from_ghz, double to_ghz,
                double step_ghz, bool strict, const std::string& out) {
    if (!(step_ghz > 0.0))
        throw invariant_error("respond: --step must be positive");
    if (!(to_ghz >= from_ghz))
        throw invariant_error("respond: --to must be >= --from");
    const auto count =
        static_cast<std::size_t>((to_ghz - from_ghz) / step_ghz + 1.5);
    if (count > 2000000)
        throw invariant_error("respond: grid exceeds 2e6 points");

    std::string warnings, origin;
    const std::string text = load_config_text(config_arg, &origin);
    ParsedConfig parsed = parse_config_text(text, strict, &warnings, origin);
    if (!warnings.empty()) std::cerr << warnings;
    auto* config = std::get_if<ScenarioConfig>(&parsed);
    if (!config)
        throw invariant_error("respond expects a scenario config");

    SpectrumTable table;
    if (config->demodulator == Demodulator::mrr) {
        RingModel model = fit_ring_params(config->ring.fsr_hz, config->ring.fwhm_hz,
                                          config->ring.extinction_db);
        model.resonance_offset_hz = config->ring.resonance_offset_hz;
        for (std::size_t i = 0; i < count; ++i) {
            const double f_hz = (from_ghz + static_cast<double>(i) * step_ghz) * 1e9;
            table.detuning_hz.push_back(f_hz);
            table.transmission_db.push_back(ring_transmission_db(model, f_hz));
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            const double f_hz = (from_ghz + static_cast<double>(i) * step_ghz) * 1e9;
            const double p = std::norm(mzi_response(config->mzi, f_hz));
            table.detuning_hz.push_back(f_hz);
            table.transmission_db.push_back(10.0 * std::log10(std::max(p, 1e-300)));
        }
    }

    RunManifest manifest = make_manifest(config_to_json(*config), config->seed);
    if (out.empty()) {
        std::cout << "detuning_ghz,transmission_db\n";
        for (std::size_t i = 0; i < table.detuning_hz.size(); ++i) {
            std::cout << format_double(table.detuning_hz[i] / 1e9) << ","
                      << format_double(table.transmission_db[i]) << "\n";
        }
        return 0;
    }
    const std::string path = resolve_out(out);
    write_spectrum(table, path, manifest);
    std::cerr << "wrote " << path << "\n";
    return 0;
}

int cmd_fit(const std::string& spectrum_path, double max_rms,
            const std::string& out) {
    const SpectrumTable table = read_spectrum(spectrum_path);
    const RingFit fit = fit_to_measurement(table, max_rms);
    const RingFigures fig = ring_figures(fit.model);

    std::ostringstream report;
    report << "fsr_ghz=" << format_double(fit.model.fsr_hz / 1e9) << "\n"
           << "fwhm_ghz=" << format_double(fig.fwhm_hz / 1e9) << "\n"
           << "extinction_db=" << format_double(fig.extinction_db) << "\n"
           << "finesse=" << format_double(fig.finesse) << "\n"
           << "resonance_offset_ghz="
           << format_double(fit.model.resonance_offset_hz / 1e9) << "\n"
           << "baseline_db=" << format_double(fit.baseline_db) << "\n"
           << "rms_residual_db=" << format_double(fit.rms_residual_db) << "\n"
           << "t_self=" << format_double(fit.model.t_self) << "\n"
           << "a_rt=" << format_double(fit.model.a_rt) << "\n"
           << "photon_lifetime_ps="
           << format_double(ring_photon_lifetime_s(fit.model) * 1e12) << "\n";
    std::cout << report.str();

    if (!out.empty()) {
        const std::string path = resolve_out(out);
        std::ofstream f(path, std::ios::binary);
        if (!f) throw io_error("cannot write fit report to " + path);
        f << report.str();
        std::cerr << "wrote " << path << "\n";
    }
    return 0;
}

int cmd_keyrate(double qber, double loss_db, double insertion_db, double mu,
                double symbol_rate_hz, double eta, double dark_cps, double f_ec,
                const std::string& out) {
    LinkParams link;
    link.mu = mu;
    link.symbol_rate_hz = symbol_rate_hz;
    link.total_loss_db = loss_db;
    link.demod_insertion_db = insertion_db;
    SpadModel spad;
    spad.eta = eta;
    spad.dark_cps = dark_cps;

    const KeyRateReport rep = secure_rate(link, spad, qber, f_ec);
    const BudgetReport budget = link_budget(loss_db, insertion_db);

    std::ostringstream report;
    report << "qber=" << format_double(rep.qber_used) << "\n"
           << "sifted_rate_bps=" << format_double(rep.sifted_rate_bps) << "\n"
           << "secure_fraction=" << format_double(rep.secure_fraction) << "\n"
           << "secure_rate_bps=" << format_double(rep.secure_rate_bps) << "\n"
           << "secure_bits_per_symbol="
           << format_double(rep.secure_bits_per_symbol) << "\n"
           << "channel_budget_db=" << format_double(budget.budget_db) << "\n";
    std::cout << report.str();

    if (!out.empty()) {
        const std::string path = resolve_out(out);
        std::ofstream f(path, std::ios::binary);
        if (!f) throw io_error("cannot write keyrate report to " + path);
        f << report.str();
        std::cerr << "wrote " << path << "\n";
    }
    return 0;
}

int cmd_presets(const std::string& dir) {
    if (dir.empty()) {
        for (const auto& name : preset_names()) std::cout << name << "\n";
        return 0;
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create directory " + dir + ": " + ec.message());
    for (const auto& name : preset_names()) {
        const std::string path = dir + "/" + name + ".json";
        std::ofstream f(path, std::ios::binary);
        if (!f) throw io_error("cannot write preset to " + path);
        f << preset_json(name);
        std::cerr << "wrote " << path << "\n";
    }
    return 0;
}

int run_cli(int argc, char** argv) {
    CLI::App app{
        "ring-demodulated differential-phase-shift link simulator\n"
        "configs are JSON files or shipped preset names (see `presets`)"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run one scenario (analytic/mc/both)");
    RunFlags sim_flags;
    add_run_flags(sim, sim_flags, "scenario config file or preset name");

    auto* swp = app.add_subcommand("sweep", "run a parameter sweep");
    RunFlags swp_flags;
    add_run_flags(swp, swp_flags, "sweep config file or preset name");

    auto* rsp = app.add_subcommand("respond",
                                   "tabulate the demodulator transfer function");
    std::string rsp_config, rsp_out;
    double rsp_from = -10.0, rsp_to = 10.0, rsp_step = 0.01;
    bool rsp_strict = false;
    rsp->add_option("config", rsp_config, "scenario config file or preset name")
        ->required();
    rsp->add_option("--from", rsp_from, "start detuning in GHz")->required();
    rsp->add_option("--to", rsp_to, "end detuning in GHz")->required();
    rsp->add_option("--step", rsp_step, "grid step in GHz")->required();
    rsp->add_flag("--strict", rsp_strict, "reject unknown config keys");
    rsp->add_option("--out", rsp_out, "output file (default: stdout)");

    auto* fit = app.add_subcommand("fit", "fit a ring model to a measured spectrum");
    std::string fit_path, fit_out;
    double fit_max_rms = 3.0;
    fit->add_option("spectrum", fit_path, "csv spectrum file")->required();
    fit->add_option("--max-rms", fit_max_rms, "residual threshold in dB RMS");
    fit->add_option("--out", fit_out, "also write the report to a file");

    auto* key = app.add_subcommand("keyrate", "secure-key-rate report");
    double key_qber = 0.0, key_loss = 0.0, key_insertion = 16.7;
    double key_mu = 0.1, key_rsym = 1e9, key_eta = 0.1, key_dark = 550.0;
    double key_fec = 1.16;
    std::string key_out;
    key->add_option("--qber", key_qber, "error ratio as a fraction")->required();
    key->add_option("--loss", key_loss, "total optical loss in dB")->required();
    key->add_option("--insertion", key_insertion, "demodulator insertion loss in dB");
    key->add_option("--mu", key_mu, "mean photons per symbol");
    key->add_option("--symbol-rate", key_rsym, "symbol rate in Hz");
    key->add_option("--eta", key_eta, "detector efficiency");
    key->add_option("--dark", key_dark, "dark counts per second");
    key->add_option("--f-ec", key_fec, "error-correction inefficiency");
    key->add_option("--out", key_out, "also write the report to a file");

    auto* pre = app.add_subcommand("presets", "list shipped presets or write them out");
    std::string pre_dir;
    pre->add_option("--dir", pre_dir, "write <name>.json files into this directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(exit_code::usage);
    }

    if (app.got_subcommand(sim))
        return cmd_simulate(sim_flags, sim->count("--seed") > 0);
    if (app.got_subcommand(swp))
        return cmd_sweep(swp_flags, swp->count("--seed") > 0);
    if (app.got_subcommand(rsp))
        return cmd_respond(rsp_config, rsp_from, rsp_to, rsp_step, rsp_strict, rsp_out);
    if (app.got_subcommand(fit))
        return cmd_fit(fit_path, fit_max_rms, fit_out);
    if (app.got_subcommand(key))
        return cmd_keyrate(key_qber, key_loss, key_insertion, key_mu, key_rsym,
                           key_eta, key_dark, key_fec, key_out);
    if (app.got_subcommand(pre))
        return cmd_presets(pre_dir);
    return static_cast<int>(exit_code::usage);
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const ringdps::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ringdps::exit_code::usage);
    }
}
