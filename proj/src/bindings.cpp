#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ringdps/io.hpp"

namespace py = pybind11;

namespace {

using namespace ringdps;

py::dict model_to_dict(const RingModel& m) {
    py::dict d;
    d["fsr_hz"] = m.fsr_hz;
    d["t_self"] = m.t_self;
    d["a_rt"] = m.a_rt;
    d["resonance_offset_hz"] = m.resonance_offset_hz;
    d["excess_loss_db"] = m.excess_loss_db;
    return d;
}

RingModel model_from_args(double fsr_hz, double t_self, double a_rt,
                          double resonance_offset_hz, double excess_loss_db) {
    RingModel m;
    m.fsr_hz = fsr_hz;
    m.t_self = t_self;
    m.a_rt = a_rt;
    m.resonance_offset_hz = resonance_offset_hz;
    m.excess_loss_db = excess_loss_db;
    m.validate();
    return m;
}

py::dict row_to_dict(const ResultRow& r) {
    py::dict d;
    d["value"] = r.value;
    d["qber"] = r.qber;
    d["qber_sigma"] = r.qber_sigma;
    d["raw_rate_cps"] = r.raw_rate_cps;
    d["secure_bits_per_symbol"] = r.secure_bits_per_symbol;
    d["mode"] = r.mode;
    d["seed"] = r.seed;
    d["status"] = r.status;
    return d;
}

py::list table_to_list(const ResultTable& t) {
    py::list rows;
    for (const auto& r : t.rows) rows.append(row_to_dict(r));
    return rows;
}

py::list run_config(const std::string& text, bool strict) {
    ParsedConfig parsed = parse_config_text(text, strict);
    if (auto* config = std::get_if<ScenarioConfig>(&parsed))
        return table_to_list(run_scenario(*config));
    return table_to_list(sweep(std::get<SweepSpec>(parsed)));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "ring-demodulated differential-phase-shift link simulator";

    m.def(
        "fit_ring",
        [](double fsr_hz, double fwhm_hz, double extinction_db) {
            return model_to_dict(fit_ring_params(fsr_hz, fwhm_hz, extinction_db));
        },
        py::arg("fsr_hz"), py::arg("fwhm_hz"), py::arg("extinction_db"),
        "solve ring couplings from spectral figures of merit");

    m.def(
        "ring_figures",
        [](double fsr_hz, double t_self, double a_rt) {
            const RingFigures f = ring_figures(model_from_args(fsr_hz, t_self, a_rt, 0, 0));
            py::dict d;
            d["fwhm_hz"] = f.fwhm_hz;
            d["extinction_db"] = f.extinction_db;
            d["finesse"] = f.finesse;
            return d;
        },
        py::arg("fsr_hz"), py::arg("t_self"), py::arg("a_rt"),
        "figures of merit of a ring model");

    m.def(
        "ring_transmission_db",
        [](double fsr_hz, double t_self, double a_rt, double detuning_hz,
           double resonance_offset_hz, double excess_loss_db) {
            return ring_transmission_db(
                model_from_args(fsr_hz, t_self, a_rt, resonance_offset_hz,
                                excess_loss_db),
                detuning_hz);
        },
        py::arg("fsr_hz"), py::arg("t_self"), py::arg("a_rt"), py::arg("detuning_hz"),
        py::arg("resonance_offset_hz") = 0.0, py::arg("excess_loss_db") = 0.0,
        "through-port power transmission in dB");

    m.def(
        "qber",
        [](double total_loss_db, double extinction_db, double mu,
           double symbol_rate_hz, double eta, double dark_cps, double afterpulse_prob,
           double detrap_time_s, double dead_time_s) {
            LinkParams link;
            link.mu = mu;
            link.symbol_rate_hz = symbol_rate_hz;
            link.total_loss_db = total_loss_db;
            link.extinction_db = extinction_db;
            SpadModel spad;
            spad.eta = eta;
            spad.dark_cps = dark_cps;
            spad.afterpulse_prob = afterpulse_prob;
            spad.detrap_time_s = detrap_time_s;
            spad.dead_time_s = dead_time_s;
            const QberBreakdown bd = qber_analytic(link, spad);
            py::dict d;
            d["qber"] = bd.qber;
            d["e_leak"] = bd.e_leak;
            d["e_dark"] = bd.e_dark;
            d["e_afterpulse"] = bd.e_afterpulse;
            d["raw_rate_cps"] = bd.raw_rate_cps;
            d["signal_rate_cps"] = bd.signal_rate_cps;
            return d;
        },
        py::arg("total_loss_db"), py::arg("extinction_db"), py::arg("mu") = 0.1,
        py::arg("symbol_rate_hz") = 1e9, py::arg("eta") = 0.1,
        py::arg("dark_cps") = 550.0, py::arg("afterpulse_prob") = 8e-4,
        py::arg("detrap_time_s") = 100e-6, py::arg("dead_time_s") = 1e-6,
        "analytic error-ratio breakdown for a link");

    m.def("secure_fraction", &secure_fraction, py::arg("qber"),
          py::arg("f_ec") = 1.16,
          "secure bits per sifted bit (may be negative)");
    m.def("binary_entropy", &binary_entropy, py::arg("x"));

    m.def(
        "link_budget",
        [](double total_loss_db, double demod_insertion_db, double saving_db) {
            const BudgetReport rep =
                link_budget(total_loss_db, demod_insertion_db, saving_db);
            py::dict d;
            d["budget_db"] = rep.budget_db;
            d["infeasible"] = rep.infeasible;
            return d;
        },
        py::arg("total_loss_db"), py::arg("demod_insertion_db"),
        py::arg("receiver_coupling_saving_db") = 0.0,
        "channel budget left after the demodulator");

    m.def(
        "keyrate",
        [](double qber, double total_loss_db, double f_ec, double mu,
           double symbol_rate_hz, double eta, double dark_cps) {
            LinkParams link;
            link.mu = mu;
            link.symbol_rate_hz = symbol_rate_hz;
            link.total_loss_db = total_loss_db;
            SpadModel spad;
            spad.eta = eta;
            spad.dark_cps = dark_cps;
            const KeyRateReport rep = secure_rate(link, spad, qber, f_ec);
            py::dict d;
            d["sifted_rate_bps"] = rep.sifted_rate_bps;
            d["secure_fraction"] = rep.secure_fraction;
            d["secure_rate_bps"] = rep.secure_rate_bps;
            d["secure_bits_per_symbol"] = rep.secure_bits_per_symbol;
            d["qber"] = rep.qber_used;
            return d;
        },
        py::arg("qber"), py::arg("total_loss_db"), py::arg("f_ec") = 1.16,
        py::arg("mu") = 0.1, py::arg("symbol_rate_hz") = 1e9, py::arg("eta") = 0.1,
        py::arg("dark_cps") = 550.0, "secure-key-rate report");

    m.def("preset_names", &preset_names, "shipped preset config names");
    m.def(
        "preset_json", [](const std::string& name) { return preset_json(name); },
        py::arg("name"), "shipped preset config text");
    m.def("run_config", &run_config, py::arg("config_text"), py::arg("strict") = true,
          "parse and run a scenario or sweep config, returning result rows");
    m.def(
        "run_preset",
        [](const std::string& name) { return run_config(preset_json(name), true); },
        py::arg("name"), "run a shipped preset end to end");

    m.attr("__version__") = kToolVersion;
}
